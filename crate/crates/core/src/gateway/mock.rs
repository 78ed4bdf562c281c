use std::collections::HashMap;
use std::time::Duration;

use super::{GatewayError, GenerationRequest, GenerationResult, PriceTable, TokenUsage};
use crate::prompt::{render_iterative_response, IterativeResponse, FINAL_KEY};
use crate::text::{estimate_tokens, sha256_hex};

/// Deterministic offline backend.
///
/// Resolution order per request: a canned utterance keyed by the SHA-256 of
/// the seed SQL extracted from the prompt; a synthesized well-formed
/// three-step response when the prompt is an iterative one; otherwise a
/// fixed echo transform of the seed SQL. Identical requests always produce
/// identical results.
pub struct MockBackend {
    /// sha256(seed sql) -> canned utterance.
    pub canned: HashMap<String, String>,
    /// Simulated per-call latency; also reported as `latency_ms`.
    pub latency: Duration,
    pub prices: Option<PriceTable>,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend {
            canned: HashMap::new(),
            latency: Duration::ZERO,
            prices: None,
        }
    }
}

impl MockBackend {
    pub fn with_canned(mut self, entries: impl IntoIterator<Item = (String, String)>) -> Self {
        self.canned
            .extend(entries.into_iter().map(|(sql, text)| (sha256_hex(&sql), text)));
        self
    }

    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    pub async fn complete(
        &self,
        request: &GenerationRequest,
    ) -> Result<GenerationResult, GatewayError> {
        if !self.latency.is_zero() {
            tokio::time::sleep(self.latency).await;
        }
        let text = self.respond(request);
        let usage = TokenUsage {
            prompt_tokens: (estimate_tokens(&request.system_text)
                + estimate_tokens(&request.user_text)) as u64,
            completion_tokens: estimate_tokens(&text) as u64,
        };
        let cost = self.prices.map(|p| p.cost(&usage)).unwrap_or(0.0);
        Ok(GenerationResult {
            request_id: request.request_id.clone(),
            text,
            usage,
            latency_ms: self.latency.as_millis() as u64,
            cost,
        })
    }

    fn respond(&self, request: &GenerationRequest) -> String {
        if let Some(sql) = seed_sql_of(&request.user_text) {
            if let Some(canned) = self.canned.get(&sha256_hex(&sql)) {
                return canned.clone();
            }
            return echo_utterance(&sql);
        }
        if request.system_text.contains(FINAL_KEY) {
            let sql = iterative_sql_of(&request.system_text)
                .unwrap_or_else(|| request.user_text.clone());
            if let Some(canned) = self.canned.get(&sha256_hex(&sql)) {
                return canned.clone();
            }
            return render_iterative_response(&synthesize_variations(&sql));
        }
        echo_utterance(&request.user_text)
    }
}

/// The SQL of the final `SQL: ...\nQuestion:` block of a prefix prompt.
fn seed_sql_of(user_text: &str) -> Option<String> {
    let start = user_text.rfind("SQL: ")?;
    let rest = &user_text[start + 5..];
    let end = rest.find('\n')?;
    if !rest[end..].trim_start().starts_with("Question:") {
        return None;
    }
    Some(rest[..end].trim().to_string())
}

/// The SQL substituted into the iterative prompt's fill-in slot.
fn iterative_sql_of(system_text: &str) -> Option<String> {
    let marker = "fill out the form below based on the Original SQL Query input from the user:";
    let after = &system_text[system_text.find(marker)? + marker.len()..];
    let key = "\"Original SQL Query\": \"";
    let start = after.find(key)? + key.len();
    let end = after[start..].find("\",")?;
    Some(after[start..start + end].to_string())
}

fn echo_utterance(sql: &str) -> String {
    let words = crate::text::word_tokens(sql);
    let subject = words
        .iter()
        .skip(1)
        .find(|w| !matches!(w.as_str(), "count" | "distinct" | "all"))
        .cloned()
        .unwrap_or_else(|| "rows".to_string());
    format!("What are the {subject} values selected by this query? [{}]", &sha256_hex(sql)[..8])
}

fn synthesize_variations(sql: &str) -> IterativeResponse {
    let tag = &sha256_hex(sql)[..8];
    IterativeResponse {
        initial: (1..=3)
            .map(|i| format!("Initial phrasing {i} of the request behind `{sql}` [{tag}]"))
            .collect(),
        feedback: (1..=3)
            .map(|i| format!("Variation {i} is acceptable; tighten the wording."))
            .collect(),
        r#final: (1..=3)
            .map(|i| format!("Refined phrasing {i} of the request behind `{sql}` [{tag}]"))
            .collect(),
    }
}
