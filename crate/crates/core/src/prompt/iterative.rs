use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::templates::ITERATIVE_TEMPLATE;
use super::PromptError;

pub const GENERATED_KEY: &str = "Generated Variations";
pub const REVIEW_KEY: &str = "Review Feedback";
pub const FINAL_KEY: &str = "Final Refined Variations";

const SQL_SLOT: &str = "<User's SQL Query Input>";

/// The three-step generate/review/refine prompt for one SQL query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativePrompt {
    pub system_text: String,
    pub user_sql: String,
}

impl IterativePrompt {
    pub fn new(sql: &str) -> Self {
        IterativePrompt {
            system_text: ITERATIVE_TEMPLATE.replace(SQL_SLOT, sql),
            user_sql: sql.to_string(),
        }
    }
}

/// Parsed three-step response: initial variations, per-variation feedback,
/// refined variations — three of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeResponse {
    pub initial: Vec<String>,
    pub feedback: Vec<String>,
    pub r#final: Vec<String>,
}

impl IterativeResponse {
    /// All six candidate utterances, initials first.
    pub fn candidates(&self) -> Vec<String> {
        self.initial
            .iter()
            .chain(self.r#final.iter())
            .cloned()
            .collect()
    }
}

/// Extract the three JSON objects from an LLM response, tolerating code
/// fences and surrounding prose.
pub fn parse_iterative_response(text: &str) -> Result<IterativeResponse, PromptError> {
    parse_with_mode(text, false)
}

/// Strict variant: the response must consist of exactly the three JSON
/// objects separated by whitespace, no fences or prose.
pub fn parse_iterative_response_strict(text: &str) -> Result<IterativeResponse, PromptError> {
    parse_with_mode(text, true)
}

fn parse_with_mode(text: &str, strict: bool) -> Result<IterativeResponse, PromptError> {
    let cleaned = if strict {
        text.to_string()
    } else {
        strip_fences(text)
    };
    let objects = scan_json_objects(&cleaned);
    if strict {
        let mut leftover = cleaned.clone();
        for (raw, _) in &objects {
            leftover = leftover.replacen(raw.as_str(), "", 1);
        }
        if objects.len() != 3 || !leftover.trim().is_empty() {
            return Err(PromptError::MalformedResponse {
                step: 1,
                reason: "strict mode requires exactly three bare JSON objects".to_string(),
            });
        }
    }

    let initial = extract_string_array(&objects, GENERATED_KEY, 1)?;
    let feedback = extract_feedback(&objects)?;
    let final_variations = extract_string_array(&objects, FINAL_KEY, 3)?;
    Ok(IterativeResponse {
        initial,
        feedback,
        r#final: final_variations,
    })
}

/// Render a well-formed three-step response; the inverse of
/// `parse_iterative_response` for synthetic fixtures and the mock backend.
pub fn render_iterative_response(response: &IterativeResponse) -> String {
    let feedback_map: serde_json::Map<String, Value> = response
        .feedback
        .iter()
        .enumerate()
        .map(|(i, f)| {
            (
                format!("Variation {}", i + 1),
                serde_json::json!({ "Feedback": f }),
            )
        })
        .collect();
    let step1 = serde_json::json!({ GENERATED_KEY: response.initial });
    let step2 = serde_json::json!({ REVIEW_KEY: feedback_map });
    let step3 = serde_json::json!({ FINAL_KEY: response.r#final });
    format!(
        "{}\n{}\n{}\n",
        serde_json::to_string_pretty(&step1).unwrap(),
        serde_json::to_string_pretty(&step2).unwrap(),
        serde_json::to_string_pretty(&step3).unwrap()
    )
}

fn strip_fences(text: &str) -> String {
    text.lines()
        .filter(|line| !line.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Top-level `{...}` spans that parse as JSON, in order of appearance.
/// Quotes and escapes are honored so braces inside strings don't confuse
/// the balance count.
fn scan_json_objects(text: &str) -> Vec<(String, Value)> {
    let bytes = text.as_bytes();
    let mut objects = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = find_balanced_end(text, i) {
                let raw = &text[i..=end];
                if let Ok(value) = serde_json::from_str::<Value>(raw) {
                    objects.push((raw.to_string(), value));
                    i = end + 1;
                    continue;
                }
            }
        }
        i += 1;
    }
    objects
}

fn find_balanced_end(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0i32;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + offset);
                }
            }
            _ => {}
        }
    }
    None
}

fn extract_string_array(
    objects: &[(String, Value)],
    key: &str,
    step: u8,
) -> Result<Vec<String>, PromptError> {
    let value = objects
        .iter()
        .find_map(|(_, v)| v.get(key))
        .ok_or_else(|| PromptError::MalformedResponse {
            step,
            reason: format!("missing {key:?}"),
        })?;
    let array = value
        .as_array()
        .ok_or_else(|| PromptError::MalformedResponse {
            step,
            reason: format!("{key:?} is not an array"),
        })?;
    let strings: Vec<String> = array
        .iter()
        .filter_map(|v| v.as_str().map(|s| s.to_string()))
        .collect();
    if strings.len() != 3 || strings.len() != array.len() {
        return Err(PromptError::MalformedResponse {
            step,
            reason: format!("{key:?} must hold exactly 3 strings, got {}", array.len()),
        });
    }
    Ok(strings)
}

fn extract_feedback(objects: &[(String, Value)]) -> Result<Vec<String>, PromptError> {
    let value = objects
        .iter()
        .find_map(|(_, v)| v.get(REVIEW_KEY))
        .ok_or_else(|| PromptError::MalformedResponse {
            step: 2,
            reason: format!("missing {REVIEW_KEY:?}"),
        })?;
    let map = value
        .as_object()
        .ok_or_else(|| PromptError::MalformedResponse {
            step: 2,
            reason: format!("{REVIEW_KEY:?} is not an object"),
        })?;
    let mut feedback = Vec::with_capacity(3);
    for i in 1..=3 {
        let entry = map
            .get(&format!("Variation {i}"))
            .and_then(|v| v.get("Feedback"))
            .and_then(|v| v.as_str())
            .ok_or_else(|| PromptError::MalformedResponse {
                step: 2,
                reason: format!("missing feedback for variation {i}"),
            })?;
        feedback.push(entry.to_string());
    }
    if map.len() != 3 {
        return Err(PromptError::MalformedResponse {
            step: 2,
            reason: format!("expected 3 feedback entries, got {}", map.len()),
        });
    }
    Ok(feedback)
}
