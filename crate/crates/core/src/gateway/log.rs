use serde::{Deserialize, Serialize};

use super::{GenerationRequest, GenerationResult};
use crate::text::sha256_hex;

/// One line of the per-call JSONL log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallLogEntry {
    pub request_id: String,
    pub model: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
    pub cost: f64,
    /// First 16 hex chars of the SHA-256 of system + user text.
    pub prompt_hash: String,
}

impl CallLogEntry {
    pub fn new(request: &GenerationRequest, result: &GenerationResult) -> Self {
        CallLogEntry {
            request_id: request.request_id.clone(),
            model: request.model.clone(),
            prompt_tokens: result.usage.prompt_tokens,
            completion_tokens: result.usage.completion_tokens,
            latency_ms: result.latency_ms,
            cost: result.cost,
            prompt_hash: prompt_hash(request),
        }
    }
}

pub fn prompt_hash(request: &GenerationRequest) -> String {
    sha256_hex(&format!("{}\u{0}{}", request.system_text, request.user_text))[..16].to_string()
}

/// Accumulated spend over a run; the total is the exact sum of per-entry
/// costs in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: Vec<CallLogEntry>,
}

impl CostLedger {
    pub fn push(&mut self, entry: CallLogEntry) {
        self.entries.push(entry);
    }

    pub fn total_cost(&self) -> f64 {
        self.entries.iter().map(|e| e.cost).sum()
    }

    pub fn total_usage(&self) -> (u64, u64) {
        (
            self.entries.iter().map(|e| e.prompt_tokens).sum(),
            self.entries.iter().map(|e| e.completion_tokens).sum(),
        )
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("log entry serialization"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<CallLogEntry>, _>>()?;
        Ok(CostLedger { entries })
    }
}
