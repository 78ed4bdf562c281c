//! Uniform client for chat-completion backends: a remote OpenAI-compatible
//! endpoint with bounded retries, and a deterministic in-process mock for
//! offline runs. Batches run with a bounded in-flight limit and return
//! results in request order.

mod log;
mod mock;
mod remote;

pub use log::{prompt_hash, CallLogEntry, CostLedger};
pub use mock::MockBackend;
pub use remote::{RemoteBackend, RemoteConfig, ENV_API_BASE, ENV_API_KEY, ENV_MODEL};

use futures::stream::StreamExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum GatewayError {
    #[error("authentication rejected: {0}")]
    AuthError(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport failure: {0}")]
    TransportError(String),
    #[error("response did not match the chat-completion schema: {0}")]
    ResponseSchemaError(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub request_id: String,
    pub model: String,
    pub system_text: String,
    pub user_text: String,
    pub max_tokens: u32,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Dollars per million tokens, input and output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

impl PriceTable {
    pub fn cost(&self, usage: &TokenUsage) -> f64 {
        usage.prompt_tokens as f64 * self.input_per_million / 1_000_000.0
            + usage.completion_tokens as f64 * self.output_per_million / 1_000_000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub request_id: String,
    pub text: String,
    pub usage: TokenUsage,
    pub latency_ms: u64,
    pub cost: f64,
}

/// The configured inference backend.
pub enum Backend {
    Mock(MockBackend),
    Remote(RemoteBackend),
}

impl Backend {
    pub async fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, GatewayError> {
        match self {
            Backend::Mock(mock) => mock.complete(request).await,
            Backend::Remote(remote) => remote.complete(request).await,
        }
    }

    /// Run requests with at most `concurrency_limit` in flight. Results come
    /// back in request order; individual failures are recorded in place and
    /// never abort the batch.
    pub async fn run_batch(
        &self,
        requests: &[GenerationRequest],
        concurrency_limit: usize,
    ) -> Vec<Result<GenerationResult, GatewayError>> {
        let limit = concurrency_limit.max(1);
        let calls: Vec<_> = requests.iter().map(|r| self.complete(r)).collect();
        futures::stream::iter(calls).buffered(limit).collect().await
    }
}
