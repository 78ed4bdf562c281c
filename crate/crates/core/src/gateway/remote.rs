use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{GatewayError, GenerationRequest, GenerationResult, PriceTable, TokenUsage};

pub const ENV_API_BASE: &str = "SQL2TEXT_API_BASE";
pub const ENV_API_KEY: &str = "SQL2TEXT_API_KEY";
pub const ENV_MODEL: &str = "SQL2TEXT_MODEL";

const MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub api_key: String,
    pub prices: Option<PriceTable>,
    /// Base backoff delay; doubles per retry.
    pub backoff: Duration,
}

impl RemoteConfig {
    /// Read base URL and key from the environment.
    pub fn from_env() -> Result<Self, GatewayError> {
        let base_url = std::env::var(ENV_API_BASE).map_err(|_| {
            GatewayError::AuthError(format!("{ENV_API_BASE} is not set"))
        })?;
        let api_key = std::env::var(ENV_API_KEY).unwrap_or_default();
        Ok(RemoteConfig {
            base_url,
            api_key,
            prices: None,
            backoff: Duration::from_millis(200),
        })
    }
}

/// OpenAI-compatible chat-completions client with bounded retries on
/// transient failures. The request id rides in the protocol `user` field so
/// the server side can deduplicate retried calls.
pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::Client,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Deserialize)]
struct ChatMessage {
    content: String,
}

#[derive(Debug, Deserialize, Default)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        RemoteBackend {
            config,
            client: reqwest::Client::new(),
        }
    }

    pub async fn complete(
        &self,
        request: &GenerationRequest,
    ) -> Result<GenerationResult, GatewayError> {
        let url = format!(
            "{}/v1/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let mut messages = Vec::new();
        if !request.system_text.is_empty() {
            messages.push(json!({"role": "system", "content": request.system_text}));
        }
        messages.push(json!({"role": "user", "content": request.user_text}));
        let body = json!({
            "model": request.model,
            "messages": messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "user": request.request_id,
        });

        let started = Instant::now();
        let mut last_error = GatewayError::TransportError("no attempt made".to_string());
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                tokio::time::sleep(self.config.backoff * 2u32.pow(attempt - 1)).await;
            }
            let sent = self
                .client
                .post(&url)
                .bearer_auth(&self.config.api_key)
                .json(&body)
                .send()
                .await;
            let response = match sent {
                Ok(r) => r,
                Err(e) => {
                    last_error = GatewayError::TransportError(e.to_string());
                    continue;
                }
            };
            let status = response.status();
            if status.as_u16() == 401 || status.as_u16() == 403 {
                return Err(GatewayError::AuthError(format!("HTTP {status}")));
            }
            if status.as_u16() == 429 || status.is_server_error() {
                last_error = if status.as_u16() == 429 {
                    GatewayError::RateLimited {
                        attempts: attempt + 1,
                    }
                } else {
                    GatewayError::TransportError(format!("HTTP {status}"))
                };
                continue;
            }
            if !status.is_success() {
                return Err(GatewayError::TransportError(format!("HTTP {status}")));
            }
            let parsed: ChatResponse = response
                .json()
                .await
                .map_err(|e| GatewayError::ResponseSchemaError(e.to_string()))?;
            let choice = parsed
                .choices
                .into_iter()
                .next()
                .ok_or_else(|| GatewayError::ResponseSchemaError("no choices".to_string()))?;
            let usage = parsed.usage.unwrap_or_default();
            let usage = TokenUsage {
                prompt_tokens: usage.prompt_tokens,
                completion_tokens: usage.completion_tokens,
            };
            let cost = self.config.prices.map(|p| p.cost(&usage)).unwrap_or(0.0);
            return Ok(GenerationResult {
                request_id: request.request_id.clone(),
                text: choice.message.content,
                usage,
                latency_ms: started.elapsed().as_millis() as u64,
                cost,
            });
        }
        Err(last_error)
    }
}
