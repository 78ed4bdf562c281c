//! OpenAI-compatible mock endpoints backed by the deterministic in-process
//! mock, so remote-client code paths can be exercised offline.
//!
//! Models named `mock-flaky-<n>` fail with 503 until the nth attempt for a
//! given `user` value (the idempotency key), which is how retry behavior is
//! tested end to end.

use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use serde::Deserialize;
use serde_json::{json, Value};

use sql2text_core::gateway::{GenerationRequest, MockBackend};
use sql2text_core::metrics::{EmbeddingProvider, HashingProvider};

use crate::SharedState;

#[derive(Debug, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub user: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

pub async fn chat_completions(
    State(state): State<SharedState>,
    Json(request): Json<ChatRequest>,
) -> Result<Json<Value>, (StatusCode, Json<Value>)> {
    if let Some(rest) = request.model.strip_prefix("mock-flaky-") {
        let required: u32 = rest.parse().unwrap_or(2);
        let key = request.user.clone().unwrap_or_default();
        let mut attempts = state.flaky_attempts.lock().unwrap();
        let count = attempts.entry(key).or_insert(0);
        *count += 1;
        if *count < required {
            return Err((
                StatusCode::SERVICE_UNAVAILABLE,
                Json(json!({"error": {"message": "transient failure, retry"}})),
            ));
        }
    }
    if request.model == "mock-unauthorized" {
        return Err((
            StatusCode::UNAUTHORIZED,
            Json(json!({"error": {"message": "bad credentials"}})),
        ));
    }

    let system_text = request
        .messages
        .iter()
        .filter(|m| m.role == "system")
        .map(|m| m.content.clone())
        .collect::<Vec<_>>()
        .join("\n");
    let user_text = request
        .messages
        .iter()
        .filter(|m| m.role == "user")
        .map(|m| m.content.clone())
        .collect::<Vec<_>>()
        .join("\n");

    let mock = MockBackend::default();
    let generation = GenerationRequest {
        request_id: request.user.unwrap_or_default(),
        model: request.model.clone(),
        system_text,
        user_text,
        max_tokens: request.max_tokens.unwrap_or(256),
        temperature: request.temperature.unwrap_or(0.0),
    };
    let result = mock
        .complete(&generation)
        .await
        .expect("mock backend is infallible");

    Ok(Json(json!({
        "id": format!("mockcmpl-{}", &sql2text_core::text::sha256_hex(&result.text)[..12]),
        "object": "chat.completion",
        "created": 0,
        "model": request.model,
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": result.text },
            "finish_reason": "stop"
        }],
        "usage": {
            "prompt_tokens": result.usage.prompt_tokens,
            "completion_tokens": result.usage.completion_tokens,
            "total_tokens": result.usage.prompt_tokens + result.usage.completion_tokens
        }
    })))
}

#[derive(Debug, Deserialize)]
pub struct EmbeddingsRequest {
    pub input: EmbeddingsInput,
    #[serde(default)]
    pub model: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum EmbeddingsInput {
    One(String),
    Many(Vec<String>),
}

pub async fn embeddings(
    Json(request): Json<EmbeddingsRequest>,
) -> Result<Json<Value>, (StatusCode, Json<Value>)> {
    let texts = match request.input {
        EmbeddingsInput::One(text) => vec![text],
        EmbeddingsInput::Many(texts) => texts,
    };
    let provider = HashingProvider::default();
    let data: Vec<Value> = texts
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let embedding = provider.embed(text).expect("hashing provider is infallible");
            json!({ "object": "embedding", "index": i, "embedding": embedding })
        })
        .collect();
    Ok(Json(json!({
        "object": "list",
        "data": data,
        "model": request.model.unwrap_or_else(|| "mock-embed".to_string()),
    })))
}
