//! HTTP service for the SQL-to-text pipeline. Endpoints under `/api/*`
//! expose parsing, index building, demonstration selection, prompt assembly,
//! generation, repurposing and evaluation; `/v1/chat/completions` and
//! `/v1/embeddings` serve the deterministic mock backend over the wire for
//! offline testing of remote-client code paths.

mod error;
mod handlers;
mod mock_llm;
pub mod wire;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::routing::{get, post};
use axum::Router;

pub use error::ApiError;

#[derive(Default)]
pub struct AppState {
    /// Attempt counts per idempotency key for the flaky mock models.
    pub flaky_attempts: Mutex<HashMap<String, u32>>,
}

pub type SharedState = Arc<AppState>;

pub fn router() -> Router {
    let state: SharedState = Arc::new(AppState::default());
    Router::new()
        .route("/health", get(handlers::health))
        .route("/api/parse", post(handlers::parse))
        .route("/api/index/build", post(handlers::index_build))
        .route("/api/index/tune-k", post(handlers::tune_k))
        .route("/api/select", post(handlers::select))
        .route("/api/prompt/icl", post(handlers::prompt_icl))
        .route("/api/prompt/iterative", post(handlers::prompt_iterative))
        .route("/api/response/parse", post(handlers::response_parse))
        .route("/api/generate", post(handlers::generate))
        .route("/api/repurpose", post(handlers::repurpose))
        .route("/api/evaluate", post(handlers::evaluate))
        .route("/api/metrics/bleu", post(handlers::metrics_bleu))
        .route("/api/metrics/ttest", post(handlers::metrics_ttest))
        .route("/api/metrics/fleiss", post(handlers::metrics_fleiss))
        .route("/api/leakage", post(handlers::leakage))
        .route("/v1/chat/completions", post(mock_llm::chat_completions))
        .route("/v1/embeddings", post(mock_llm::embeddings))
        .with_state(state)
}

/// Bind and serve in a background task; returns the bound address. Pass port
/// 0 for an ephemeral port.
pub async fn spawn(addr: SocketAddr) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = router();
    let handle = tokio::spawn(async move {
        if let Err(error) = axum::serve(listener, app).await {
            tracing::error!(%error, "service terminated");
        }
    });
    Ok((local, handle))
}

/// Serve on the current task until shutdown.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router()).await
}
