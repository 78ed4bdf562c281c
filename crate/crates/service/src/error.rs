use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use sql2text_core::ast::AstError;
use sql2text_core::experiment::ExperimentError;
use sql2text_core::metrics::MetricsError;
use sql2text_core::prompt::PromptError;
use sql2text_core::selection::SelectionError;

/// JSON error envelope: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({
            "error": { "code": self.code, "message": self.message }
        }));
        (self.status, body).into_response()
    }
}

impl From<AstError> for ApiError {
    fn from(error: AstError) -> Self {
        let code = match &error {
            AstError::ParseError { .. } => "parse_error",
            AstError::MultiStatementError => "multi_statement",
            AstError::EmptyCorpus => "empty_corpus",
        };
        ApiError::bad_request(code, error.to_string())
    }
}

impl From<SelectionError> for ApiError {
    fn from(error: SelectionError) -> Self {
        ApiError::bad_request("selection_error", error.to_string())
    }
}

impl From<PromptError> for ApiError {
    fn from(error: PromptError) -> Self {
        let status = match &error {
            PromptError::MalformedResponse { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError {
            status,
            code: "prompt_error",
            message: error.to_string(),
        }
    }
}

impl From<MetricsError> for ApiError {
    fn from(error: MetricsError) -> Self {
        ApiError::bad_request("metrics_error", error.to_string())
    }
}

impl From<ExperimentError> for ApiError {
    fn from(error: ExperimentError) -> Self {
        ApiError::bad_request("experiment_error", error.to_string())
    }
}
