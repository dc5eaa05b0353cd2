use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use mealprint_core::llm::GatewayError;
use mealprint_core::matching::MatchError;
use mealprint_core::pipeline::PipelineError;
use mealprint_core::recipe::RecipeError;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Unavailable(String),
    #[error("upstream provider failed: {0}")]
    Upstream(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Upstream(_) => StatusCode::BAD_GATEWAY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Recipe(RecipeError::NoGateway) | PipelineError::Index(_) | PipelineError::IndexFile(_) => {
                ApiError::Internal(e.to_string())
            }
            PipelineError::Config(_) => ApiError::Internal(e.to_string()),
            PipelineError::Match(MatchError::Search(_)) => ApiError::Upstream(e.to_string()),
            _ => ApiError::Invalid(e.to_string()),
        }
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::EmptyMessage => ApiError::Invalid(e.to_string()),
            _ => ApiError::Upstream(e.to_string()),
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Internal(format!("session journal: {e}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}
