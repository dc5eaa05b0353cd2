//! JSON-over-HTTP front end for the assessment workflow.
//!
//! A session moves PARSED → PROPOSED → ASSESSED: the recipe is parsed on
//! creation, candidates are proposed on first request, and a selection both
//! confirms the matches and runs the assessment.

pub mod config;
mod error;
mod routes;
pub mod session;

use axum::http::{HeaderValue, Method};
use axum::Router;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::trace::TraceLayer;

pub use config::{ConfigError, DataConfig, ServiceConfig};
pub use error::ApiError;
pub use routes::{AppState, ChatRequest, CreateSession, SelectionRequest};
pub use session::{Session, SessionStore, Stage};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid CORS origin `{0}`")]
    Origin(String),
}

fn cors(origins: &[String]) -> Result<Option<CorsLayer>, ServeError> {
    if origins.is_empty() {
        return Ok(None);
    }
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        let values = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| ServeError::Origin(o.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(values)
    };
    Ok(Some(CorsLayer::new().allow_origin(allow).allow_methods([Method::GET, Method::POST]).allow_headers(Any)))
}

/// Router with logging and CORS from `origins`.
pub fn app(state: AppState, origins: &[String]) -> Result<Router, ServeError> {
    let mut router = routes::router(state).layer(TraceLayer::new_for_http());
    if let Some(layer) = cors(origins)? {
        router = router.layer(layer);
    }
    Ok(router)
}

/// Builds the engine and session store described by `config`.
pub fn state_from_config(config: &ServiceConfig) -> Result<AppState, ServeError> {
    let engine = config.data.build_engine()?;
    let sessions = match &config.journal {
        Some(path) => SessionStore::with_journal(path)?,
        None => SessionStore::in_memory(),
    };
    Ok(AppState::new(engine, sessions, config.data.extraction_mode()))
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let state = tokio::task::spawn_blocking({
        let config = config.clone();
        move || state_from_config(&config)
    })
    .await
    .map_err(|e| std::io::Error::other(e.to_string()))??;
    let router = app(state, &config.cors_origins)?;
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
