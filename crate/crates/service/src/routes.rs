use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use mealprint_core::catalog::{DatabaseSource, ProductKey};
use mealprint_core::llm::{chat_followup, ChatSessionState};
use mealprint_core::matching::{IngredientCandidates, SelectionMode, SelectionSet};
use mealprint_core::recipe::{ExtractionMode, ParsedIngredient};
use mealprint_core::Engine;

use crate::error::ApiError;
use crate::session::{Session, SessionStore, Stage};

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub sessions: Arc<SessionStore>,
    pub extraction: ExtractionMode,
}

impl AppState {
    pub fn new(engine: Engine, sessions: SessionStore, extraction: ExtractionMode) -> Self {
        AppState { engine: Arc::new(engine), sessions: Arc::new(sessions), extraction }
    }

    fn session(&self, id: &str) -> Result<crate::session::SessionHandle, ApiError> {
        self.sessions.get(id).ok_or_else(|| ApiError::NotFound(id.to_string()))
    }
}

/// JSON body whose every decoding failure, empty bodies included, is a 422.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state).await.map_err(|e| ApiError::Invalid(e.to_string()))?;
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Err(ApiError::Invalid("request body is empty".into()));
        }
        serde_json::from_slice(&bytes).map(Body).map_err(|e| ApiError::Invalid(format!("invalid request body: {e}")))
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

fn default_country() -> String {
    "NL".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub text: String,
    #[serde(default = "default_country")]
    pub target_country: String,
    #[serde(default)]
    pub extraction_mode: Option<ExtractionMode>,
}

#[derive(Debug, Serialize)]
pub struct SessionCreated<'a> {
    pub session_id: &'a str,
    pub stage: Stage,
    pub target_country: &'a str,
    pub extraction_mode: ExtractionMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<&'a str>,
    pub ingredients: &'a [ParsedIngredient],
}

async fn create_session(State(app): State<AppState>, Body(req): Body<CreateSession>) -> Result<Response, ApiError> {
    if req.text.trim().is_empty() {
        return Err(ApiError::Invalid("recipe text is empty".into()));
    }
    let mode = req.extraction_mode.unwrap_or(app.extraction);
    let engine = app.engine.clone();
    let session = blocking(move || {
        let recipe = engine.recipe(&req.text, &req.target_country)?;
        let extraction = engine.parse(&recipe, mode)?;
        Ok(Session::new(recipe.target_country, recipe.text, extraction))
    })
    .await?;
    let body = serde_json::to_value(SessionCreated {
        session_id: &session.id,
        stage: session.stage,
        target_country: &session.target_country,
        extraction_mode: session.extraction.mode,
        fallback_reason: session.extraction.fallback_reason.as_deref(),
        ingredients: &session.extraction.ingredients,
    })
    .map_err(|e| ApiError::Internal(e.to_string()))?;
    tracing::info!(session = %session.id, ingredients = session.extraction.ingredients.len(), "session created");
    app.sessions.insert(session)?;
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Debug, Serialize)]
pub struct CandidatesView<'a> {
    pub session_id: &'a str,
    pub target_country: &'a str,
    pub ingredients: &'a [IngredientCandidates],
}

async fn candidates(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ApiError> {
    let handle = app.session(&id)?;
    let mut session = handle.lock().await;
    if session.proposal.is_none() {
        let engine = app.engine.clone();
        let ingredients = session.extraction.ingredients.clone();
        let country = session.target_country.clone();
        let proposal = blocking(move || Ok(engine.propose(&ingredients, &country)?)).await?;
        session.proposal = Some(proposal);
        session.advance(Stage::Proposed);
        app.sessions.persist(&session)?;
    }
    let proposal = session.proposal.as_ref().expect("proposal set above");
    let view = CandidatesView { session_id: &session.id, target_country: &session.target_country, ingredients: &proposal.ingredients };
    Ok(Json(serde_json::to_value(view).map_err(|e| ApiError::Internal(e.to_string()))?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRequest {
    #[serde(default)]
    pub mode: SelectionMode,
    /// Keyed by ingredient index or normalized name.
    #[serde(default)]
    pub selections: BTreeMap<String, Vec<ProductKey>>,
}

async fn select(State(app): State<AppState>, Path(id): Path<String>, Body(req): Body<SelectionRequest>) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let mut session = handle.lock().await;
    match session.stage {
        Stage::Proposed => {}
        Stage::Parsed => return Err(ApiError::Conflict("candidates have not been requested for this session yet".into())),
        _ => return Err(ApiError::Conflict(format!("session is already {:?}; start a new session", session.stage))),
    }
    let proposal = session.proposal.clone().expect("proposed sessions carry a proposal");
    let engine = app.engine.clone();
    let text = session.recipe_text.clone();
    let bundle = blocking(move || {
        let selection = match req.mode {
            SelectionMode::AutoTop1 => engine.auto_select(&proposal),
            SelectionMode::User => SelectionSet::from_keyed(&proposal, &req.selections, SelectionMode::User)
                .map_err(|e| ApiError::Invalid(e.to_string()))?,
        };
        let matches = engine.confirm(&proposal, &selection)?;
        Ok(engine.assess(&text, &matches)?)
    })
    .await?;
    session.advance(Stage::Confirmed);
    session.chat = Some(ChatSessionState::new(session.id.clone(), bundle.recipe_text.clone(), bundle.results_text.clone()));
    let body = bundle.to_json();
    session.bundle = Some(bundle);
    session.advance(Stage::Assessed);
    app.sessions.persist(&session)?;
    tracing::info!(session = %session.id, "session assessed");
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatRequest {
    pub message: String,
}

async fn chat(State(app): State<AppState>, Path(id): Path<String>, Body(req): Body<ChatRequest>) -> Result<Json<serde_json::Value>, ApiError> {
    let handle = app.session(&id)?;
    let mut session = handle.lock().await;
    if session.stage != Stage::Assessed {
        return Err(ApiError::Conflict("follow-up questions need an assessed session".into()));
    }
    if req.message.trim().is_empty() {
        return Err(ApiError::Invalid("message is empty".into()));
    }
    let engine = app.engine.clone();
    if engine.gateway().is_none() {
        return Err(ApiError::Unavailable("no LLM provider is configured".into()));
    }
    let mut state = session.chat.clone().expect("assessed sessions carry chat state");
    let (answer, state) = blocking(move || {
        let gateway = engine.gateway().expect("checked above");
        let answer = chat_followup(gateway, &mut state, &req.message)?;
        Ok((answer, state))
    })
    .await?;
    let turns = state.history().len();
    session.chat = Some(state);
    session.touch();
    app.sessions.persist(&session)?;
    Ok(Json(json!({ "session_id": session.id, "answer": answer, "turns": turns })))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    let handle = app.session(&id)?;
    let session = handle.lock().await;
    Ok(Json(session.clone()))
}

async fn meta(State(app): State<AppState>) -> Json<serde_json::Value> {
    let engine = &app.engine;
    let store = engine.store();
    let sources: Vec<serde_json::Value> = DatabaseSource::ALL
        .iter()
        .filter(|s| store.of_source(**s).next().is_some())
        .map(|s| {
            json!({
                "source": s,
                "display_name": s.display_name(),
                "records": store.of_source(*s).count(),
                "regions": store.list_regions(*s),
            })
        })
        .collect();
    let configured = &engine.config().supported_countries;
    let countries: Vec<String> = if configured.is_empty() {
        store.all_regions().into_iter().filter(|r| r.len() == 2).collect()
    } else {
        configured.iter().cloned().collect()
    };
    Json(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "sources": sources,
        "countries": countries,
        "candidates_per_source": engine.config().k,
        "embedder": engine.indices().first().map(|i| i.fingerprint()),
        "llm": engine.gateway().map(|g| g.provider_name()),
        "extraction_mode": app.extraction,
        "sessions": app.sessions.len(),
    }))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/candidates", get(candidates))
        .route("/api/sessions/{id}/selection", post(select))
        .route("/api/sessions/{id}/chat", post(chat))
        .with_state(state)
}
