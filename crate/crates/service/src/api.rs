//! HTTP API.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/health` | liveness, no auth |
//! | GET | `/sources` | health-data sources a session may share |
//! | POST | `/sessions` | create a session |
//! | GET | `/sessions/{id}` | the stored session |
//! | POST | `/sessions/{id}/messages` | run one turn, streamed as server-sent events |
//! | GET | `/sessions/{id}/events?after=N` | events after sequence `N` |
//! | GET | `/sessions/{id}/events/{eid}/data` | chart payload of a visualization |
//! | POST | `/data/import` | NDJSON health records |
//!
//! Errors are JSON `{"error": "..."}`. A turn is computed in full before the
//! stream opens, so a provider failure is a plain 502 and the stored session
//! is untouched.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::sse::{Event, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use coach_core::{CoreError, Orchestrator, Session, SessionStore};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::events::{events_after, session_events, ApiEvent};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message.to_string())
    }
}

impl From<CoreError> for ApiError {
    fn from(err: CoreError) -> Self {
        let status = match &err {
            CoreError::SessionNotFound(_) | CoreError::InvalidSessionId(_) => StatusCode::NOT_FOUND,
            CoreError::Provider(_) => StatusCode::BAD_GATEWAY,
            CoreError::CorruptSession { .. } | CoreError::Io(_) | CoreError::PromptCatalog(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        Self::new(status, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(status = %self.status, error = %self.message, "request failed");
        }
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Shared server state. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    orchestrator: Option<Arc<Orchestrator>>,
    sessions: SessionStore,
    turn_locks: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
    api_token: Option<Arc<str>>,
}

impl AppState {
    pub fn new(orchestrator: Arc<Orchestrator>, sessions: SessionStore) -> Self {
        Self {
            orchestrator: Some(orchestrator),
            sessions,
            turn_locks: Arc::default(),
            api_token: None,
        }
    }

    /// A server without a coach or health store: session reads work, anything
    /// that needs the coach answers 503.
    pub fn unconfigured(sessions: SessionStore) -> Self {
        Self {
            orchestrator: None,
            sessions,
            turn_locks: Arc::default(),
            api_token: None,
        }
    }

    pub fn with_api_token(mut self, token: Option<String>) -> Self {
        self.api_token = token.map(Into::into);
        self
    }

    fn orchestrator(&self) -> ApiResult<Arc<Orchestrator>> {
        self.orchestrator.clone().ok_or_else(|| {
            ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "server has no coach or health-data store configured")
        })
    }

    fn turn_lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.turn_locks.lock().expect("turn lock map poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }

    fn load(&self, id: &str) -> ApiResult<Session> {
        Ok(self.sessions.load(id)?)
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/sources", get(list_sources))
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/messages", post(post_message))
        .route("/sessions/:id/events", get(list_events))
        .route("/sessions/:id/events/:eid/data", get(visualization_data))
        .route("/data/import", post(import_data))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .merge(api)
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.api_token {
        let presented = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(&**token) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "missing or wrong bearer token").into_response();
        }
    }
    next.run(request).await
}

#[derive(Debug, Serialize)]
struct SourceView {
    name: String,
    description: String,
    unit: String,
}

async fn list_sources(State(state): State<AppState>) -> ApiResult<Json<Vec<SourceView>>> {
    let orchestrator = state.orchestrator()?;
    let sources = orchestrator
        .store()
        .catalog()
        .iter()
        .map(|info| SourceView {
            name: info.name.to_string(),
            description: info.description.clone(),
            unit: info.unit.clone(),
        })
        .collect();
    Ok(Json(sources))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Sources the coach may query; all of them when absent.
    #[serde(default)]
    pub shared_sources: Option<Vec<String>>,
    #[serde(default)]
    pub user_profile: Option<String>,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let orchestrator = state.orchestrator()?;
    let request: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?
    };
    let mut session = Session::fresh();
    if let Some(sources) = request.shared_sources {
        let catalog = orchestrator.store().catalog();
        if let Some(unknown) = sources.iter().find(|s| !catalog.contains(s)) {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("unknown data source '{unknown}'")));
        }
        session.shared_sources = Some(sources.into_iter().collect());
    }
    if let Some(profile) = request.user_profile {
        session.user_profile = profile;
    }
    let sessions = state.sessions.clone();
    let saved = session.clone();
    tokio::task::spawn_blocking(move || sessions.save(&saved))
        .await
        .map_err(ApiError::internal)??;
    let body = json!({ "id": session.id, "state": session.state });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    Ok(Json(state.load(&id)?))
}

#[derive(Debug, Deserialize)]
pub struct PostMessage {
    pub text: String,
}

fn sse_event(event: &ApiEvent) -> Result<Event, axum::Error> {
    Event::default()
        .event(event.kind.name())
        .id(event.sequence.to_string())
        .json_data(event)
}

async fn post_message(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<PostMessage>,
) -> ApiResult<Response> {
    let orchestrator = state.orchestrator()?;
    if body.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "message text is empty"));
    }
    let session = state.load(&id)?;
    let guard = state
        .turn_lock(&id)
        .try_lock_owned()
        .map_err(|_| ApiError::new(StatusCode::CONFLICT, "a turn is already in progress for this session"))?;

    let sessions = state.sessions.clone();
    let events = tokio::task::spawn_blocking(move || {
        let _guard = guard;
        // Reload under the lock: the copy read above may predate a turn that
        // finished in between.
        let mut session = sessions.load(&session.id)?;
        let seen = session_events(&session).len() as u64;
        orchestrator.handle_user_message(&mut session, &body.text)?;
        sessions.save(&session)?;
        Ok::<_, CoreError>(events_after(&session, seen))
    })
    .await
    .map_err(ApiError::internal)??;

    let stream = futures::stream::iter(events.iter().map(sse_event).collect::<Vec<_>>());
    Ok(Sse::new(stream).into_response())
}

#[derive(Debug, Default, Deserialize)]
pub struct EventsQuery {
    #[serde(default)]
    pub after: u64,
}

async fn list_events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<EventsQuery>,
) -> ApiResult<Json<Vec<ApiEvent>>> {
    Ok(Json(events_after(&state.load(&id)?, query.after)))
}

async fn visualization_data(
    State(state): State<AppState>,
    Path((id, event_id)): Path<(String, String)>,
) -> ApiResult<Response> {
    let session = state.load(&id)?;
    let event = session
        .event(&event_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no visualization '{event_id}' in session")))?;
    Ok(Json(event).into_response())
}

async fn import_data(State(state): State<AppState>, body: String) -> ApiResult<Response> {
    let orchestrator = state.orchestrator()?;
    let report = tokio::task::spawn_blocking(move || orchestrator.store().ingest_str(&body))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    Ok(Json(report).into_response())
}
