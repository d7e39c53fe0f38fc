//! HTTP backend for the context labeling tool.
//!
//! All endpoints live under `/api/v1`; see [`router`].

mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

pub use store::{
    ServiceError, SessionSnapshot, Store, TrialSummary, VariableOptions, SESSIONS_DIR,
};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownTrial(_) => StatusCode::NOT_FOUND,
            ServiceError::BadSessionId(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::FrameOutOfRange { .. }
            | ServiceError::InvalidState { .. }
            | ServiceError::UnlabeledFrame(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::VersionConflict { .. } => StatusCode::CONFLICT,
            ServiceError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.kind(), "message": self.to_string() });
        match &self {
            ServiceError::InvalidState {
                variable: Some(v), ..
            } => body["variable"] = json!(v),
            ServiceError::VersionConflict { current, .. } => body["version"] = json!(current),
            _ => {}
        }
        (status, Json(body)).into_response()
    }
}

type Shared = State<Arc<Store>>;

#[derive(Debug, Deserialize)]
struct LabelRequest {
    frame: u32,
    state: String,
    base_version: u64,
}

#[derive(Debug, Deserialize)]
struct CarryRequest {
    from_frame: u32,
    to_frame: u32,
    base_version: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct ImportQuery {
    base_version: u64,
}

async fn trials(State(store): Shared) -> Json<Vec<TrialSummary>> {
    Json(store.trials())
}

async fn frame(
    State(store): Shared,
    Path((trial, k)): Path<(String, u32)>,
) -> Result<Response, ServiceError> {
    let (bytes, mime) = store.frame(&trial, k)?;
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

async fn session(
    State(store): Shared,
    Path(id): Path<String>,
) -> Result<Json<SessionSnapshot>, ServiceError> {
    Ok(Json(store.snapshot(&id)?))
}

async fn put_label(
    State(store): Shared,
    Path(id): Path<String>,
    Json(req): Json<LabelRequest>,
) -> Result<Json<serde_json::Value>, ServiceError> {
    let version = store.put_label(&id, req.frame, &req.state, req.base_version)?;
    Ok(Json(json!({ "version": version })))
}

async fn carry(
    State(store): Shared,
    Path(id): Path<String>,
    Json(req): Json<CarryRequest>,
) -> Result<Json<serde_json::Value>, ServiceError> {
    let version = store.carry(&id, req.from_frame, req.to_frame, req.base_version)?;
    Ok(Json(json!({ "version": version })))
}

async fn export(State(store): Shared, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let text = store.export(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn import(
    State(store): Shared,
    Path(id): Path<String>,
    Query(q): Query<ImportQuery>,
    body: String,
) -> Result<Json<serde_json::Value>, ServiceError> {
    let version = store.import(&id, &body, q.base_version)?;
    Ok(Json(json!({ "version": version })))
}

async fn no_ui() -> Html<&'static str> {
    Html("<!doctype html><title>compass</title><p>No UI directory configured. The API is at /api/v1/trials.</p>")
}

/// Builds the application. Static files from `ui_dir`, when given, are
/// served at `/`.
pub fn router(store: Arc<Store>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/trials", get(trials))
        .route("/trials/{id}/frames/{k}", get(frame))
        .route("/sessions/{id}", get(session))
        .route("/sessions/{id}/labels", put(put_label))
        .route("/sessions/{id}/carry", post(carry))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/transcript", put(import))
        .with_state(store);
    let app = Router::new().nest("/api/v1", api);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(no_ui)),
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub data_root: PathBuf,
    pub ui_dir: Option<PathBuf>,
    pub addr: SocketAddr,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] ServiceError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Server(std::io::Error),
}

/// Runs the service until interrupted.
pub async fn serve(config: ServeConfig) -> Result<(), ServeError> {
    let store = Arc::new(Store::open(&config.data_root)?);
    tracing::info!(
        "serving {} trials from {} on http://{}",
        store.trials().len(),
        config.data_root.display(),
        config.addr
    );
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.addr,
            source,
        })?;
    axum::serve(listener, router(store, config.ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServeError::Server)
}
