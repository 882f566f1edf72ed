use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ner_forge::heuristics::Action;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::session::{FlagFilter, ReviewError, ReviewSession};

type Shared = Arc<RwLock<ReviewSession>>;

const DEFAULT_PAGE: usize = 50;

impl IntoResponse for ReviewError {
    fn into_response(self) -> Response {
        let status = match &self {
            ReviewError::NotFound(_) => StatusCode::NOT_FOUND,
            ReviewError::Conflict(_) => StatusCode::CONFLICT,
            ReviewError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ReviewError::Core(e) if e.is_validation() => StatusCode::UNPROCESSABLE_ENTITY,
            ReviewError::Core(_) | ReviewError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

fn param<T: std::str::FromStr>(
    query: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, ReviewError>
where
    T::Err: std::fmt::Display,
{
    match query.get(key).map(|v| v.trim()).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|e| ReviewError::BadRequest(format!("{key}: {e}"))),
    }
}

fn read(state: &Shared) -> std::sync::RwLockReadGuard<'_, ReviewSession> {
    state.read().unwrap_or_else(|e| e.into_inner())
}

async fn list_flags(
    State(state): State<Shared>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ReviewError> {
    let filter = FlagFilter {
        status: param(&query, "status")?,
        kind: param(&query, "kind")?,
        document: param(&query, "doc")?,
    };
    let offset = param(&query, "offset")?.unwrap_or(0);
    let limit = param(&query, "limit")?.unwrap_or(DEFAULT_PAGE);
    Ok(Json(read(&state).list_flags(&filter, offset, limit)).into_response())
}

async fn flag_context(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ReviewError> {
    let n = param(&query, "n")?.unwrap_or(0);
    Ok(Json(read(&state).flag_context(&id, n)?).into_response())
}

#[derive(Deserialize)]
struct DecisionBody {
    action: String,
    #[serde(default)]
    note: Option<String>,
}

async fn record_decision(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<DecisionBody>,
) -> Result<Response, ReviewError> {
    let action: Action = body
        .action
        .parse()
        .map_err(|e: ner_forge::Error| ReviewError::BadRequest(e.to_string()))?;
    let mut session = state.write().unwrap_or_else(|e| e.into_inner());
    Ok(Json(session.record_decision(&id, action, body.note)?).into_response())
}

async fn progress(State(state): State<Shared>) -> Response {
    Json(read(&state).progress()).into_response()
}

#[derive(Deserialize)]
struct ExportBody {
    path: PathBuf,
}

async fn export(
    State(state): State<Shared>,
    Json(body): Json<ExportBody>,
) -> Result<Response, ReviewError> {
    let mut session = state.write().unwrap_or_else(|e| e.into_inner());
    Ok(Json(session.export(&body.path)?).into_response())
}

/// The review API; static assets under `assets` (if any) are served at `/`.
pub fn router(session: Shared, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/flags", get(list_flags))
        .route("/api/flags/{id}/context", get(flag_context))
        .route("/api/flags/{id}/decision", post(record_decision))
        .route("/api/progress", get(progress))
        .route("/api/export", post(export))
        .with_state(session);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    pub assets: Option<PathBuf>,
}

/// Runs the service until ctrl-c.
pub async fn serve(session: ReviewSession, options: ServeOptions) -> std::io::Result<()> {
    let app = router(Arc::new(RwLock::new(session)), options.assets);
    let listener = tokio::net::TcpListener::bind(options.addr).await?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
