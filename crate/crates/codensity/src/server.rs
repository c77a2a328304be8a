//! The HTTP JSON service: sessions, examples and solving.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use codensity_core::game::Player;
use codensity_core::instances::Instance;
use codensity_core::rational;
use codensity_core::system::fixtures;
use rand::RngCore;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};
use tower_http::services::ServeDir;

use crate::error::AppError;
use crate::format::{document_from_value, fixture_document, Document, SystemDoc};
use crate::report::{solve, NumberFormat, SolveOptions};
use crate::session::{MoveError, SessionRecord};

type Shared = Arc<Mutex<SessionRecord>>;

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Shared>>,
    counter: AtomicU64,
}

impl AppState {
    pub fn new() -> Arc<Self> {
        Arc::new(AppState::default())
    }

    pub async fn session(&self, id: &str) -> Option<Shared> {
        self.sessions.read().await.get(id).cloned()
    }

    fn fresh_id(&self) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        format!("{:08x}{:04x}", rand::thread_rng().next_u32(), n & 0xffff)
    }
}

pub struct ApiError(StatusCode, Value);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        let status = match e {
            AppError::Parse(_) => StatusCode::BAD_REQUEST,
            AppError::Incompatible(_) | AppError::NotWinning(_) | AppError::IllegalMove(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, json!({ "error": e.to_string() }))
    }
}

fn not_found(id: &str) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, json!({ "error": format!("no session {id}") }))
}

/// A system given inline or as the name of a built-in example.
fn load_system(v: Value) -> Result<Document, AppError> {
    match v {
        Value::String(name) => {
            fixture_document(&name).ok_or_else(|| AppError::Parse(format!("no example named {name}")))
        }
        other => Ok(document_from_value(other)?),
    }
}

fn parse_instance(s: &str) -> Result<Instance, AppError> {
    s.parse().map_err(|e: codensity_core::Error| AppError::Parse(e.to_string()))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateSession {
    system: Value,
    instance: String,
    start: Value,
    human_side: String,
    #[serde(default)]
    cap: Option<usize>,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let doc = load_system(req.system)?;
    let instance = parse_instance(&req.instance)?;
    let human = Player::parse(&req.human_side).map_err(AppError::from)?;
    let id = state.fresh_id();
    let record = tokio::task::spawn_blocking({
        let id = id.clone();
        move || SessionRecord::new(id, doc, instance, &req.start, human, req.cap)
    })
    .await
    .map_err(|e| AppError::Io(std::io::Error::other(e)))??;
    let snapshot = record.snapshot();
    state.sessions.write().await.insert(id, Arc::new(Mutex::new(record)));
    Ok((StatusCode::CREATED, Json(snapshot)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id).await.ok_or_else(|| not_found(&id))?;
    let record = session.lock().await;
    Ok(Json(record.snapshot()))
}

#[derive(Deserialize)]
struct MoveRequest {
    #[serde(rename = "move")]
    mv: Value,
}

async fn post_move(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<MoveRequest>,
) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id).await.ok_or_else(|| not_found(&id))?;
    let mut record = session.try_lock_owned().map_err(|_| {
        ApiError(StatusCode::CONFLICT, json!({ "error": "another move on this session is in progress" }))
    })?;
    let result = record.submit(&req.mv);
    match result {
        Ok(()) => Ok(Json(record.snapshot())),
        Err(MoveError::Illegal { message, legal, hint }) => Err(ApiError(
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({ "error": message, "legalMoves": legal, "oracleHint": hint }),
        )),
        Err(MoveError::OutOfTurn(message)) => Err(ApiError(StatusCode::CONFLICT, json!({ "error": message }))),
    }
}

async fn examples() -> Json<Value> {
    let list: Vec<Value> = fixtures::NAMES
        .iter()
        .filter_map(|name| {
            let doc = fixture_document(name)?;
            Some(json!({ "name": name, "system": SystemDoc::from_document(&doc) }))
        })
        .collect();
    Json(Value::Array(list))
}

#[derive(Deserialize, Default)]
struct SolveRequestOptions {
    eps: Option<String>,
    cap: Option<usize>,
    format: Option<String>,
}

#[derive(Deserialize)]
struct SolveRequest {
    system: Value,
    instance: String,
    #[serde(default)]
    options: SolveRequestOptions,
}

async fn post_solve(Json(req): Json<SolveRequest>) -> Result<Json<Value>, ApiError> {
    let doc = load_system(req.system)?;
    let instance = parse_instance(&req.instance)?;
    let options = SolveOptions {
        eps: req.options.eps.as_deref().map(rational::parse).transpose().map_err(AppError::from)?,
        cap: req.options.cap,
        format: req.options.format.as_deref().map(NumberFormat::parse).transpose()?.unwrap_or_default(),
    };
    let report = tokio::task::spawn_blocking(move || solve(&doc, instance, &options))
        .await
        .map_err(|e| AppError::Io(std::io::Error::other(e)))??;
    Ok(Json(report.json))
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/move", post(post_move))
        .route("/systems/examples", get(examples))
        .route("/solve", post(post_solve))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds and serves until the process stops.
pub async fn serve(bind: &str, static_dir: Option<PathBuf>) -> Result<(), AppError> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| AppError::Io(std::io::Error::new(e.kind(), format!("cannot bind {bind}: {e}"))))?;
    let addr = listener.local_addr()?;
    eprintln!("listening on http://{addr}");
    axum::serve(listener, router(AppState::new(), static_dir))
        .await
        .map_err(AppError::Io)
}
