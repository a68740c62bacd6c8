//! HTTP agent registry: `POST /agent/register` creates an agent,
//! `POST /agent/message` routes a message to one and returns its reply.

pub mod agent;
pub mod message;
pub mod registry;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;

pub use agent::{Agent, AgentKind, BridgeAgent, HelloAgent, MockGenerator, TextGenerator, UNSUPPORTED};
pub use message::{route_priority, Message, MessageType};
pub use registry::{AgentRecord, Registry, RegistryError};

pub const DEFAULT_BIND: &str = "127.0.0.1:8000";
pub const BIND_ENV: &str = "MACI_BIND";

#[derive(Debug, Clone, Deserialize)]
pub struct RegistrationRequest {
    pub agent_id: String,
    #[serde(default)]
    pub capabilities: Vec<String>,
    #[serde(default)]
    pub kind: AgentKind,
}

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub generator: Arc<dyn TextGenerator>,
}

impl AppState {
    pub fn new(generator: Arc<dyn TextGenerator>) -> Self {
        AppState { registry: Arc::new(Registry::new()), generator }
    }
}

impl Default for AppState {
    fn default() -> Self {
        AppState::new(Arc::new(MockGenerator))
    }
}

fn error(status: StatusCode, detail: impl Into<String>) -> Response {
    (status, Json(json!({ "detail": detail.into() }))).into_response()
}

async fn register(State(state): State<AppState>, body: Bytes) -> Response {
    let request: RegistrationRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, format!("invalid registration: {e}")),
    };
    if request.agent_id.trim().is_empty() {
        return error(StatusCode::UNPROCESSABLE_ENTITY, "agent_id must not be empty");
    }
    let agent: Arc<dyn Agent> = match request.kind {
        AgentKind::Hello => Arc::new(HelloAgent::new(&request.agent_id, request.capabilities, state.generator.clone())),
        AgentKind::Bridge => Arc::new(BridgeAgent::new(&request.agent_id, request.capabilities, state.generator.clone())),
    };
    match state.registry.register(agent).await {
        Ok(record) => Json(json!({
            "status": "success",
            "message": format!("Agent {} registered", record.agent_id),
            "agent_id": record.agent_id,
        }))
        .into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

async fn send_message(State(state): State<AppState>, body: Bytes) -> Response {
    let message: Message = match serde_json::from_slice(&body) {
        Ok(m) => m,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, format!("invalid message: {e}")),
    };
    let slot = match state.registry.get(&message.target_id).await {
        Ok(slot) => slot,
        Err(e) => return error(StatusCode::NOT_FOUND, e.to_string()),
    };
    let _turn = slot.inbox.lock().await;
    let agent = slot.agent.clone();
    match tokio::task::spawn_blocking(move || agent.process(&message)).await {
        Ok(reply) => Json(reply).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("agent failed: {e}")),
    }
}

async fn lookup(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.registry.record(&id).await {
        Ok(record) => Json(record).into_response(),
        Err(e) => error(StatusCode::NOT_FOUND, e.to_string()),
    }
}

async fn list(State(state): State<AppState>) -> Response {
    Json(state.registry.records().await).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/agent/register", post(register))
        .route("/agent/message", post(send_message))
        .route("/agent/{id}", get(lookup))
        .route("/agents", get(list))
        .with_state(state)
}

/// `--bind` wins, then `MACI_BIND`, then the default.
pub fn bind_address(flag: Option<&str>) -> String {
    flag.map(str::to_string)
        .or_else(|| std::env::var(BIND_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| DEFAULT_BIND.to_string())
}

pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
