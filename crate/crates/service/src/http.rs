//! JSON-over-HTTP front end for [`SessionManager`].
//!
//! | method | path                   | body                         | response |
//! |--------|------------------------|------------------------------|----------|
//! | POST   | `/sessions`            | `{"budget"?: k}`             | `{session_id, k, feature_names, class_names}` |
//! | GET    | `/sessions/{id}/next`  |                              | `{group_index, group_name, members}` or `{done: true}` |
//! | POST   | `/sessions/{id}/answer`| `{group_index, values}`      | `{accepted, prediction, step}` |
//! | GET    | `/sessions/{id}`       |                              | session snapshot |
//! | DELETE | `/sessions/{id}`       |                              | 204 |
//!
//! Errors are `{"error": message}` with 400 (malformed request), 404 (unknown
//! or expired session), 409 (out-of-order answer or exhausted budget) or 500.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use crate::session::{SessionError, SessionManager};

/// Environment variable that overrides the bind address.
pub const BIND_ENV: &str = "DFS_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let status = match &self {
            SessionError::NotFound(_) | SessionError::Expired(_) => StatusCode::NOT_FOUND,
            SessionError::Conflict(_) => StatusCode::CONFLICT,
            SessionError::BadRequest(_) => StatusCode::BAD_REQUEST,
            SessionError::Model(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, SessionError> {
    payload.map(|Json(v)| v).map_err(|e| SessionError::BadRequest(e.body_text()))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    budget: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerBody {
    group_index: usize,
    values: Vec<f64>,
}

type Shared = State<Arc<SessionManager>>;

async fn create(State(m): Shared, payload: Option<Json<serde_json::Value>>) -> Result<Response, SessionError> {
    // an empty body means "use the model's budget"
    let req: CreateBody = match payload {
        None => CreateBody::default(),
        Some(Json(v)) => serde_json::from_value(v).map_err(|e| SessionError::BadRequest(e.to_string()))?,
    };
    Ok((StatusCode::CREATED, Json(m.create(req.budget)?)).into_response())
}

async fn next(State(m): Shared, Path(id): Path<String>) -> Result<Response, SessionError> {
    Ok(Json(m.next(&id)?).into_response())
}

async fn answer(
    State(m): Shared,
    Path(id): Path<String>,
    payload: Result<Json<AnswerBody>, JsonRejection>,
) -> Result<Response, SessionError> {
    let req = body(payload)?;
    Ok(Json(m.answer(&id, req.group_index, &req.values)?).into_response())
}

async fn snapshot(State(m): Shared, Path(id): Path<String>) -> Result<Response, SessionError> {
    Ok(Json(m.snapshot(&id)?).into_response())
}

async fn delete(State(m): Shared, Path(id): Path<String>) -> Result<Response, SessionError> {
    m.delete(&id)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(snapshot).delete(delete))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/answer", post(answer))
        .with_state(manager)
}

/// `DFS_BIND` if set, else `flag`, else the default address.
pub fn resolve_bind(flag: Option<&str>) -> Result<SocketAddr, String> {
    let raw = std::env::var(BIND_ENV).ok().or_else(|| flag.map(str::to_string)).unwrap_or_else(|| DEFAULT_BIND.into());
    raw.parse().map_err(|e| format!("invalid bind address '{raw}': {e}"))
}

/// Serves until interrupted, sweeping idle sessions once a minute.
pub async fn serve(manager: Arc<SessionManager>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let sweeper = Arc::clone(&manager);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.evict_expired();
        }
    });
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(manager))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
