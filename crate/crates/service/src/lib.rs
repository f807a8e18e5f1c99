//! HTTP JSON API over the metaphor pipeline and dialogue sessions.
//!
//! Each session sits behind its own mutex, so requests for one session are
//! serialized while distinct sessions proceed concurrently. Every event is
//! appended to the log and folded into the follow-up statistics under one
//! lock, which is the only point where sessions meet.

mod error;
mod state;

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use figura_core::dialogue::{ExpressionForm, ReplyKind};
use figura_core::events::FollowUpStats;
use figura_core::pipeline::{batch_generate, BatchRequest, MetaphorRecord};
use figura_core::pos::Pos;

pub use error::{ApiError, ErrorCode, StartupError};
pub use state::{load_inventory, session_seed, AppState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub created_at: chrono::DateTime<chrono::Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageBody {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageReply {
    pub text: String,
    pub triggered: bool,
    pub form: Option<ExpressionForm>,
    /// `idle` or `awaiting_follow_up`.
    pub state: String,
    pub kind: ReplyKind,
    pub metaphor_id: Option<String>,
    pub relevance: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct MetaphorQuery {
    pub target: Option<String>,
    pub pos: Option<String>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}/message", post(post_message))
        .route("/metrics", get(get_metrics))
        .route("/generate", post(generate))
        .route("/metaphors", get(list_metaphors))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
) -> Result<(StatusCode, Json<SessionDescriptor>), ApiError> {
    let descriptor = state.create_session().await?;
    Ok((StatusCode::CREATED, Json(descriptor)))
}

async fn post_message(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<MessageBody>, JsonRejection>,
) -> Result<Json<MessageReply>, ApiError> {
    let session = state
        .session(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
    let message = body(payload)?;
    if message.text.trim().is_empty() {
        return Err(ApiError::bad_request("text must not be empty"));
    }
    Ok(Json(state.post_message(&session, message.text.trim()).await?))
}

async fn get_metrics(State(state): State<Arc<AppState>>) -> Json<FollowUpStats> {
    Json(state.metrics().await)
}

async fn generate(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<BatchRequest>, JsonRejection>,
) -> Result<Json<Vec<MetaphorRecord>>, ApiError> {
    let request = body(payload)?;
    let resources = state
        .resources()
        .ok_or_else(|| ApiError::internal("pipeline resources are not loaded"))?;
    let params = state.pipeline_params().clone();
    let records = tokio::task::spawn_blocking(move || batch_generate(&resources, &request, &params))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(records))
}

async fn list_metaphors(
    State(state): State<Arc<AppState>>,
    Query(query): Query<MetaphorQuery>,
) -> Result<Json<Vec<MetaphorRecord>>, ApiError> {
    let pos = query
        .pos
        .as_deref()
        .filter(|p| !p.is_empty())
        .map(str::parse::<Pos>)
        .transpose()?;
    let inventory = state
        .inventory()
        .ok_or_else(|| ApiError::internal("no metaphor inventory loaded"))?;
    let target = query.target.as_deref().filter(|t| !t.is_empty()).map(str::to_lowercase);
    Ok(Json(
        inventory
            .iter()
            .filter(|r| target.as_ref().is_none_or(|t| r.metaphor.triplet.target == *t))
            .filter(|r| pos.is_none_or(|p| r.metaphor.triplet.pos == p))
            .cloned()
            .collect(),
    ))
}

/// Binds the configured address and serves until interrupted.
pub async fn serve(state: Arc<AppState>, bind: &str) -> Result<(), StartupError> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|source| StartupError::Bind {
            addr: bind.to_string(),
            source,
        })?;
    tracing::info!(addr = %bind, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(StartupError::Serve)
}
