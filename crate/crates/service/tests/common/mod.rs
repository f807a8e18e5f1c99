#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use figura_core::config::Config;
use figura_core::pipeline::{batch_generate, BatchRequest, MetaphorRecord};
use figura_service::AppState;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture_config() -> Config {
    let d = workspace_root().join("data/fixture");
    let mut c = Config::default();
    c.data.embeddings = Some(d.join("embeddings.txt"));
    c.data.pos = Some(d.join("pos.tsv"));
    c.data.corpus = Some(d.join("corpus.conllu"));
    c.data.stopwords = Some(d.join("stopwords.txt"));
    c
}

pub fn synthetic_log() -> PathBuf {
    workspace_root().join("crates/core/tests/fixtures/synthetic_events.jsonl")
}

pub fn hand_batch() -> BatchRequest {
    BatchRequest {
        targets: vec!["love".into(), "relationship".into()],
        sources: vec!["math".into(), "park".into(), "lottery".into()],
        ..Default::default()
    }
}

pub fn inventory(config: &Config) -> Vec<MetaphorRecord> {
    let resources = config.load_resources().unwrap();
    batch_generate(&resources, &hand_batch(), &config.pipeline_params()).unwrap()
}

/// Fixture resources plus the hand-batch inventory, optionally logging.
pub fn fixture_state(log: Option<&Path>) -> Arc<AppState> {
    let config = fixture_config();
    let mut state =
        AppState::new(Some(config.load_resources().unwrap()), Some(inventory(&config)), &config).unwrap();
    if let Some(path) = log {
        state.attach_log(path).unwrap();
    }
    Arc::new(state)
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(b) => request
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => request.body(Body::empty()),
    }
    .unwrap();
    call_raw(app, request).await
}

pub async fn call_raw(app: &Router, request: Request<Body>) -> (StatusCode, Value) {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes)
        .unwrap_or_else(|e| panic!("{status}: body is not JSON ({e}): {bytes:?}"));
    if !status.is_success() {
        assert_api_error(status, &value);
    }
    (status, value)
}

/// Error bodies are exactly `{code, message}` with a code matching the status.
pub fn assert_api_error(status: StatusCode, body: &Value) {
    let obj = body.as_object().unwrap_or_else(|| panic!("{status}: {body}"));
    assert_eq!(obj.len(), 2, "{body}");
    let code = obj["code"].as_str().unwrap();
    let expected = match status.as_u16() {
        400 => "bad_request",
        404 => "not_found",
        409 => "conflict",
        500 => "internal",
        other => panic!("unexpected status {other}"),
    };
    assert_eq!(code, expected, "{body}");
    assert!(!obj["message"].as_str().unwrap().is_empty());
}

pub async fn new_session(app: &Router) -> String {
    let (status, body) = call(app, "POST", "/session", None).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

pub async fn say(app: &Router, session: &str, text: &str) -> (StatusCode, Value) {
    call(
        app,
        "POST",
        &format!("/session/{session}/message"),
        Some(serde_json::json!({ "text": text })),
    )
    .await
}
