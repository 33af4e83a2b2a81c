//! Stateless HTTP adapter: every request carries its full context and gets
//! a fresh session over the shared, immutable backends.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use continuity_core::{Backends, Error, Hyperparams, Session, Speaker, Verdict};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

#[derive(Clone)]
pub struct AppState {
    pub topic: String,
    pub hp: Hyperparams,
    pub backends: Backends,
    limit: Arc<Semaphore>,
}

impl AppState {
    pub fn new(topic: String, hp: Hyperparams, backends: Backends, max_concurrent: usize) -> Self {
        AppState {
            topic,
            hp,
            backends,
            limit: Arc::new(Semaphore::new(max_concurrent.max(1))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub topic: String,
    pub context: Vec<String>,
    pub current: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub p_nlu: f64,
    pub attention_term: f64,
    pub residual_term: f64,
    pub verdict: Verdict,
    pub chunk_count: usize,
}

/// Blocking evaluation shared by the handler and tests.
pub fn evaluate(state: &AppState, req: &EvaluateRequest) -> Result<EvaluateResponse, Error> {
    if req.topic != state.topic {
        return Err(Error::InvalidInput(format!(
            "unknown topic {:?}; this service scores {:?}",
            req.topic, state.topic
        )));
    }
    if req.context.is_empty() {
        return Err(Error::InvalidInput("context must contain at least one sentence".into()));
    }
    let mut session = Session::new(&state.topic, state.hp.clone(), state.backends.clone())?;
    for text in &req.context {
        session.accept(text, Speaker::Unknown)?;
    }
    let trace = session.evaluate_next(&req.current)?;
    Ok(EvaluateResponse {
        p_nlu: trace.score.p_nlu.get(),
        attention_term: trace.score.attention_term.get(),
        residual_term: trace.score.residual_term,
        verdict: trace.score.verdict,
        chunk_count: trace.chunks.len(),
    })
}

fn error_response(status: StatusCode, message: String) -> Response {
    (status, Json(serde_json::json!({ "error": message }))).into_response()
}

fn status_for(err: &Error) -> StatusCode {
    match err {
        Error::InvalidInput(_) | Error::Precondition(_) => StatusCode::BAD_REQUEST,
        Error::BackendUnavailable(_) | Error::Protocol(_) => StatusCode::BAD_GATEWAY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

async fn evaluate_handler(
    State(state): State<AppState>,
    body: Result<Json<EvaluateRequest>, JsonRejection>,
) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(rej) => return error_response(StatusCode::BAD_REQUEST, rej.body_text()),
    };
    let Ok(_permit) = state.limit.clone().acquire_owned().await else {
        return error_response(StatusCode::SERVICE_UNAVAILABLE, "shutting down".into());
    };
    let result = tokio::task::spawn_blocking(move || evaluate(&state, &req)).await;
    match result {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => {
            let status = status_for(&e);
            if status != StatusCode::BAD_REQUEST {
                tracing::warn!(error = %e, "evaluation failed");
            }
            error_response(status, e.to_string())
        }
        Err(join) => error_response(StatusCode::INTERNAL_SERVER_ERROR, join.to_string()),
    }
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "topic": state.topic }))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/evaluate", post(evaluate_handler))
        .route("/healthz", get(health))
        .with_state(state)
}
