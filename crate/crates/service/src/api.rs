//! HTTP routes over [`Service`].

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use groundflow::dataset::to_jsonl;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::{RejectionReason, Service, ServiceError};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownFlow(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::FlowClaimed(_) | ServiceError::NoOutstandingScene(_) => StatusCode::CONFLICT,
            ServiceError::EmptyText | ServiceError::InvalidReason(_) | ServiceError::BadRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::Store { .. } | ServiceError::Corrupt(_) => {
                log::error!("{self}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

#[derive(Deserialize)]
struct CreateBody {
    flow_id: String,
}

#[derive(Deserialize)]
struct UtteranceBody {
    text: String,
}

#[derive(Deserialize)]
struct RejectBody {
    reason: String,
}

type AppState = Arc<Service>;

async fn create(State(svc): State<AppState>, raw: Bytes) -> Result<Response, ServiceError> {
    let req: CreateBody = body(&raw)?;
    let id = svc.create_session(&req.flow_id)?;
    let s = svc.snapshot(&id)?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id, "cursor": s.cursor, "status": s.status() }))).into_response())
}

async fn scene(State(svc): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(svc.scene(&id)?).into_response())
}

async fn utterance(State(svc): State<AppState>, Path(id): Path<String>, raw: Bytes) -> Result<Response, ServiceError> {
    let req: UtteranceBody = body(&raw)?;
    let s = svc.submit_utterance(&id, &req.text)?;
    Ok(Json(json!({ "session_id": id, "cursor": s.cursor, "status": s.status() })).into_response())
}

async fn reject(State(svc): State<AppState>, Path(id): Path<String>, raw: Bytes) -> Result<Response, ServiceError> {
    let req: RejectBody = body(&raw)?;
    let reason: RejectionReason = req.reason.parse()?;
    let s = svc.reject_scene(&id, reason)?;
    Ok(Json(json!({ "session_id": id, "cursor": s.cursor, "status": s.status() })).into_response())
}

async fn export(State(svc): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], to_jsonl(&svc.export())).into_response()
}

async fn report(State(svc): State<AppState>) -> Response {
    Json(svc.report()).into_response()
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/scene", get(scene))
        .route("/sessions/{id}/utterance", post(utterance))
        .route("/sessions/{id}/reject", post(reject))
        .route("/export", get(export))
        .route("/report", get(report))
        .with_state(service)
}

pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}
