use std::collections::HashMap;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use verdant_core::controller::{Command, CommandOutcome, ControllerError};
use verdant_core::event::RejectReason;
use verdant_core::irrigation::{ManualAction, ManualOutcome, ScheduleError, SlotId};
use verdant_core::TimeOfDay;

use crate::engine::{Request, Shared, StreamMessage};
use crate::error::{ApiError, ServiceError};

#[derive(Clone)]
pub(crate) struct AppState {
    pub requests: mpsc::Sender<Request>,
    pub shared: Shared,
    /// Flips to `true` when the server starts shutting down.
    pub closing: watch::Receiver<bool>,
}

pub(crate) fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/state", get(get_state))
        .route("/api/health", get(get_health))
        .route("/api/water", post(post_water))
        .route("/api/security", post(post_security))
        .route("/api/schedules", get(get_schedules).post(post_schedule))
        .route("/api/schedules/{id}", delete(delete_schedule))
        .route("/api/events", get(get_events))
        .route("/api/stream", get(stream))
        .with_state(state)
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

async fn send(state: &AppState, command: Command) -> Result<Result<CommandOutcome, ControllerError>, ApiError> {
    let (tx, rx) = oneshot::channel();
    state
        .requests
        .send(Request::Command(command, tx))
        .await
        .map_err(|_| ServiceError::EngineStopped)?;
    Ok(rx.await.map_err(|_| ServiceError::EngineStopped)?)
}

async fn get_state(State(state): State<AppState>) -> Response {
    Json(state.shared.snapshot.borrow().clone()).into_response()
}

async fn get_health(State(state): State<AppState>) -> Result<Response, ApiError> {
    let health = state.shared.snapshot.borrow().health;
    match health {
        Some(h) => Ok(Json(h).into_response()),
        None => Err(ApiError::unavailable("no sensor reading yet")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WaterBody {
    action: ManualAction,
}

async fn post_water(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let body: WaterBody = parse_body(&body)?;
    let command = match body.action {
        ManualAction::Start => Command::WaterStart,
        ManualAction::Stop => Command::WaterStop,
    };
    match send(&state, command).await? {
        Ok(CommandOutcome::Water(outcome)) => match outcome {
            ManualOutcome::Rejected { reason, ref message } => {
                let code = match reason {
                    RejectReason::Saturated => "saturated",
                    RejectReason::AlreadyWatering => "already_watering",
                    RejectReason::NoReading => "no_reading",
                };
                let mut err = ApiError::new(StatusCode::CONFLICT, code, message.clone());
                err.outcome = Some(outcome);
                Err(err)
            }
            outcome => Ok((StatusCode::ACCEPTED, Json(outcome)).into_response()),
        },
        Ok(other) => Err(unexpected(other)),
        Err(e) => Err(controller_error(e)),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SecurityBody {
    armed: bool,
}

async fn post_security(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let body: SecurityBody = parse_body(&body)?;
    let command = if body.armed { Command::Arm } else { Command::Disarm };
    match send(&state, command).await? {
        Ok(CommandOutcome::Security { state }) => Ok(Json(state).into_response()),
        Ok(other) => Err(unexpected(other)),
        Err(e) => Err(controller_error(e)),
    }
}

async fn get_schedules(State(state): State<AppState>) -> Response {
    Json(state.shared.snapshot.borrow().slots.clone()).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleBody {
    time: String,
}

async fn post_schedule(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let body: ScheduleBody = parse_body(&body)?;
    let time: TimeOfDay = body
        .time
        .parse()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_time", format!("{e}")))?;
    match send(&state, Command::AddSlot { time }).await? {
        Ok(CommandOutcome::SlotAdded { slot }) => Ok((StatusCode::CREATED, Json(slot)).into_response()),
        Ok(other) => Err(unexpected(other)),
        Err(e) => Err(controller_error(e)),
    }
}

async fn delete_schedule(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id: u32 = id
        .parse()
        .map_err(|_| ApiError::bad_request(format!("invalid slot id {id:?}")))?;
    match send(&state, Command::RemoveSlot { id: SlotId(id) }).await? {
        Ok(CommandOutcome::SlotRemoved { .. }) => Ok(StatusCode::NO_CONTENT.into_response()),
        Ok(other) => Err(unexpected(other)),
        Err(e) => Err(controller_error(e)),
    }
}

fn parse_since(query: &HashMap<String, String>) -> Result<u64, ApiError> {
    query.get("since").map_or(Ok(0), |s| {
        s.parse()
            .map_err(|_| ApiError::bad_request(format!("invalid since {s:?}")))
    })
}

async fn get_events(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let since = parse_since(&query)?;
    let history = state.shared.history.read().expect("history lock poisoned");
    let start = (since as usize).min(history.len());
    Ok(Json(&history[start..]).into_response())
}

async fn stream(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let since = query.contains_key("since").then(|| parse_since(&query)).transpose()?;
    Ok(ws.on_upgrade(move |socket| pump(socket, state, since)))
}

/// Forwards the broadcast to one subscriber. With `since`, stored events
/// after that seq are replayed first; live events already replayed are
/// skipped so each event is delivered at most once.
async fn pump(mut socket: WebSocket, state: AppState, since: Option<u64>) {
    let mut rx = state.shared.stream.subscribe();
    let mut delivered = 0u64;
    if let Some(since) = since {
        let backlog: Vec<_> = {
            let history = state.shared.history.read().expect("history lock poisoned");
            let start = (since as usize).min(history.len());
            history[start..].to_vec()
        };
        delivered = since;
        for event in backlog {
            delivered = event.seq;
            if send_json(&mut socket, &StreamMessage::Event(event)).await.is_err() {
                return;
            }
        }
    }
    let mut closing = state.closing.clone();
    loop {
        let received = tokio::select! {
            received = rx.recv() => received,
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return,
                Some(Ok(_)) => continue,
            },
            _ = async { closing.wait_for(|c| *c).await.map(|_| ()) } => {
                let _ = socket.send(Message::Close(None)).await;
                return;
            }
        };
        let message = match received {
            Ok(m) => m,
            Err(broadcast::error::RecvError::Lagged(n)) => {
                let _ = socket
                    .send(Message::Close(Some(axum::extract::ws::CloseFrame {
                        code: 1008,
                        reason: format!("subscriber lagged by {n} messages").into(),
                    })))
                    .await;
                return;
            }
            Err(broadcast::error::RecvError::Closed) => return,
        };
        if let StreamMessage::Event(event) = &message {
            if event.seq <= delivered {
                continue;
            }
            delivered = event.seq;
        }
        if send_json(&mut socket, &message).await.is_err() {
            return;
        }
    }
}

async fn send_json(socket: &mut WebSocket, message: &StreamMessage) -> Result<(), axum::Error> {
    let text = serde_json::to_string(message).expect("stream serialization cannot fail");
    socket.send(Message::Text(text.into())).await
}

fn controller_error(err: ControllerError) -> ApiError {
    match err {
        ControllerError::Schedule(ScheduleError::UnknownSlot(id)) => {
            ApiError::not_found(format!("no schedule slot with id {}", id.0))
        }
        ControllerError::Schedule(e @ ScheduleError::DuplicateTime(_)) => {
            ApiError::new(StatusCode::CONFLICT, "duplicate_time", e.to_string())
        }
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
    }
}

fn unexpected(outcome: CommandOutcome) -> ApiError {
    ApiError::new(
        StatusCode::INTERNAL_SERVER_ERROR,
        "internal",
        format!("unexpected outcome {outcome:?}"),
    )
}
