//! HTTP and WebSocket interface.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/sessions` | start a live session |
//! | GET | `/sessions` | list sessions |
//! | GET | `/sessions/{id}` | state and full record |
//! | POST | `/sessions/{id}/events` | append a marker |
//! | POST | `/sessions/{id}/questionnaire` | attach Likert answers |
//! | POST | `/sessions/{id}/finalize` | stop and persist |
//! | GET | `/sessions/{id}/report` | grouped report for one session |
//! | GET | `/report` | grouped report over finalized sessions |
//! | GET | `/sessions/{id}/live` | WebSocket of live updates |
//! | GET | `/health` | liveness and ingest counters |
//!
//! Errors are `{"code": "...", "message": "..."}` with a matching status.

use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use flowstate_core::metrics::fsi::FsiConfig;
use flowstate_core::session::{aggregate, GroupBy, LikertAnswers, QuestionnaireResponse, RecordConfig, SessionEvent, SessionRecord};
use flowstate_core::{EngineConfig, StreamConfig, FORMULA_VERSION};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::live::{Clock, Hub, SessionEntry, SessionState, StoreError};

/// WebSocket close code sent when the session exists but is not live.
pub const CLOSE_NOT_LIVE: u16 = 4409;

#[derive(Clone)]
pub struct AppState {
    hub: Arc<Hub>,
    clock: Clock,
    config: Arc<EngineConfig>,
    create_lock: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(hub: Arc<Hub>, clock: Clock, config: EngineConfig) -> Self {
        Self { hub, clock, config: Arc::new(config), create_lock: Arc::default() }
    }

    pub fn hub(&self) -> &Arc<Hub> {
        &self.hub
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/events", post(add_event))
        .route("/sessions/{id}/questionnaire", post(add_questionnaire))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/sessions/{id}/report", get(session_report))
        .route("/sessions/{id}/live", get(live))
        .route("/report", get(report))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "bad_request", message: message.into() }
    }

    fn not_found(id: &str) -> Self {
        Self { status: StatusCode::NOT_FOUND, code: "not_found", message: format!("no session {id:?}") }
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self { status: StatusCode::CONFLICT, code: "conflict", message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal", message: message.into() }
    }

    fn from_store(e: StoreError, id: &str) -> Self {
        match e {
            StoreError::NotFound => Self::not_found(id),
            StoreError::Conflict(m) => Self::conflict(m),
            StoreError::Invalid(m) => Self::bad_request(m),
            StoreError::Io(m) => Self::internal(m),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

#[derive(Serialize)]
struct SessionView<'a> {
    id: &'a str,
    state: SessionState,
    events: usize,
    snapshots: usize,
    has_questionnaire: bool,
}

impl<'a> From<&'a SessionEntry> for SessionView<'a> {
    fn from(e: &'a SessionEntry) -> Self {
        Self {
            id: &e.record.id,
            state: e.state,
            events: e.record.events.len(),
            snapshots: e.record.metric_series.len(),
            has_questionnaire: e.record.questionnaire.is_some(),
        }
    }
}

#[derive(Serialize)]
struct SessionDetail<'a> {
    state: SessionState,
    record: &'a SessionRecord,
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let source = state.hub.source();
    let ingest = source.ingest.as_ref().map(|c| {
        json!({
            "packets": c.packets.load(Ordering::Relaxed),
            "frames": c.frames.load(Ordering::Relaxed),
            "malformed": c.malformed.load(Ordering::Relaxed),
            "skipped": c.skipped.load(Ordering::Relaxed),
            "rejected": c.rejected.load(Ordering::Relaxed),
        })
    });
    Json(json!({
        "status": "ok",
        "formula_version": FORMULA_VERSION,
        "live_session": state.hub.store().live_id(),
        "queue": { "len": source.queue.len(), "dropped": source.queue.dropped() },
        "ingest": ingest,
    }))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    stream: Option<StreamConfig>,
    fsi: Option<FsiConfig>,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) { CreateSession::default() } else { parse_body(&body)? };
    let mut config = (*state.config).clone();
    if let Some(stream) = req.stream {
        config.stream = stream;
    }
    if let Some(fsi) = req.fsi {
        config.metrics.fsi = fsi;
    }
    config.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;

    let _guard = state.create_lock.lock().expect("create lock");
    let store = state.hub.store();
    if let Some(live) = store.live_id() {
        return Err(ApiError::conflict(format!("session {live} is still live")));
    }
    let id = uuid::Uuid::new_v4().to_string();
    let record_config = RecordConfig {
        stream: config.stream.clone(),
        fsi: config.metrics.fsi,
        formula_version: FORMULA_VERSION.to_string(),
    };
    let started_at = state.clock.now();
    store.insert(SessionEntry { record: SessionRecord::new(id.clone(), record_config), state: SessionState::Live, started_at });
    state.hub.start(&id, &config, started_at).map_err(ApiError::internal)?;
    let entry = store.get(&id).expect("just inserted");
    Ok((StatusCode::CREATED, Json(json!(SessionView::from(&entry)))).into_response())
}

async fn list_sessions(State(state): State<AppState>) -> Json<Value> {
    let entries = state.hub.store().list();
    Json(json!(entries.iter().map(SessionView::from).collect::<Vec<_>>()))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let entry = state.hub.store().get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    Ok(Json(json!(SessionDetail { state: entry.state, record: &entry.record })))
}

/// The body is a session event; `time` defaults to now on the session clock.
async fn add_event(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let store = state.hub.store();
    let entry = store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    if entry.state != SessionState::Live {
        return Err(ApiError::conflict("session is finalized"));
    }
    let mut value: Value = parse_body(&body)?;
    let obj = value.as_object_mut().ok_or_else(|| ApiError::bad_request("event must be a JSON object"))?;
    if !obj.contains_key("time") {
        obj.insert("time".into(), json!((state.clock.now() - entry.started_at).max(0.0)));
    }
    let event: SessionEvent =
        serde_json::from_value(value).map_err(|e| ApiError::bad_request(format!("invalid event: {e}")))?;
    let event = store.add_event(&id, event).map_err(|e| ApiError::from_store(e, &id))?;
    Ok((StatusCode::CREATED, Json(json!(event))).into_response())
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Accepts either `{"Q1": .., "Q10": ..}` or a full
/// `{"answers": {...}, "completed_at": <unix seconds>}`.
async fn add_questionnaire(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let (answers, completed_at) = match serde_json::from_slice::<QuestionnaireResponse>(&body) {
        Ok(q) => (q.answers, q.completed_at),
        Err(_) => (parse_body::<LikertAnswers>(&body)?, unix_now()),
    };
    let q = state.hub.store().set_questionnaire(&id, answers, completed_at).map_err(|e| ApiError::from_store(e, &id))?;
    Ok((StatusCode::CREATED, Json(json!(q))).into_response())
}

async fn finalize(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let entry = state.hub.store().finalize(&id).map_err(|e| ApiError::from_store(e, &id))?;
    state.hub.stop(&id);
    Ok(Json(json!(SessionView::from(&entry))))
}

#[derive(Deserialize)]
struct ReportQuery {
    group_by: Option<String>,
    format: Option<String>,
}

fn render_report(records: &[SessionRecord], q: &ReportQuery) -> ApiResult<Response> {
    let by: GroupBy = q.group_by.as_deref().unwrap_or("kind").parse().map_err(|e: flowstate_core::session::SessionError| {
        ApiError::bad_request(e.to_string())
    })?;
    let report = aggregate(records, by);
    match q.format.as_deref().unwrap_or("json") {
        "json" => Ok(Json(report).into_response()),
        "csv" => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).map_err(|e| ApiError::internal(e.to_string()))?;
            Ok(([(header::CONTENT_TYPE, "text/csv")], buf).into_response())
        }
        other => Err(ApiError::bad_request(format!("unknown format {other:?}; expected json or csv"))),
    }
}

async fn session_report(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> ApiResult<Response> {
    let entry = state.hub.store().get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    render_report(std::slice::from_ref(&entry.record), &q)
}

async fn report(State(state): State<AppState>, Query(q): Query<ReportQuery>) -> ApiResult<Response> {
    render_report(&state.hub.store().finalized_records(), &q)
}

async fn live(State(state): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> ApiResult<Response> {
    if state.hub.store().get(&id).is_none() {
        return Err(ApiError::not_found(&id));
    }
    let rx = state.hub.subscribe(&id);
    Ok(ws.on_upgrade(move |socket| stream_updates(socket, rx)))
}

async fn close(socket: &mut WebSocket, code: u16, reason: &'static str) {
    let _ = socket.send(Message::Close(Some(CloseFrame { code, reason: reason.into() }))).await;
}

async fn stream_updates(mut socket: WebSocket, rx: Option<tokio::sync::watch::Receiver<Option<Arc<str>>>>) {
    let Some(mut rx) = rx else {
        close(&mut socket, CLOSE_NOT_LIVE, "session is not live").await;
        return;
    };
    let current = rx.borrow_and_update().clone();
    if let Some(json) = current {
        if socket.send(Message::Text(json.as_ref().into())).await.is_err() {
            return;
        }
    }
    loop {
        tokio::select! {
            changed = rx.changed() => {
                if changed.is_err() {
                    close(&mut socket, 1000, "session finalized").await;
                    return;
                }
                let next = rx.borrow_and_update().clone();
                if let Some(json) = next {
                    if socket.send(Message::Text(json.as_ref().into())).await.is_err() {
                        return;
                    }
                }
            }
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
