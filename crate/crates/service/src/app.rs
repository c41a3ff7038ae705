//! HTTP routes and the WebSocket session endpoint.

use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use claimforge_core::session::{InteractionEvent, Mode};
use claimforge_core::Claim;
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;
use tracing::debug;

use crate::host::{HostError, SessionHost};
use crate::wire::{ClientFrame, ClientMessage, Hello, ServerFrame, ServerMessage, PROTOCOL_VERSION};

#[derive(Clone)]
pub struct AppState {
    pub host: Arc<SessionHost>,
    pub token: Option<Arc<str>>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/claims", get(list_claims))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/log", get(session_log))
        .route("/session", get(session_socket))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state)
}

#[derive(Deserialize)]
struct TokenQuery {
    token: Option<String>,
}

/// Browsers cannot set headers on a WebSocket handshake, so the token may
/// also come as a `token` query parameter.
async fn require_token(
    State(state): State<AppState>,
    Query(q): Query<TokenQuery>,
    req: Request,
    next: Next,
) -> Response {
    let Some(expected) = state.token.as_deref() else {
        return next.run(req).await;
    };
    let bearer =
        req.headers().get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer "));
    if bearer == Some(expected) || q.token.as_deref() == Some(expected) {
        next.run(req).await
    } else {
        api_error(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token")
    }
}

fn api_error(status: StatusCode, code: &str, message: &str) -> Response {
    (status, Json(json!({ "error": { "code": code, "message": message } }))).into_response()
}

impl IntoResponse for HostError {
    fn into_response(self) -> Response {
        let status = match &self {
            HostError::UnknownClaim(_) | HostError::UnknownSession(_) => StatusCode::NOT_FOUND,
            HostError::StorageUnavailable(_) | HostError::Corrupt(_) => StatusCode::SERVICE_UNAVAILABLE,
            HostError::Pipeline(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::CONFLICT,
        };
        api_error(status, self.code(), &self.to_string())
    }
}

/// What participants may see of a claim.
#[derive(Serialize)]
struct ClaimView<'a> {
    id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    speaker: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    claim_date: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    origin_url: Option<&'a str>,
}

impl<'a> From<&'a Claim> for ClaimView<'a> {
    fn from(c: &'a Claim) -> Self {
        Self {
            id: &c.id,
            text: &c.text,
            speaker: c.speaker.as_deref(),
            claim_date: c.claim_date.map(|d| d.to_string()),
            origin_url: c.origin_url.as_deref(),
        }
    }
}

async fn list_claims(State(state): State<AppState>) -> Response {
    let claims: Vec<ClaimView> = state.host.claims().iter().map(ClaimView::from).collect();
    Json(claims).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    claim_id: String,
    #[serde(default)]
    mode: Option<Mode>,
}

#[derive(Serialize)]
struct Created {
    session_id: String,
    mode: Mode,
    claim_id: String,
}

async fn create_session(State(state): State<AppState>, Json(body): Json<CreateSession>) -> Response {
    match state.host.create(&body.claim_id, body.mode).await {
        Ok((session_id, mode)) => {
            (StatusCode::CREATED, Json(Created { session_id, mode, claim_id: body.claim_id })).into_response()
        }
        Err(e) => e.into_response(),
    }
}

async fn session_log(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.host.log(&id) {
        Ok(log) => Json(log).into_response(),
        Err(e) => e.into_response(),
    }
}

#[derive(Deserialize)]
struct SocketQuery {
    session_id: Option<String>,
    /// Creates a session when no `session_id` is given.
    claim_id: Option<String>,
    mode: Option<Mode>,
    since: Option<u64>,
}

async fn session_socket(State(state): State<AppState>, Query(q): Query<SocketQuery>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| run_socket(socket, state.host, q))
}

async fn send(socket: &mut futures::stream::SplitSink<WebSocket, Message>, frame: &ServerFrame) -> bool {
    socket.send(Message::Text(frame.encode().into())).await.is_ok()
}

async fn run_socket(socket: WebSocket, host: Arc<SessionHost>, q: SocketQuery) {
    let (mut sink, mut stream) = socket.split();
    let id = match (q.session_id, q.claim_id) {
        (Some(id), _) => id,
        (None, Some(claim_id)) => match host.create(&claim_id, q.mode).await {
            Ok((id, _)) => id,
            Err(e) => {
                let _ = send(&mut sink, &ServerFrame::error("", 0, e.code(), e.to_string())).await;
                let _ = sink.close().await;
                return;
            }
        },
        (None, None) => {
            let frame = ServerFrame::error("", 0, "unknown_session", "session_id or claim_id is required");
            let _ = send(&mut sink, &frame).await;
            let _ = sink.close().await;
            return;
        }
    };
    let attached = match host.attach(&id).await {
        Ok(a) => a,
        Err(e) => {
            let code = if matches!(e, HostError::UnknownSession(_)) { "unknown_session" } else { e.code() };
            let _ = send(&mut sink, &ServerFrame::error(&id, 0, code, e.to_string())).await;
            let _ = sink.close().await;
            return;
        }
    };
    let mut frames = attached.frames;
    let mut sent = q.since.unwrap_or(0);
    if !greet(
        &mut sink,
        &id,
        &attached.session.transcript,
        attached.session.mode,
        &attached.session.claim.id,
        &mut sent,
    )
    .await
    {
        return;
    }
    loop {
        tokio::select! {
            incoming = stream.next() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Binary(_))) => {
                        let last = host.snapshot(&id).await.map(|s| s.last_seq()).unwrap_or(0);
                        let frame = ServerFrame::error(&id, last + 1, "malformed_frame", "binary frames are not supported");
                        if !send(&mut sink, &frame).await { break }
                        continue;
                    }
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                if !on_text(&mut sink, &host, &id, text.as_str(), &mut sent).await {
                    break;
                }
            }
            frame = frames.recv() => match frame {
                Ok(f) => {
                    if f.seq <= sent && matches!(f.message, ServerMessage::Event(_)) {
                        continue;
                    }
                    sent = sent.max(f.seq);
                    if !send(&mut sink, &f).await { break }
                }
                Err(RecvError::Lagged(n)) => {
                    // Catch up from the session state rather than dropping events.
                    debug!(session = %id, missed = n, "subscriber lagged");
                    let Ok(s) = host.snapshot(&id).await else { break };
                    if !resend(&mut sink, &id, &s.transcript, &mut sent).await { break }
                }
                Err(RecvError::Closed) => break,
            }
        }
    }
    let _ = sink.close().await;
}

async fn greet(
    sink: &mut futures::stream::SplitSink<WebSocket, Message>,
    id: &str,
    transcript: &[InteractionEvent],
    mode: Mode,
    claim_id: &str,
    sent: &mut u64,
) -> bool {
    let last_seq = transcript.last().map_or(0, |e| e.seq);
    let hello = ServerFrame {
        session_id: id.to_string(),
        seq: last_seq + 1,
        message: ServerMessage::Hello(Hello { v: PROTOCOL_VERSION, mode, claim_id: claim_id.to_string(), last_seq }),
    };
    send(sink, &hello).await && resend(sink, id, transcript, sent).await
}

async fn resend(
    sink: &mut futures::stream::SplitSink<WebSocket, Message>,
    id: &str,
    transcript: &[InteractionEvent],
    sent: &mut u64,
) -> bool {
    let from = *sent;
    for ev in transcript.iter().filter(|e| e.seq > from) {
        *sent = ev.seq;
        if !send(sink, &ServerFrame::event(id, ev.clone())).await {
            return false;
        }
    }
    true
}

/// Handles one client text frame. Decoding errors are answered with an
/// error frame and the connection stays open. Returns false when the
/// socket is gone.
async fn on_text(
    sink: &mut futures::stream::SplitSink<WebSocket, Message>,
    host: &Arc<SessionHost>,
    id: &str,
    text: &str,
    sent: &mut u64,
) -> bool {
    let next_seq = || async { host.snapshot(id).await.map(|s| s.last_seq() + 1).unwrap_or(0) };
    let frame = match ClientFrame::decode(text) {
        Ok(f) => f,
        Err(e) => return send(sink, &ServerFrame::error(id, next_seq().await, e.code(), e.to_string())).await,
    };
    if frame.session_id != id {
        let msg = format!("this connection is attached to {id}");
        return send(sink, &ServerFrame::error(id, next_seq().await, "session_mismatch", msg)).await;
    }
    match frame.message {
        ClientMessage::Hello { since } => {
            let Ok(s) = host.snapshot(id).await else { return false };
            // An explicit resume point re-sends everything after it.
            if let Some(since) = since {
                *sent = (*sent).min(since);
            }
            greet(sink, id, &s.transcript, s.mode, &s.claim.id, sent).await
        }
        ClientMessage::Input(input) => match host.submit(id, frame.seq, input).await {
            Ok(done) => {
                let ack = ServerFrame {
                    session_id: id.to_string(),
                    seq: done.next_seq,
                    message: ServerMessage::Ack { client_seq: frame.seq, applied: done.applied },
                };
                send(sink, &ack).await
            }
            Err(e) => send(sink, &ServerFrame::error(id, next_seq().await, e.code(), e.to_string())).await,
        },
    }
}
