//! The service over real sockets: HTTP endpoints and the WebSocket protocol.

mod common;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use claimforge_core::session::{EventBody, Input};
use claimforge_core::StrategyKind;
use claimforge_service::{serve_on, AppState, ClientFrame, ClientMessage, FileEventStore, ServerFrame, ServerMessage};
use common::*;
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn start(token: Option<&str>) -> (SocketAddr, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let host = host_with(replay_ctx(), Arc::new(FileEventStore::new(dir.path())));
    let state = AppState { host, token: token.map(Arc::from) };
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve_on(listener, state));
    (addr, dir)
}

async fn create(addr: SocketAddr, body: Value) -> (reqwest::StatusCode, Value) {
    let resp = reqwest::Client::new().post(format!("http://{addr}/sessions")).json(&body).send().await.unwrap();
    let status = resp.status();
    (status, resp.json().await.unwrap_or(Value::Null))
}

async fn connect(addr: SocketAddr, query: &str) -> Ws {
    tokio_tungstenite::connect_async(format!("ws://{addr}/session?{query}")).await.unwrap().0
}

/// The next protocol frame, or `None` once the server closes.
async fn next(ws: &mut Ws) -> Option<ServerFrame> {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next()).await.expect("frame within 10s")?;
        match msg.unwrap() {
            Message::Text(t) => return Some(ServerFrame::decode(t.as_str()).unwrap()),
            Message::Close(_) => return None,
            _ => continue,
        }
    }
}

async fn send(ws: &mut Ws, text: String) {
    ws.send(Message::Text(text.into())).await.unwrap();
}

fn input(id: &str, seq: u64, input: Input) -> String {
    ClientFrame { session_id: id.into(), seq, message: ClientMessage::Input(input) }.encode()
}

fn event_kind(f: &ServerFrame) -> Option<&'static str> {
    match &f.message {
        ServerMessage::Event(ev) => Some(ev.body.kind()),
        _ => None,
    }
}

/// Reads frames until an event of `kind` arrives; returns everything read.
async fn until_event(ws: &mut Ws, kind: &str) -> Vec<ServerFrame> {
    let mut out = Vec::new();
    loop {
        let f = next(ws).await.expect("socket closed early");
        let done = event_kind(&f) == Some(kind);
        out.push(f);
        if done {
            return out;
        }
    }
}

#[tokio::test]
async fn http_endpoints() {
    let (addr, _dir) = start(None).await;
    let http = reqwest::Client::new();
    let health = http.get(format!("http://{addr}/healthz")).send().await.unwrap();
    assert_eq!(health.status(), 200);
    assert_eq!(health.text().await.unwrap(), "ok");

    let claims: Vec<Value> = http.get(format!("http://{addr}/claims")).send().await.unwrap().json().await.unwrap();
    assert_eq!(claims.len(), 10);
    assert_eq!(claims[0]["id"], "STS001");
    assert!(claims.iter().all(|c| c.get("gold_label").is_none()));

    let (status, body) = create(addr, json!({"claim_id": "STS015", "mode": "exploratory"})).await;
    assert_eq!(status, 201);
    assert_eq!(body["mode"], "exploratory");
    let id = body["session_id"].as_str().unwrap().to_string();

    let (status, body) = create(addr, json!({"claim_id": "STS001"})).await;
    assert_eq!(status, 201);
    assert!(["exploratory", "summary", "self_search", "control"].contains(&body["mode"].as_str().unwrap()));

    let (status, body) = create(addr, json!({"claim_id": "STS999"})).await;
    assert_eq!(status, 404);
    assert_eq!(body["error"]["code"], "unknown_claim");

    let log: Value = http.get(format!("http://{addr}/sessions/{id}/log")).send().await.unwrap().json().await.unwrap();
    assert_eq!(log["claim_id"], "STS015");
    assert_eq!(log["events"].as_array().unwrap().len(), 1);
    assert_eq!(log["events"][0]["kind"], "session_created");
    let missing = http.get(format!("http://{addr}/sessions/nope/log")).send().await.unwrap();
    assert_eq!(missing.status(), 404);
}

#[tokio::test]
async fn bearer_token_guards_everything_but_health() {
    let (addr, _dir) = start(Some("tok-123")).await;
    let http = reqwest::Client::new();
    assert_eq!(http.get(format!("http://{addr}/healthz")).send().await.unwrap().status(), 200);
    assert_eq!(http.get(format!("http://{addr}/claims")).send().await.unwrap().status(), 401);
    let ok = http.get(format!("http://{addr}/claims")).bearer_auth("tok-123").send().await.unwrap();
    assert_eq!(ok.status(), 200);
    let wrong = http.get(format!("http://{addr}/claims")).bearer_auth("tok-124").send().await.unwrap();
    assert_eq!(wrong.status(), 401);
    assert!(tokio_tungstenite::connect_async(format!("ws://{addr}/session?claim_id=STS015")).await.is_err());
    let mut ws = connect(addr, "claim_id=STS015&mode=control&token=tok-123").await;
    assert!(matches!(next(&mut ws).await.unwrap().message, ServerMessage::Hello(_)));
}

#[tokio::test]
async fn unknown_session_gets_an_error_then_close() {
    let (addr, _dir) = start(None).await;
    let mut ws = connect(addr, "session_id=doesnotexist").await;
    let f = next(&mut ws).await.unwrap();
    let ServerMessage::Error { code, .. } = &f.message else { panic!("{f:?}") };
    assert_eq!(code, "unknown_session");
    assert!(next(&mut ws).await.is_none());
}

#[tokio::test]
async fn websocket_session_flow() {
    let (addr, _dir) = start(None).await;
    let (_, body) = create(addr, json!({"claim_id": "STS015", "mode": "exploratory"})).await;
    let id = body["session_id"].as_str().unwrap().to_string();
    let mut ws = connect(addr, &format!("session_id={id}")).await;

    let hello = next(&mut ws).await.unwrap();
    let ServerMessage::Hello(h) = &hello.message else { panic!("{hello:?}") };
    assert_eq!((h.v, h.last_seq, h.claim_id.as_str()), (1, 1, "STS015"));
    assert_eq!(hello.seq, 2, "control frames carry the next seq");
    assert_eq!(event_kind(&next(&mut ws).await.unwrap()), Some("session_created"));

    let ask = input(&id, 1, Input::UserMessage { text: "Where was this published?".into() });
    send(&mut ws, ask.clone()).await;
    let frames = until_event(&mut ws, "provisional_prompt_issued").await;
    let ack = frames.iter().find_map(|f| match f.message {
        ServerMessage::Ack { client_seq, applied } => Some((client_seq, applied)),
        _ => None,
    });
    assert_eq!(ack, Some((1, true)));
    let kinds: Vec<_> = frames.iter().filter_map(event_kind).collect();
    assert_eq!(kinds, ["strategy_requested", "strategy_completed", "provisional_prompt_issued"]);
    let seqs: Vec<u64> = frames.iter().filter(|f| event_kind(f).is_some()).map(|f| f.seq).collect();
    assert_eq!(seqs, [2, 3, 4]);

    // The same frame again: acknowledged, not applied.
    send(&mut ws, ask).await;
    let f = next(&mut ws).await.unwrap();
    assert_eq!(f.message, ServerMessage::Ack { client_seq: 1, applied: false });

    // A different message on an old seq is stale.
    send(&mut ws, input(&id, 2, Input::UserMessage { text: "late".into() })).await;
    let f = next(&mut ws).await.unwrap();
    assert!(matches!(&f.message, ServerMessage::Error { code, .. } if code == "stale_sequence"), "{f:?}");

    // Bad frames get an error and the connection stays usable.
    send(&mut ws, json!({"type": "teleport", "session_id": id, "seq": 4, "payload": {}}).to_string()).await;
    let f = next(&mut ws).await.unwrap();
    assert!(matches!(&f.message, ServerMessage::Error { code, .. } if code == "unknown_message_type"), "{f:?}");
    send(&mut ws, json!({"type": "user_message", "seq": 4, "payload": {"text": "x"}}).to_string()).await;
    let f = next(&mut ws).await.unwrap();
    assert!(matches!(&f.message, ServerMessage::Error { code, .. } if code == "malformed_frame"), "{f:?}");
    send(&mut ws, "{not json".into()).await;
    let f = next(&mut ws).await.unwrap();
    assert!(matches!(&f.message, ServerMessage::Error { code, .. } if code == "malformed_frame"), "{f:?}");

    send(&mut ws, input(&id, 4, Input::UserMessage {
        text: "I think the source may not be very credible. It is from social media, and this is why I feel this way.".into(),
    })).await;
    let frames = until_event(&mut ws, "system_message").await;
    let kinds: Vec<_> = frames.iter().filter_map(event_kind).collect();
    assert_eq!(kinds, ["provisional_submitted", "strategy_verdict_issued", "system_message"]);

    // A second connection resumes after a given seq.
    let mut late = connect(addr, &format!("session_id={id}&since=5")).await;
    let hello = next(&mut late).await.unwrap();
    let ServerMessage::Hello(h) = hello.message else { panic!() };
    assert_eq!(h.last_seq, 7);
    let resumed: Vec<u64> =
        [next(&mut late).await.unwrap(), next(&mut late).await.unwrap()].iter().map(|f| f.seq).collect();
    assert_eq!(resumed, [6, 7]);

    // Both connections see new events.
    send(&mut ws, input(&id, 7, Input::RequestStrategy { strategy: StrategyKind::FactChecking })).await;
    let mine = until_event(&mut ws, "provisional_prompt_issued").await;
    let theirs = until_event(&mut late, "provisional_prompt_issued").await;
    let events = |fs: &[ServerFrame]| fs.iter().filter(|f| event_kind(f).is_some()).cloned().collect::<Vec<_>>();
    assert_eq!(events(&mine), events(&theirs));
    let ServerMessage::Event(ev) = &events(&mine)[0].message else { panic!() };
    assert!(matches!(ev.body, EventBody::StrategyRequested { strategy: StrategyKind::FactChecking, .. }));
}

#[tokio::test]
async fn create_over_websocket() {
    let (addr, _dir) = start(None).await;
    let mut ws = connect(addr, "claim_id=STS015&mode=self_search").await;
    let hello = next(&mut ws).await.unwrap();
    let ServerMessage::Hello(h) = &hello.message else { panic!("{hello:?}") };
    assert_eq!(h.mode.as_str(), "self_search");
    let created = next(&mut ws).await.unwrap();
    assert_eq!(event_kind(&created), Some("session_created"));
    let http = reqwest::Client::new();
    let log: Value = http
        .get(format!("http://{addr}/sessions/{}/log", hello.session_id))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(log["mode"], "self_search");
}
