//! WebSocket frames. Every frame is one JSON text message
//! `{"type", "session_id", "seq", "payload"}`.
//!
//! Client frames carry the last event seq the client has seen. Event frames
//! from the server carry the event's own seq; `hello`, `ack` and `error`
//! frames carry the seq the session will assign next.

use claimforge_core::session::{EventBody, Input, InteractionEvent, Mode};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireMessage {
    #[serde(rename = "type")]
    pub kind: String,
    pub session_id: String,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unknown message type {0:?}")]
    UnknownMessageType(String),
}

impl WireError {
    pub fn code(&self) -> &'static str {
        match self {
            WireError::MalformedFrame(_) => "malformed_frame",
            WireError::UnknownMessageType(_) => "unknown_message_type",
        }
    }
}

/// Participant actions a client may send. Completions are internal and are
/// not part of the protocol.
pub const CLIENT_INPUT_KINDS: [&str; 9] = [
    "user_message",
    "request_strategy",
    "submit_provisional",
    "ask_question",
    "request_final_verdict",
    "select_final_label",
    "submit_final_reasoning",
    "submit_final_verdict",
    "view_article",
];

pub const SERVER_CONTROL_KINDS: [&str; 3] = ["hello", "ack", "error"];

impl WireMessage {
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }

    pub fn decode(text: &str) -> Result<Self, WireError> {
        let value: Value = serde_json::from_str(text).map_err(|e| WireError::MalformedFrame(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| WireError::MalformedFrame("frame is not an object".into()))?;
        for field in ["type", "session_id", "seq"] {
            if !obj.contains_key(field) {
                return Err(WireError::MalformedFrame(format!("missing {field}")));
            }
        }
        serde_json::from_value(value).map_err(|e| WireError::MalformedFrame(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ClientMessage {
    /// Optional resume point: events after `since` are replayed.
    Hello {
        since: Option<u64>,
    },
    Input(Input),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientFrame {
    pub session_id: String,
    pub seq: u64,
    pub message: ClientMessage,
}

fn payload_object(payload: Value) -> Result<Map<String, Value>, WireError> {
    match payload {
        Value::Object(m) => Ok(m),
        Value::Null => Ok(Map::new()),
        _ => Err(WireError::MalformedFrame("payload is not an object".into())),
    }
}

impl ClientFrame {
    pub fn to_wire(&self) -> WireMessage {
        let (kind, payload) = match &self.message {
            ClientMessage::Hello { since } => {
                ("hello".to_string(), since.map(|s| json!({ "since": s })).unwrap_or_else(|| json!({})))
            }
            ClientMessage::Input(input) => {
                let Value::Object(mut m) = serde_json::to_value(input).expect("inputs serialize") else {
                    unreachable!("inputs serialize to objects")
                };
                let Some(Value::String(kind)) = m.remove("type") else { unreachable!("inputs are tagged") };
                (kind, Value::Object(m))
            }
        };
        WireMessage { kind, session_id: self.session_id.clone(), seq: self.seq, payload }
    }

    pub fn from_wire(msg: WireMessage) -> Result<Self, WireError> {
        let message = match msg.kind.as_str() {
            "hello" => {
                let m = payload_object(msg.payload)?;
                let since = match m.get("since") {
                    None | Some(Value::Null) => None,
                    Some(v) => {
                        Some(v.as_u64().ok_or_else(|| WireError::MalformedFrame("since must be an integer".into()))?)
                    }
                };
                ClientMessage::Hello { since }
            }
            k if CLIENT_INPUT_KINDS.contains(&k) => {
                let mut m = payload_object(msg.payload)?;
                m.insert("type".into(), Value::String(msg.kind.clone()));
                let input: Input =
                    serde_json::from_value(Value::Object(m)).map_err(|e| WireError::MalformedFrame(e.to_string()))?;
                ClientMessage::Input(input)
            }
            other => return Err(WireError::UnknownMessageType(other.to_string())),
        };
        Ok(Self { session_id: msg.session_id, seq: msg.seq, message })
    }

    pub fn encode(&self) -> String {
        self.to_wire().encode()
    }

    pub fn decode(text: &str) -> Result<Self, WireError> {
        Self::from_wire(WireMessage::decode(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub v: u32,
    pub mode: Mode,
    pub claim_id: String,
    pub last_seq: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ServerMessage {
    Hello(Hello),
    Event(InteractionEvent),
    /// `applied` is false for a recognised duplicate.
    Ack {
        client_seq: u64,
        applied: bool,
    },
    Error {
        code: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerFrame {
    pub session_id: String,
    pub seq: u64,
    pub message: ServerMessage,
}

impl ServerFrame {
    pub fn event(session_id: &str, event: InteractionEvent) -> Self {
        Self { session_id: session_id.to_string(), seq: event.seq, message: ServerMessage::Event(event) }
    }

    pub fn error(session_id: &str, next_seq: u64, code: &str, message: impl Into<String>) -> Self {
        Self {
            session_id: session_id.to_string(),
            seq: next_seq,
            message: ServerMessage::Error { code: code.to_string(), message: message.into() },
        }
    }

    pub fn to_wire(&self) -> WireMessage {
        let (kind, payload) = match &self.message {
            ServerMessage::Hello(h) => ("hello".to_string(), serde_json::to_value(h).expect("hello serializes")),
            ServerMessage::Ack { client_seq, applied } => {
                ("ack".to_string(), json!({ "client_seq": client_seq, "applied": applied }))
            }
            ServerMessage::Error { code, message } => {
                ("error".to_string(), json!({ "code": code, "message": message }))
            }
            ServerMessage::Event(ev) => {
                let Value::Object(mut body) = serde_json::to_value(&ev.body).expect("events serialize") else {
                    unreachable!("event bodies are adjacently tagged")
                };
                let data = body.remove("payload").unwrap_or(Value::Null);
                (ev.body.kind().to_string(), json!({ "at": ev.at, "actor": ev.actor, "data": data }))
            }
        };
        WireMessage { kind, session_id: self.session_id.clone(), seq: self.seq, payload }
    }

    pub fn from_wire(msg: WireMessage) -> Result<Self, WireError> {
        let malformed = |e: serde_json::Error| WireError::MalformedFrame(e.to_string());
        let message = match msg.kind.as_str() {
            "hello" => ServerMessage::Hello(serde_json::from_value(msg.payload).map_err(malformed)?),
            "ack" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Ack {
                    client_seq: u64,
                    applied: bool,
                }
                let a: Ack = serde_json::from_value(msg.payload).map_err(malformed)?;
                ServerMessage::Ack { client_seq: a.client_seq, applied: a.applied }
            }
            // Error events share the `error` type with control errors; only
            // events carry a `data` member.
            "error" if msg.payload.get("data").is_none() => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct ErrorPayload {
                    code: String,
                    message: String,
                }
                let e: ErrorPayload = serde_json::from_value(msg.payload).map_err(malformed)?;
                ServerMessage::Error { code: e.code, message: e.message }
            }
            k if EventBody::KINDS.contains(&k) => {
                let mut m = payload_object(msg.payload)?;
                let data = m.remove("data").unwrap_or(Value::Null);
                m.insert("seq".into(), json!(msg.seq));
                m.insert("kind".into(), Value::String(msg.kind.clone()));
                m.insert("payload".into(), data);
                ServerMessage::Event(serde_json::from_value(Value::Object(m)).map_err(malformed)?)
            }
            other => return Err(WireError::UnknownMessageType(other.to_string())),
        };
        Ok(Self { session_id: msg.session_id, seq: msg.seq, message })
    }

    pub fn encode(&self) -> String {
        self.to_wire().encode()
    }

    pub fn decode(text: &str) -> Result<Self, WireError> {
        Self::from_wire(WireMessage::decode(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_session_id_is_malformed() {
        let err = WireMessage::decode(r#"{"type":"user_message","seq":1,"payload":{"text":"hi"}}"#).unwrap_err();
        assert_eq!(err, WireError::MalformedFrame("missing session_id".into()));
        assert!(matches!(WireMessage::decode("not json"), Err(WireError::MalformedFrame(_))));
        assert!(matches!(WireMessage::decode("[1]"), Err(WireError::MalformedFrame(_))));
    }

    #[test]
    fn unknown_type_is_distinguished() {
        let frame = r#"{"type":"teleport","session_id":"s","seq":0,"payload":{}}"#;
        assert_eq!(ClientFrame::decode(frame).unwrap_err(), WireError::UnknownMessageType("teleport".into()));
        assert_eq!(ServerFrame::decode(frame).unwrap_err(), WireError::UnknownMessageType("teleport".into()));
    }

    #[test]
    fn completions_are_not_client_messages() {
        let frame = r#"{"type":"free_answer_failed","session_id":"s","seq":0,"payload":{"error":"x"}}"#;
        assert!(matches!(ClientFrame::decode(frame), Err(WireError::UnknownMessageType(_))));
    }

    #[test]
    fn input_payload_is_flattened() {
        let f = ClientFrame {
            session_id: "s".into(),
            seq: 3,
            message: ClientMessage::Input(Input::UserMessage { text: "hi".into() }),
        };
        assert_eq!(f.encode(), r#"{"type":"user_message","session_id":"s","seq":3,"payload":{"text":"hi"}}"#);
    }
}
