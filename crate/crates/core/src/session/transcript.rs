//! JSON-lines transcript export: a schema header line, then one event per
//! line in sequence order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::InteractionEvent;

pub const SCHEMA: &str = "claimforge.transcript";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub schema: String,
    pub version: u32,
    pub session_id: String,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unsupported transcript schema {schema:?} version {version}")]
    Unsupported { schema: String, version: u32 },
    #[error("empty transcript")]
    Empty,
}

pub fn export_jsonl(session_id: &str, events: &[InteractionEvent]) -> String {
    let header = TranscriptHeader { schema: SCHEMA.into(), version: SCHEMA_VERSION, session_id: session_id.into() };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for ev in events {
        out.push_str(&serde_json::to_string(ev).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn import_jsonl(text: &str) -> Result<(TranscriptHeader, Vec<InteractionEvent>), TranscriptError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(TranscriptError::Empty)?;
    let header: TranscriptHeader =
        serde_json::from_str(first).map_err(|e| TranscriptError::Parse { line: 1, reason: e.to_string() })?;
    if header.schema != SCHEMA || header.version != SCHEMA_VERSION {
        return Err(TranscriptError::Unsupported { schema: header.schema, version: header.version });
    }
    let events = lines
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TranscriptError::Parse { line: i + 1, reason: e.to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, events))
}
