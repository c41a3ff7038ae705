//! Append-only session logs. The default store keeps one JSON-lines file
//! per session: a header line, then one event per line.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use claimforge_core::session::{InteractionEvent, Mode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LOG_SCHEMA: &str = "claimforge.session-log";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage unavailable: {0}")]
    StorageUnavailable(String),
    #[error("session log {session_id} is corrupt at line {line}: {message}")]
    Corrupt { session_id: String, line: usize, message: String },
    #[error("session log {0} already exists")]
    Exists(String),
    #[error("session log {0} does not exist")]
    Missing(String),
    #[error("invalid session id {0:?}")]
    InvalidId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: String,
    pub session_id: String,
    pub mode: Mode,
    pub claim_id: String,
}

impl LogHeader {
    pub fn new(session_id: &str, mode: Mode, claim_id: &str) -> Self {
        Self { schema: LOG_SCHEMA.into(), session_id: session_id.into(), mode, claim_id: claim_id.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistedLog {
    pub session_id: String,
    pub mode: Mode,
    pub claim_id: String,
    pub events: Vec<InteractionEvent>,
}

/// Session ids double as file names, so only a conservative alphabet is
/// accepted.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

pub trait EventStore: Send + Sync {
    fn create(&self, header: &LogHeader) -> Result<(), StoreError>;
    /// Durable once this returns.
    fn append(&self, session_id: &str, events: &[InteractionEvent]) -> Result<(), StoreError>;
    fn load(&self, session_id: &str) -> Result<Option<PersistedLog>, StoreError>;
    fn list(&self) -> Result<Vec<String>, StoreError>;
}

fn unavailable(e: impl std::fmt::Display) -> StoreError {
    StoreError::StorageUnavailable(e.to_string())
}

#[derive(Debug, Clone)]
pub struct FileEventStore {
    dir: PathBuf,
}

impl FileEventStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, session_id: &str) -> Result<PathBuf, StoreError> {
        if !valid_session_id(session_id) {
            return Err(StoreError::InvalidId(session_id.into()));
        }
        Ok(self.dir.join(format!("{session_id}.jsonl")))
    }
}

/// Parses a log. A final line without its newline is a torn write and is
/// dropped; anything else that fails to parse is corruption.
pub fn parse_log(session_id: &str, text: &str) -> Result<PersistedLog, StoreError> {
    let corrupt = |line: usize, message: String| StoreError::Corrupt { session_id: session_id.into(), line, message };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| corrupt(1, "missing header".into()))?;
    let header: LogHeader = serde_json::from_str(first).map_err(|e| corrupt(1, e.to_string()))?;
    if header.schema != LOG_SCHEMA || header.session_id != session_id {
        return Err(corrupt(1, format!("unexpected header for {}", header.session_id)));
    }
    let mut events = Vec::new();
    for (i, line) in lines {
        let ev: InteractionEvent = serde_json::from_str(line).map_err(|e| corrupt(i + 1, e.to_string()))?;
        if ev.seq != events.len() as u64 + 1 {
            return Err(corrupt(i + 1, format!("expected seq {}, found {}", events.len() + 1, ev.seq)));
        }
        events.push(ev);
    }
    Ok(PersistedLog { session_id: header.session_id, mode: header.mode, claim_id: header.claim_id, events })
}

fn event_lines(events: &[InteractionEvent]) -> String {
    let mut out = String::new();
    for ev in events {
        out.push_str(&serde_json::to_string(ev).expect("events serialize"));
        out.push('\n');
    }
    out
}

impl EventStore for FileEventStore {
    fn create(&self, header: &LogHeader) -> Result<(), StoreError> {
        let path = self.path_of(&header.session_id)?;
        fs::create_dir_all(&self.dir).map_err(unavailable)?;
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                StoreError::Exists(header.session_id.clone())
            } else {
                unavailable(e)
            }
        })?;
        let mut line = serde_json::to_string(header).expect("headers serialize");
        line.push('\n');
        f.write_all(line.as_bytes()).map_err(unavailable)?;
        f.sync_all().map_err(unavailable)
    }

    fn append(&self, session_id: &str, events: &[InteractionEvent]) -> Result<(), StoreError> {
        let path = self.path_of(session_id)?;
        let mut f = OpenOptions::new().append(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                StoreError::Missing(session_id.into())
            } else {
                unavailable(e)
            }
        })?;
        f.write_all(event_lines(events).as_bytes()).map_err(unavailable)?;
        f.sync_data().map_err(unavailable)
    }

    /// Also truncates a torn tail so later appends start on a fresh line.
    fn load(&self, session_id: &str) -> Result<Option<PersistedLog>, StoreError> {
        let path = self.path_of(session_id)?;
        match fs::read_to_string(&path) {
            Ok(text) => {
                let log = parse_log(session_id, &text)?;
                if !text.ends_with('\n') {
                    let keep = text.rfind('\n').map_or(0, |i| i + 1) as u64;
                    let f = OpenOptions::new().write(true).open(&path).map_err(unavailable)?;
                    f.set_len(keep).map_err(unavailable)?;
                    f.sync_all().map_err(unavailable)?;
                }
                Ok(Some(log))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(unavailable(e)),
        }
    }

    fn list(&self) -> Result<Vec<String>, StoreError> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(unavailable(e)),
        };
        let mut ids: Vec<String> = entries
            .filter_map(Result::ok)
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".jsonl").map(str::to_string))
            .filter(|id| valid_session_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }
}

#[derive(Debug, Default)]
pub struct MemoryEventStore {
    logs: Mutex<BTreeMap<String, PersistedLog>>,
}

impl EventStore for MemoryEventStore {
    fn create(&self, header: &LogHeader) -> Result<(), StoreError> {
        let mut logs = self.logs.lock().expect("store lock");
        if logs.contains_key(&header.session_id) {
            return Err(StoreError::Exists(header.session_id.clone()));
        }
        logs.insert(
            header.session_id.clone(),
            PersistedLog {
                session_id: header.session_id.clone(),
                mode: header.mode,
                claim_id: header.claim_id.clone(),
                events: Vec::new(),
            },
        );
        Ok(())
    }

    fn append(&self, session_id: &str, events: &[InteractionEvent]) -> Result<(), StoreError> {
        let mut logs = self.logs.lock().expect("store lock");
        let log = logs.get_mut(session_id).ok_or_else(|| StoreError::Missing(session_id.into()))?;
        log.events.extend_from_slice(events);
        Ok(())
    }

    fn load(&self, session_id: &str) -> Result<Option<PersistedLog>, StoreError> {
        Ok(self.logs.lock().expect("store lock").get(session_id).cloned())
    }

    fn list(&self) -> Result<Vec<String>, StoreError> {
        Ok(self.logs.lock().expect("store lock").keys().cloned().collect())
    }
}
