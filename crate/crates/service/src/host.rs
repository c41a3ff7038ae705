//! Live sessions. Each session has one slot whose mutex serializes every
//! transition; commands run on the blocking pool and re-enter as
//! completions through the same mutex.
//!
//! Events are appended to the store before they are broadcast or the
//! in-memory state advances. A failed append leaves the session read-only.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::Duration;

use claimforge_core::gateway::Clock;
use claimforge_core::session::runner::{execute, open_session, OpenError};
use claimforge_core::session::{
    handle, pending_command, replay, Command, Input, InteractionEvent, Mode, Session, SessionConfig, SessionError,
};
use claimforge_core::{Claim, Context};
use thiserror::Error;
use tokio::sync::{broadcast, Mutex};
use tracing::{info, warn};

use crate::store::{valid_session_id, EventStore, LogHeader, PersistedLog, StoreError};
use crate::wire::ServerFrame;

const BROADCAST_CAPACITY: usize = 256;

#[derive(Debug, Error)]
pub enum HostError {
    #[error("unknown claim {0:?}")]
    UnknownClaim(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("client seq {got} does not match the last event seq {expected}")]
    StaleSequence { expected: u64, got: u64 },
    #[error("completion inputs cannot be submitted by clients")]
    CompletionRejected,
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("summary pipeline failed: {0}")]
    Pipeline(String),
    #[error("storage unavailable: {0}")]
    StorageUnavailable(String),
    #[error("session log is unreadable: {0}")]
    Corrupt(String),
}

impl HostError {
    pub fn code(&self) -> &'static str {
        match self {
            HostError::UnknownClaim(_) => "unknown_claim",
            HostError::UnknownSession(_) => "unknown_session",
            HostError::StaleSequence { .. } => "stale_sequence",
            HostError::CompletionRejected => "invalid_input",
            HostError::Session(e) => e.code(),
            HostError::Pipeline(_) => "pipeline_failed",
            HostError::StorageUnavailable(_) => "storage_unavailable",
            HostError::Corrupt(_) => "corrupt_log",
        }
    }
}

impl From<StoreError> for HostError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Corrupt { .. } => HostError::Corrupt(e.to_string()),
            StoreError::InvalidId(id) => HostError::UnknownSession(id),
            other => HostError::StorageUnavailable(other.to_string()),
        }
    }
}

/// Outcome of an accepted client message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Submitted {
    /// False when the message was a duplicate of the last applied one.
    pub applied: bool,
    pub next_seq: u64,
}

pub struct Attached {
    pub session: Session,
    pub frames: broadcast::Receiver<ServerFrame>,
}

struct SlotState {
    session: Session,
    last_client: Option<(u64, Input)>,
    read_only: Option<String>,
}

struct Slot {
    id: String,
    claim: Claim,
    state: Mutex<SlotState>,
    frames: broadcast::Sender<ServerFrame>,
}

pub struct SessionHost {
    ctx: Arc<Context>,
    claims: Vec<Claim>,
    store: Arc<dyn EventStore>,
    config: SessionConfig,
    clock: Arc<dyn Clock>,
    slots: StdMutex<HashMap<String, Arc<Slot>>>,
    assigned: AtomicUsize,
}

/// The participant-facing copy of a claim never carries its gold label.
fn participant_claim(claim: &Claim) -> Claim {
    Claim { gold_label: None, ..claim.clone() }
}

/// Maps a command that could not run at all to its failure completion.
fn failure_of(command: &Command, error: String) -> Input {
    match command {
        Command::RunStrategy { strategy } => Input::StrategyFailed { strategy: *strategy, error },
        Command::JudgeStrategy { strategy, .. } => Input::StrategyVerdictFailed { strategy: *strategy, error },
        Command::AnswerQuestion { .. } => Input::FreeAnswerFailed { error },
        Command::JudgeClaim { .. } => Input::ClaimVerdictFailed { error },
    }
}

impl SessionHost {
    pub fn new(
        ctx: Arc<Context>,
        claims: Vec<Claim>,
        store: Arc<dyn EventStore>,
        config: SessionConfig,
        clock: Arc<dyn Clock>,
    ) -> Arc<Self> {
        Arc::new(Self {
            ctx,
            claims,
            store,
            config,
            clock,
            slots: StdMutex::new(HashMap::new()),
            assigned: AtomicUsize::new(0),
        })
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.id == id)
    }

    /// Round-robin over the four modes, so consecutive sessions are balanced.
    pub fn assign_mode(&self) -> Mode {
        Mode::ALL[self.assigned.fetch_add(1, Ordering::Relaxed) % Mode::ALL.len()]
    }

    pub async fn create(self: &Arc<Self>, claim_id: &str, mode: Option<Mode>) -> Result<(String, Mode), HostError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mode = mode.unwrap_or_else(|| self.assign_mode());
        self.create_with_id(&id, claim_id, mode).await?;
        Ok((id, mode))
    }

    /// Opens a session under a caller-chosen id. Summary sessions run the
    /// whole pipeline first, on the blocking pool.
    pub async fn create_with_id(self: &Arc<Self>, id: &str, claim_id: &str, mode: Mode) -> Result<Session, HostError> {
        if !valid_session_id(id) {
            return Err(HostError::UnknownSession(id.into()));
        }
        let claim = participant_claim(self.claim(claim_id).ok_or_else(|| HostError::UnknownClaim(claim_id.into()))?);
        let host = Arc::clone(self);
        let (sid, c) = (id.to_string(), claim.clone());
        let opened = tokio::task::spawn_blocking(move || {
            open_session(&host.ctx, &sid, &c, mode, &host.config, host.clock.as_ref())
        })
        .await
        .map_err(|e| HostError::Pipeline(e.to_string()))?;
        let (session, events) = opened.map_err(|e| match e {
            OpenError::Pipeline(p) => HostError::Pipeline(p.to_string()),
            OpenError::Session(s) => HostError::Session(s),
        })?;
        self.store.create(&LogHeader::new(id, mode, claim_id))?;
        self.store.append(id, &events)?;
        let slot = Arc::new(Slot {
            id: id.to_string(),
            claim,
            state: Mutex::new(SlotState { session: session.clone(), last_client: None, read_only: None }),
            frames: broadcast::channel(BROADCAST_CAPACITY).0,
        });
        self.slots.lock().expect("slot map").insert(id.to_string(), slot);
        info!(session = id, claim = claim_id, %mode, "session created");
        Ok(session)
    }

    /// Finds a live slot, or rebuilds one from the store. A recovered session
    /// that was waiting on a command gets that command re-run.
    async fn slot(self: &Arc<Self>, id: &str) -> Result<Arc<Slot>, HostError> {
        if let Some(s) = self.slots.lock().expect("slot map").get(id) {
            return Ok(Arc::clone(s));
        }
        let log = self.store.load(id)?.ok_or_else(|| HostError::UnknownSession(id.into()))?;
        let session = replay(id, &log.events).ok_or_else(|| HostError::Corrupt(format!("{id} has no events")))?;
        let claim = session.claim.clone();
        let pending = pending_command(&session);
        let fresh = Arc::new(Slot {
            id: id.to_string(),
            claim,
            state: Mutex::new(SlotState { session, last_client: None, read_only: None }),
            frames: broadcast::channel(BROADCAST_CAPACITY).0,
        });
        let (slot, inserted) = {
            let mut slots = self.slots.lock().expect("slot map");
            match slots.get(id) {
                Some(existing) => (Arc::clone(existing), false),
                None => {
                    slots.insert(id.to_string(), Arc::clone(&fresh));
                    (fresh, true)
                }
            }
        };
        if inserted {
            info!(session = id, events = log.events.len(), "session recovered");
            if let Some(cmd) = pending {
                self.dispatch(Arc::clone(&slot), cmd);
            }
        }
        Ok(slot)
    }

    pub async fn attach(self: &Arc<Self>, id: &str) -> Result<Attached, HostError> {
        let slot = self.slot(id).await?;
        let state = slot.state.lock().await;
        Ok(Attached { session: state.session.clone(), frames: slot.frames.subscribe() })
    }

    pub async fn snapshot(self: &Arc<Self>, id: &str) -> Result<Session, HostError> {
        let slot = self.slot(id).await?;
        let state = slot.state.lock().await;
        Ok(state.session.clone())
    }

    pub fn log(&self, id: &str) -> Result<PersistedLog, HostError> {
        self.store.load(id)?.ok_or_else(|| HostError::UnknownSession(id.into()))
    }

    /// Applies one participant message. `client_seq` is the last event seq
    /// the client has seen; anything other than the current last seq is
    /// stale, except an exact repeat of the last applied message, which is
    /// acknowledged without being applied again.
    pub async fn submit(self: &Arc<Self>, id: &str, client_seq: u64, input: Input) -> Result<Submitted, HostError> {
        if input.is_completion() {
            return Err(HostError::CompletionRejected);
        }
        let slot = self.slot(id).await?;
        let mut state = slot.state.lock().await;
        if let Some(reason) = &state.read_only {
            return Err(HostError::StorageUnavailable(reason.clone()));
        }
        let last = state.session.last_seq();
        if client_seq != last {
            if state.last_client.as_ref().is_some_and(|(s, i)| *s == client_seq && *i == input) {
                return Ok(Submitted { applied: false, next_seq: last + 1 });
            }
            return Err(HostError::StaleSequence { expected: last, got: client_seq });
        }
        self.apply(&slot, &mut state, input.clone())?;
        state.last_client = Some((client_seq, input));
        Ok(Submitted { applied: true, next_seq: state.session.last_seq() + 1 })
    }

    fn apply(self: &Arc<Self>, slot: &Arc<Slot>, state: &mut SlotState, input: Input) -> Result<(), HostError> {
        let t = handle(&state.session, input, self.clock.now())?;
        if let Err(e) = self.store.append(&slot.id, &t.events) {
            warn!(session = %slot.id, error = %e, "append failed; session is now read-only");
            state.read_only = Some(e.to_string());
            return Err(HostError::StorageUnavailable(e.to_string()));
        }
        state.session = t.session;
        for ev in t.events {
            // Nobody listening is fine; the log is the record.
            let _ = slot.frames.send(ServerFrame::event(&slot.id, ev));
        }
        for cmd in t.commands {
            self.dispatch(Arc::clone(slot), cmd);
        }
        Ok(())
    }

    fn dispatch(self: &Arc<Self>, slot: Arc<Slot>, command: Command) {
        let host = Arc::clone(self);
        tokio::spawn(async move {
            let (ctx, claim, cmd) = (Arc::clone(&host.ctx), slot.claim.clone(), command.clone());
            let completion = match tokio::task::spawn_blocking(move || execute(&ctx, &claim, &cmd)).await {
                Ok(input) => input,
                Err(e) => failure_of(&command, format!("internal error: {e}")),
            };
            let mut state = slot.state.lock().await;
            if state.read_only.is_some() {
                return;
            }
            if let Err(e) = host.apply(&slot, &mut state, completion) {
                warn!(session = %slot.id, error = %e, "completion not applied");
            }
        });
    }

    /// Waits until the session has no outstanding command or can no longer
    /// progress because it is read-only. Intended for tests and tools that
    /// drive sessions step by step.
    pub async fn wait_idle(self: &Arc<Self>, id: &str, timeout: Duration) -> Result<Session, HostError> {
        let slot = self.slot(id).await?;
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            {
                let state = slot.state.lock().await;
                let settled = state.session.outstanding.is_none()
                    || state.read_only.is_some()
                    || tokio::time::Instant::now() >= deadline;
                if settled {
                    return Ok(state.session.clone());
                }
            }
            tokio::time::sleep(Duration::from_millis(2)).await;
        }
    }

    pub async fn is_read_only(self: &Arc<Self>, id: &str) -> Result<bool, HostError> {
        let slot = self.slot(id).await?;
        let state = slot.state.lock().await;
        Ok(state.read_only.is_some())
    }

    /// All persisted events, for callers that only need the log.
    pub fn events(&self, id: &str) -> Result<Vec<InteractionEvent>, HostError> {
        Ok(self.log(id)?.events)
    }
}
