//! Interactive verification sessions.
//!
//! A session is an event-sourced state machine. [`handle`] is pure: it
//! validates one [`Input`] against the current [`Session`], emits events and
//! asks for side effects as [`Command`]s. Commands run outside the
//! transition (see [`runner`]) and report back as completion inputs. The
//! session state is always the fold of its events under [`apply_event`].

mod engine;
pub mod runner;
pub mod stats;
pub mod transcript;

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{apply_event, create_session, handle, pending_command, replay, route_question, Transition};
pub use stats::{strategy_usage_stats, StrategyUsageStats};

use crate::model::{Claim, Label, StrategyKind};
use crate::pipeline::ClaimRun;
use crate::strategy::StrategyResult;
use crate::synth::{ClaimVerdict, EvidenceBlock, StrategyVerdict, TranscriptTurn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exploratory,
    Summary,
    SelfSearch,
    Control,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Exploratory, Mode::Summary, Mode::SelfSearch, Mode::Control];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exploratory => "exploratory",
            Mode::Summary => "summary",
            Mode::SelfSearch => "self_search",
            Mode::Control => "control",
        }
    }

    /// Whether the system runs strategies in this mode.
    pub fn has_strategies(self) -> bool {
        matches!(self, Mode::Exploratory | Mode::Summary)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == norm || (norm == "selfsearch" && *m == Mode::SelfSearch))
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    User,
    System,
}

/// A static article shown in control sessions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub text: String,
}

/// Everything a summary session shows up front.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryBundle {
    pub results: Vec<StrategyResult>,
    pub verdict: ClaimVerdict,
    pub predicted: Label,
}

impl From<&ClaimRun> for SummaryBundle {
    fn from(run: &ClaimRun) -> Self {
        Self {
            results: run.strategies.iter().filter_map(|s| s.result.clone()).collect(),
            verdict: run.verdict.clone(),
            predicted: run.predicted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessagePurpose {
    Greeting,
    Reinvite,
    SummaryFollowUp,
    FinalPrompt,
    ReasoningRequest,
}

/// What happened, with a kind-specific payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    SessionCreated {
        mode: Mode,
        claim: Claim,
        /// Opening message; empty when another event opens the session.
        text: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        articles: Vec<Article>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        summary: Option<SummaryBundle>,
    },
    StrategyRequested {
        strategy: StrategyKind,
        /// The free-text message that was routed to the strategy, if any.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    StrategyCompleted {
        strategy: StrategyKind,
        result: StrategyResult,
        text: String,
        #[serde(default)]
        cached: bool,
    },
    ProvisionalPromptIssued {
        strategy: StrategyKind,
        text: String,
    },
    ProvisionalSubmitted {
        strategy: StrategyKind,
        #[serde(default)]
        judgment: String,
        reasoning: String,
    },
    StrategyVerdictIssued {
        strategy: StrategyKind,
        verdict: StrategyVerdict,
        text: String,
    },
    FreeQuestionAsked {
        text: String,
    },
    FreeAnswerIssued {
        text: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        citations: Vec<String>,
    },
    FinalVerdictRequested {
        #[serde(default)]
        text: String,
    },
    FinalLabelSelected {
        label: Label,
    },
    FinalVerdictSubmitted {
        label: Label,
        reasoning: String,
    },
    SystemSummaryShown {
        text: String,
    },
    ArticleShown {
        index: usize,
        title: String,
        text: String,
    },
    SystemMessage {
        purpose: MessagePurpose,
        text: String,
    },
    ClaimVerdictIssued {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        verdict: Option<ClaimVerdict>,
        text: String,
    },
    Error {
        code: String,
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strategy: Option<StrategyKind>,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SessionCreated { .. } => "session_created",
            EventBody::StrategyRequested { .. } => "strategy_requested",
            EventBody::StrategyCompleted { .. } => "strategy_completed",
            EventBody::ProvisionalPromptIssued { .. } => "provisional_prompt_issued",
            EventBody::ProvisionalSubmitted { .. } => "provisional_submitted",
            EventBody::StrategyVerdictIssued { .. } => "strategy_verdict_issued",
            EventBody::FreeQuestionAsked { .. } => "free_question_asked",
            EventBody::FreeAnswerIssued { .. } => "free_answer_issued",
            EventBody::FinalVerdictRequested { .. } => "final_verdict_requested",
            EventBody::FinalLabelSelected { .. } => "final_label_selected",
            EventBody::FinalVerdictSubmitted { .. } => "final_verdict_submitted",
            EventBody::SystemSummaryShown { .. } => "system_summary_shown",
            EventBody::ArticleShown { .. } => "article_shown",
            EventBody::SystemMessage { .. } => "system_message",
            EventBody::ClaimVerdictIssued { .. } => "claim_verdict_issued",
            EventBody::Error { .. } => "error",
        }
    }

    pub const KINDS: [&'static str; 16] = [
        "session_created",
        "strategy_requested",
        "strategy_completed",
        "provisional_prompt_issued",
        "provisional_submitted",
        "strategy_verdict_issued",
        "free_question_asked",
        "free_answer_issued",
        "final_verdict_requested",
        "final_label_selected",
        "final_verdict_submitted",
        "system_summary_shown",
        "article_shown",
        "system_message",
        "claim_verdict_issued",
        "error",
    ];

    /// Text the participant sees for this event, if any.
    pub fn display_text(&self) -> Option<&str> {
        let text = match self {
            EventBody::SessionCreated { text, .. }
            | EventBody::StrategyCompleted { text, .. }
            | EventBody::ProvisionalPromptIssued { text, .. }
            | EventBody::StrategyVerdictIssued { text, .. }
            | EventBody::FreeQuestionAsked { text }
            | EventBody::FreeAnswerIssued { text, .. }
            | EventBody::FinalVerdictRequested { text }
            | EventBody::SystemSummaryShown { text }
            | EventBody::ArticleShown { text, .. }
            | EventBody::SystemMessage { text, .. }
            | EventBody::ClaimVerdictIssued { text, .. } => text.as_str(),
            EventBody::ProvisionalSubmitted { reasoning, .. } | EventBody::FinalVerdictSubmitted { reasoning, .. } => {
                reasoning.as_str()
            }
            EventBody::StrategyRequested { text, .. } => text.as_deref().unwrap_or_default(),
            EventBody::FinalLabelSelected { label } => label.canonical(),
            EventBody::Error { message, .. } => message.as_str(),
        };
        Some(text).filter(|t| !t.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub actor: Actor,
    #[serde(flatten)]
    pub body: EventBody,
}

/// User actions and command completions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Input {
    /// Free text, routed by session state: a pending reasoning request, a
    /// pending provisional prompt, a final label, or a question.
    UserMessage {
        text: String,
    },
    RequestStrategy {
        strategy: StrategyKind,
    },
    SubmitProvisional {
        #[serde(default)]
        judgment: String,
        reasoning: String,
    },
    AskQuestion {
        text: String,
    },
    RequestFinalVerdict {
        #[serde(default)]
        text: String,
    },
    /// A participant option; accepts label and decision spellings.
    SelectFinalLabel {
        label: String,
    },
    SubmitFinalReasoning {
        reasoning: String,
    },
    SubmitFinalVerdict {
        label: String,
        reasoning: String,
    },
    ViewArticle {
        index: usize,
    },

    StrategyFinished {
        strategy: StrategyKind,
        result: StrategyResult,
    },
    StrategyFailed {
        strategy: StrategyKind,
        error: String,
    },
    StrategyVerdictReady {
        strategy: StrategyKind,
        verdict: StrategyVerdict,
    },
    StrategyVerdictFailed {
        strategy: StrategyKind,
        error: String,
    },
    FreeAnswerReady {
        text: String,
        #[serde(default)]
        citations: Vec<String>,
    },
    FreeAnswerFailed {
        error: String,
    },
    ClaimVerdictReady {
        verdict: ClaimVerdict,
    },
    ClaimVerdictFailed {
        error: String,
    },
}

impl Input {
    pub fn is_completion(&self) -> bool {
        matches!(
            self,
            Input::StrategyFinished { .. }
                | Input::StrategyFailed { .. }
                | Input::StrategyVerdictReady { .. }
                | Input::StrategyVerdictFailed { .. }
                | Input::FreeAnswerReady { .. }
                | Input::FreeAnswerFailed { .. }
                | Input::ClaimVerdictReady { .. }
                | Input::ClaimVerdictFailed { .. }
        )
    }
}

/// Side effects requested by a transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    RunStrategy { strategy: StrategyKind },
    JudgeStrategy { strategy: StrategyKind, transcript: Vec<TranscriptTurn> },
    AnswerQuestion { question: String },
    JudgeClaim { blocks: Vec<EvidenceBlock>, qa_labels: Vec<crate::model::QALabel> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("session is closed")]
    SessionClosed,
    #[error("{action} is not available in {mode} mode")]
    InvalidForMode { action: &'static str, mode: Mode },
    #[error("strategy {0:?} is still running")]
    StrategyBusy(StrategyKind),
    #[error("the system is still working on the previous request")]
    Busy,
    #[error("there is no provisional prompt awaiting an answer")]
    NoPendingPrompt,
    #[error("final verdict not allowed yet: {0}")]
    FinalVerdictNotAllowed(&'static str),
    #[error("no final judgement has been requested")]
    NoFinalPending,
    #[error("the final judgement is being recorded")]
    Finalizing,
    #[error("unexpected completion: {0}")]
    UnexpectedCompletion(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("summary mode requires a pre-run summary")]
    MissingSummary,
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::SessionClosed => "session_closed",
            SessionError::InvalidForMode { .. } => "invalid_for_mode",
            SessionError::StrategyBusy(_) => "strategy_busy",
            SessionError::Busy => "busy",
            SessionError::NoPendingPrompt => "no_pending_prompt",
            SessionError::FinalVerdictNotAllowed(_) => "final_verdict_not_allowed",
            SessionError::NoFinalPending => "no_final_pending",
            SessionError::Finalizing => "finalizing",
            SessionError::UnexpectedCompletion(_) => "unexpected_completion",
            SessionError::InvalidInput(_) => "invalid_input",
            SessionError::MissingSummary => "missing_summary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "result", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum StrategyState {
    NotRun,
    Running,
    Done(StrategyResult),
}

/// The one side effect a session may be waiting on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "what", content = "strategy", rename_all = "snake_case")]
pub enum Outstanding {
    Strategy(StrategyKind),
    StrategyJudgement(StrategyKind),
    FreeAnswer,
    ClaimJudgement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", content = "label", rename_all = "snake_case")]
pub enum FinalStage {
    NotRequested,
    AwaitingLabel,
    AwaitingReasoning(Label),
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvisionalRecord {
    pub strategy: StrategyKind,
    pub user_judgment: String,
    pub user_reasoning: String,
    pub system_verdict: Option<StrategyVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalUserVerdict {
    /// Always one of the participant options.
    pub label: Label,
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub mode: Mode,
    pub claim: Claim,
    pub strategies: BTreeMap<StrategyKind, StrategyState>,
    pub provisional: Vec<ProvisionalRecord>,
    pub transcript: Vec<InteractionEvent>,
    pub articles: Vec<Article>,
    pub final_stage: FinalStage,
    pub final_user_verdict: Option<FinalUserVerdict>,
    pub final_system_verdict: Option<ClaimVerdict>,
    pub closed: bool,
    /// Strategy whose provisional prompt awaits an answer.
    pub pending_prompt: Option<StrategyKind>,
    pub outstanding: Option<Outstanding>,
    /// User-authored messages so far.
    pub user_messages: usize,
    pub articles_viewed: usize,
}

impl Session {
    pub fn last_seq(&self) -> u64 {
        self.transcript.last().map(|e| e.seq).unwrap_or(0)
    }

    pub fn state_of(&self, kind: StrategyKind) -> &StrategyState {
        self.strategies.get(&kind).unwrap_or(&StrategyState::NotRun)
    }

    pub fn done_count(&self) -> usize {
        self.strategies.values().filter(|s| matches!(s, StrategyState::Done(_))).count()
    }

    pub fn running(&self) -> Vec<StrategyKind> {
        self.strategies.iter().filter(|(_, s)| matches!(s, StrategyState::Running)).map(|(k, _)| *k).collect()
    }

    /// System-authored display texts in transcript order.
    pub fn system_messages(&self) -> Vec<&str> {
        self.transcript.iter().filter(|e| e.actor == Actor::System).filter_map(|e| e.body.display_text()).collect()
    }
}

/// Session wording and static material.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub assistant_name: String,
    #[serde(default)]
    pub articles: Vec<Article>,
    /// Procedural steps shown in self-search sessions.
    pub self_search_steps: String,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            assistant_name: "ClaimForge".into(),
            articles: Vec::new(),
            self_search_steps: crate::PromptSet::default().self_search_steps,
        }
    }
}

impl SessionConfig {
    pub fn with_prompts(prompts: &crate::PromptSet) -> Self {
        Self { self_search_steps: prompts.self_search_steps.clone(), ..Self::default() }
    }
}
