//! Executes session commands against a [`Context`] and drives a session
//! until it is idle.

use serde::{Deserialize, Serialize};

use super::{
    create_session, handle, Command, Input, InteractionEvent, Mode, Session, SessionConfig, SessionError, SummaryBundle,
};
use crate::gateway::{web_answer, AnswerStyle, Clock};
use crate::model::Claim;
use crate::pipeline::{run_claim, PipelineError};
use crate::strategy::run_strategy;
use crate::synth::{aggregate_qa_labels, judge_claim, judge_strategy};
use crate::Context;

/// Performs one command and reports its outcome as a completion input.
pub fn execute(ctx: &Context, claim: &Claim, command: &Command) -> Input {
    match command {
        Command::RunStrategy { strategy } => match run_strategy(ctx, claim, *strategy) {
            Ok(result) => Input::StrategyFinished { strategy: *strategy, result },
            Err(e) => Input::StrategyFailed { strategy: *strategy, error: e.to_string() },
        },
        Command::JudgeStrategy { strategy, transcript } => match judge_strategy(ctx, claim, transcript) {
            Ok(verdict) => Input::StrategyVerdictReady { strategy: *strategy, verdict },
            Err(e) => Input::StrategyVerdictFailed { strategy: *strategy, error: e.to_string() },
        },
        Command::AnswerQuestion { question } => {
            match web_answer(&ctx.gateway, &ctx.prompts, question, AnswerStyle::General) {
                Ok(a) => Input::FreeAnswerReady { text: a.text, citations: a.citations },
                Err(e) => Input::FreeAnswerFailed { error: e.to_string() },
            }
        }
        Command::JudgeClaim { blocks, qa_labels } => match judge_claim(ctx, claim, blocks) {
            Ok(mut verdict) => {
                if let Ok(label) = aggregate_qa_labels(qa_labels) {
                    verdict.decision = label;
                }
                Input::ClaimVerdictReady { verdict }
            }
            Err(e) => Input::ClaimVerdictFailed { error: e.to_string() },
        },
    }
}

/// Opens a session, running the full pipeline first for summary mode.
pub fn open_session(
    ctx: &Context,
    id: &str,
    claim: &Claim,
    mode: Mode,
    config: &SessionConfig,
    clock: &dyn Clock,
) -> Result<(Session, Vec<InteractionEvent>), OpenError> {
    let summary = match mode {
        Mode::Summary => Some(SummaryBundle::from(&run_claim(ctx, claim)?)),
        _ => None,
    };
    let t = create_session(id, claim, mode, config, summary, clock.now())?;
    Ok((t.session, t.events))
}

#[derive(Debug, thiserror::Error)]
pub enum OpenError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// Applies `input`, then executes commands synchronously until none are
/// left. Returns every event emitted along the way.
pub fn drive(
    ctx: &Context,
    session: &Session,
    input: Input,
    clock: &dyn Clock,
) -> Result<(Session, Vec<InteractionEvent>), SessionError> {
    let t = handle(session, input, clock.now())?;
    let mut current = t.session;
    let mut events = t.events;
    let mut queue: std::collections::VecDeque<Command> = t.commands.into();
    while let Some(cmd) = queue.pop_front() {
        let completion = execute(ctx, &current.claim, &cmd);
        let t = handle(&current, completion, clock.now())?;
        current = t.session;
        events.extend(t.events);
        queue.extend(t.commands);
    }
    Ok((current, events))
}

/// A canned sequence of participant inputs for one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionScript {
    pub session_id: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assistant_name: Option<String>,
    pub inputs: Vec<Input>,
}

#[derive(Debug, thiserror::Error)]
pub enum PlayError {
    #[error(transparent)]
    Open(#[from] OpenError),
    #[error("input {index} rejected: {source}")]
    Rejected { index: usize, source: SessionError },
}

/// Opens a session and feeds it every scripted input. Returns the final
/// session and the full event log.
pub fn play(
    ctx: &Context,
    claim: &Claim,
    script: &SessionScript,
    clock: &dyn Clock,
) -> Result<(Session, Vec<InteractionEvent>), PlayError> {
    let mut config = SessionConfig::with_prompts(&ctx.prompts);
    if let Some(name) = &script.assistant_name {
        config.assistant_name = name.clone();
    }
    let (mut session, mut events) = open_session(ctx, &script.session_id, claim, script.mode, &config, clock)?;
    for (index, input) in script.inputs.iter().enumerate() {
        let (next, emitted) =
            drive(ctx, &session, input.clone(), clock).map_err(|source| PlayError::Rejected { index, source })?;
        session = next;
        events.extend(emitted);
    }
    Ok((session, events))
}
