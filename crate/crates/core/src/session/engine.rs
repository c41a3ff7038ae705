use chrono::{DateTime, Utc};

use super::{
    Actor, Command, EventBody, FinalStage, FinalUserVerdict, Input, InteractionEvent, MessagePurpose, Mode,
    Outstanding, ProvisionalRecord, Session, SessionConfig, SessionError, StrategyState, SummaryBundle,
};
use crate::model::{parse_label, project_participant_label, Claim, Label, StrategyKind};
use crate::strategy::StrategyResult;
use crate::synth::{EvidenceBlock, StrategyDecision, StrategyVerdict, TranscriptTurn};

pub(crate) const REINVITE: &str =
    "Please select another strategy, or feel free to ask any other questions you may have.";
pub(crate) const ALL_REVIEWED: &str =
    "You have reviewed all the strategies. What is your final judgement on the claim?";
pub(crate) const FINAL_PROMPT: &str = "What is your final judgement on the claim?";
pub(crate) const REASONING_REQUEST: &str = "Thank you. Please share your reasoning for your decision.";
pub(crate) const SUMMARY_FOLLOW_UP: &str = "Based on this summary, would you like to make your judgement now? You can also explore more details using the strategies on the left, or ask another question.";
pub(crate) const SELF_SEARCH_ACK: &str = "Noted. In this session you verify the claim yourself; use the steps above and submit your final judgement when you are ready.";

fn exploratory_greeting(name: &str) -> String {
    format!(
        "Hi, I\u{2019}m {name}. I\u{2019}ll be your guide as you evaluate this claim. Here\u{2019}s what to expect: You\u{2019}ll explore the claim using individual strategies (Source, Fact-Checking, Evidence, Controversial). After each, I\u{2019}ll ask for your view. At the end, you\u{2019}ll make an overall decision."
    )
}

fn summary_greeting(name: &str) -> String {
    format!(
        "Hello! I\u{2019}m {name}, your AI fact-checking assistant. I will help you investigate this claim. Please select one of the strategies I\u{2019}ve suggested."
    )
}

fn provisional_prompt(kind: StrategyKind) -> &'static str {
    match kind {
        StrategyKind::Source => {
            "What do you think about this source? Does anything here make you more or less confident in it?"
        }
        StrategyKind::FactChecking => {
            "What do you think about these fact-checks? Does anything here make you more or less confident in the claim?"
        }
        StrategyKind::Evidence => "What do you think about this evidence? Does it make you more or less confident in the claim?",
        StrategyKind::Controversial => {
            "What do you think about these perspectives? Does either side make you more or less confident in the claim?"
        }
    }
}

fn strategy_text(result: &StrategyResult) -> String {
    let body = result.render();
    match result.kind() {
        StrategyKind::FactChecking => format!("Expert Fact-Check Found:\n{body}"),
        _ => body,
    }
}

fn verdict_text(v: &StrategyVerdict) -> String {
    format!(
        "Thanks for sharing your reasoning. Here\u{2019}s how I interpret the claim at this stage:\nDecision: {}\nConclusion: {}",
        v.decision, v.conclusion
    )
}

pub(crate) fn overall_text(label: Label, summary: &str) -> String {
    let summary = summary.trim();
    if summary.is_empty() {
        format!("Overall Judgment: {label}.")
    } else {
        format!("Overall Judgment: {label}.\n\nSummary: {summary}")
    }
}

/// Free text that names a strategy goes to that strategy.
pub fn route_question(text: &str) -> Option<StrategyKind> {
    let t = text.to_lowercase();
    let any = |needles: &[&str]| needles.iter().any(|n| t.contains(n));
    if any(&["fact check", "fact-check", "factcheck", "expert", "debunk"]) {
        Some(StrategyKind::FactChecking)
    } else if any(&["controvers", "opposing", "perspective", "other side", "disagree"]) {
        Some(StrategyKind::Controversial)
    } else if any(&["source", "published", "origin", "who said", "where was"]) {
        Some(StrategyKind::Source)
    } else if any(&["evidence"]) {
        Some(StrategyKind::Evidence)
    } else {
        None
    }
}

fn asks_for_final(text: &str) -> bool {
    let t = text.to_lowercase();
    ["judgement", "judgment", "final verdict"].iter().any(|n| t.contains(n))
}

/// Participant options accept both label and decision spellings and are
/// projected onto the three participant labels.
fn parse_participant_label(raw: &str) -> Result<Label, SessionError> {
    let trimmed = raw.trim().trim_end_matches('.').trim();
    let label = match StrategyDecision::parse(trimmed) {
        Some(StrategyDecision::Support) => Label::Supported,
        Some(StrategyDecision::Refute) => Label::Refuted,
        Some(StrategyDecision::NotEnoughEvidence) => Label::NotEnoughEvidence,
        None => parse_label(trimmed).map_err(|e| SessionError::InvalidInput(e.to_string()))?,
    };
    Ok(project_participant_label(label))
}

/// The result of one accepted input.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub session: Session,
    pub events: Vec<InteractionEvent>,
    pub commands: Vec<Command>,
}

struct Builder {
    session: Session,
    events: Vec<InteractionEvent>,
    commands: Vec<Command>,
    at: DateTime<Utc>,
}

impl Builder {
    fn new(session: Session, at: DateTime<Utc>) -> Self {
        Self { session, events: Vec::new(), commands: Vec::new(), at }
    }

    fn emit(&mut self, actor: Actor, body: EventBody) {
        let ev = InteractionEvent { seq: self.session.last_seq() + 1, at: self.at, actor, body };
        apply_event(&mut self.session, &ev);
        self.events.push(ev);
    }

    fn system(&mut self, body: EventBody) {
        self.emit(Actor::System, body);
    }

    fn user(&mut self, body: EventBody) {
        self.emit(Actor::User, body);
    }

    fn message(&mut self, purpose: MessagePurpose, text: &str) {
        self.system(EventBody::SystemMessage { purpose, text: text.to_string() });
    }

    fn command(&mut self, c: Command) {
        self.commands.push(c);
    }

    fn finish(self) -> Transition {
        Transition { session: self.session, events: self.events, commands: self.commands }
    }
}

fn empty_session(id: &str, mode: Mode, claim: &Claim) -> Session {
    Session {
        id: id.to_string(),
        mode,
        claim: claim.clone(),
        strategies: StrategyKind::ALL.iter().map(|k| (*k, StrategyState::NotRun)).collect(),
        provisional: Vec::new(),
        transcript: Vec::new(),
        articles: Vec::new(),
        final_stage: FinalStage::NotRequested,
        final_user_verdict: None,
        final_system_verdict: None,
        closed: false,
        pending_prompt: None,
        outstanding: None,
        user_messages: 0,
        articles_viewed: 0,
    }
}

/// Opens a session. Summary sessions need the pre-run pipeline output.
pub fn create_session(
    id: &str,
    claim: &Claim,
    mode: Mode,
    config: &SessionConfig,
    summary: Option<SummaryBundle>,
    at: DateTime<Utc>,
) -> Result<Transition, SessionError> {
    let mut b = Builder::new(empty_session(id, mode, claim), at);
    let text = match mode {
        Mode::Exploratory => exploratory_greeting(&config.assistant_name),
        Mode::SelfSearch => config.self_search_steps.trim().to_string(),
        Mode::Summary | Mode::Control => String::new(),
    };
    let summary = match mode {
        Mode::Summary => Some(summary.ok_or(SessionError::MissingSummary)?),
        _ => None,
    };
    let articles = if mode == Mode::Control { config.articles.clone() } else { Vec::new() };
    b.system(EventBody::SessionCreated {
        mode,
        claim: claim.clone(),
        text,
        articles: articles.clone(),
        summary: summary.clone(),
    });
    match mode {
        Mode::Summary => {
            let s = summary.expect("checked above");
            b.system(EventBody::SystemSummaryShown { text: overall_text(s.predicted, &s.verdict.summary) });
            b.message(MessagePurpose::Greeting, &summary_greeting(&config.assistant_name));
        }
        Mode::Control => {
            for (index, a) in articles.iter().enumerate() {
                b.system(EventBody::ArticleShown { index, title: a.title.clone(), text: a.text.clone() });
            }
        }
        _ => {}
    }
    Ok(b.finish())
}

/// Folds one event into the session. This is the only place session state
/// changes.
pub fn apply_event(s: &mut Session, ev: &InteractionEvent) {
    match &ev.body {
        EventBody::SessionCreated { mode, claim, articles, summary, .. } => {
            s.mode = *mode;
            s.claim = claim.clone();
            s.articles = articles.clone();
            if let Some(bundle) = summary {
                for r in &bundle.results {
                    s.strategies.insert(r.kind(), StrategyState::Done(r.clone()));
                }
            }
        }
        EventBody::StrategyRequested { strategy, text } => {
            s.pending_prompt = None;
            if text.is_some() {
                s.user_messages += 1;
            }
            if !matches!(s.state_of(*strategy), StrategyState::Done(_)) {
                s.strategies.insert(*strategy, StrategyState::Running);
                s.outstanding = Some(Outstanding::Strategy(*strategy));
            }
        }
        EventBody::StrategyCompleted { strategy, result, .. } => {
            s.strategies.insert(*strategy, StrategyState::Done(result.clone()));
            if s.outstanding == Some(Outstanding::Strategy(*strategy)) {
                s.outstanding = None;
            }
        }
        EventBody::ProvisionalPromptIssued { strategy, .. } => s.pending_prompt = Some(*strategy),
        EventBody::ProvisionalSubmitted { strategy, judgment, reasoning } => {
            s.user_messages += 1;
            s.pending_prompt = None;
            s.provisional.push(ProvisionalRecord {
                strategy: *strategy,
                user_judgment: judgment.clone(),
                user_reasoning: reasoning.clone(),
                system_verdict: None,
            });
            s.outstanding = Some(Outstanding::StrategyJudgement(*strategy));
        }
        EventBody::StrategyVerdictIssued { strategy, verdict, .. } => {
            if let Some(p) = s.provisional.iter_mut().rev().find(|p| p.strategy == *strategy) {
                p.system_verdict = Some(verdict.clone());
            }
            s.outstanding = None;
        }
        EventBody::FreeQuestionAsked { .. } => {
            s.user_messages += 1;
            s.pending_prompt = None;
            if s.mode.has_strategies() {
                s.outstanding = Some(Outstanding::FreeAnswer);
            }
        }
        EventBody::FreeAnswerIssued { .. } => {
            if s.outstanding == Some(Outstanding::FreeAnswer) {
                s.outstanding = None;
            }
        }
        EventBody::FinalVerdictRequested { text } => {
            if !text.is_empty() {
                s.user_messages += 1;
            }
            s.pending_prompt = None;
            s.final_stage = FinalStage::AwaitingLabel;
        }
        EventBody::FinalLabelSelected { label } => {
            s.user_messages += 1;
            s.pending_prompt = None;
            s.final_stage = FinalStage::AwaitingReasoning(*label);
        }
        EventBody::FinalVerdictSubmitted { label, reasoning } => {
            s.user_messages += 1;
            s.pending_prompt = None;
            s.final_stage = FinalStage::Submitted;
            s.final_user_verdict = Some(FinalUserVerdict { label: *label, reasoning: reasoning.clone() });
            if s.mode.has_strategies() {
                s.outstanding = Some(Outstanding::ClaimJudgement);
            } else {
                s.closed = true;
            }
        }
        EventBody::SystemMessage { purpose: MessagePurpose::FinalPrompt, .. } => {
            if s.final_stage == FinalStage::NotRequested {
                s.final_stage = FinalStage::AwaitingLabel;
            }
        }
        EventBody::ArticleShown { .. } => {
            if ev.actor == Actor::User {
                s.articles_viewed += 1;
            }
        }
        EventBody::ClaimVerdictIssued { verdict, .. } => {
            s.final_system_verdict = verdict.clone();
            s.outstanding = None;
            s.closed = true;
        }
        EventBody::Error { strategy, .. } => match (s.outstanding, strategy) {
            (Some(Outstanding::Strategy(k)), Some(failed)) if k == *failed => {
                s.strategies.insert(k, StrategyState::NotRun);
                s.outstanding = None;
            }
            (Some(Outstanding::StrategyJudgement(k)), Some(failed)) if k == *failed => s.outstanding = None,
            (Some(Outstanding::FreeAnswer), None) => s.outstanding = None,
            (Some(Outstanding::ClaimJudgement), None) => {
                s.outstanding = None;
                s.closed = true;
            }
            _ => {}
        },
        EventBody::SystemSummaryShown { .. } | EventBody::SystemMessage { .. } => {}
    }
    s.transcript.push(ev.clone());
}

/// Rebuilds a session from its events.
pub fn replay(id: &str, events: &[InteractionEvent]) -> Option<Session> {
    let first = events.first()?;
    let EventBody::SessionCreated { mode, claim, .. } = &first.body else {
        return None;
    };
    let mut s = empty_session(id, *mode, claim);
    for ev in events {
        apply_event(&mut s, ev);
    }
    Some(s)
}

fn ensure_idle(s: &Session) -> Result<(), SessionError> {
    match s.outstanding {
        Some(Outstanding::Strategy(k)) => Err(SessionError::StrategyBusy(k)),
        Some(_) => Err(SessionError::Busy),
        None => Ok(()),
    }
}

fn final_gate(s: &Session) -> Result<(), SessionError> {
    match s.final_stage {
        FinalStage::NotRequested | FinalStage::AwaitingLabel => {}
        FinalStage::AwaitingReasoning(_) | FinalStage::Submitted => return Err(SessionError::Finalizing),
    }
    let ok = match s.mode {
        Mode::Exploratory => s.done_count() >= 1,
        Mode::Summary => true,
        Mode::SelfSearch => s.user_messages >= 1,
        Mode::Control => s.articles.is_empty() || s.articles_viewed >= 1,
    };
    if ok {
        return Ok(());
    }
    Err(SessionError::FinalVerdictNotAllowed(match s.mode {
        Mode::Exploratory => "run at least one strategy first",
        Mode::SelfSearch => "send at least one message first",
        _ => "view at least one article first",
    }))
}

fn strategy_transcript(s: &Session, kind: StrategyKind, reasoning: &str) -> Vec<TranscriptTurn> {
    let mut turns = Vec::new();
    for ev in &s.transcript {
        match &ev.body {
            EventBody::StrategyRequested { strategy, text: Some(t) } if *strategy == kind => {
                turns.push(TranscriptTurn::user(t.clone()))
            }
            EventBody::StrategyCompleted { strategy, text, .. } if *strategy == kind => {
                turns.push(TranscriptTurn::assistant(text.clone()))
            }
            EventBody::ProvisionalPromptIssued { strategy, text } if *strategy == kind => {
                turns.push(TranscriptTurn::assistant(text.clone()))
            }
            _ => {}
        }
    }
    turns.push(TranscriptTurn::user(reasoning.to_string()));
    turns
}

fn evidence_blocks(s: &Session) -> (Vec<EvidenceBlock>, Vec<crate::model::QALabel>) {
    let mut blocks = Vec::new();
    let mut labels = Vec::new();
    for kind in StrategyKind::ALL {
        if let StrategyState::Done(r) = s.state_of(kind) {
            blocks.push(EvidenceBlock { strategy: kind, text: r.render() });
            labels.extend(r.qa_labels());
        }
    }
    (blocks, labels)
}

fn request_strategy(b: &mut Builder, kind: StrategyKind, text: Option<String>) -> Result<(), SessionError> {
    let s = &b.session;
    if !s.mode.has_strategies() {
        return Err(SessionError::InvalidForMode { action: "strategy request", mode: s.mode });
    }
    ensure_idle(s)?;
    if matches!(s.final_stage, FinalStage::AwaitingReasoning(_) | FinalStage::Submitted) {
        return Err(SessionError::Finalizing);
    }
    let cached = match s.state_of(kind) {
        StrategyState::Done(r) => Some(r.clone()),
        _ => None,
    };
    b.user(EventBody::StrategyRequested { strategy: kind, text });
    match cached {
        Some(result) => {
            let text = strategy_text(&result);
            b.system(EventBody::StrategyCompleted { strategy: kind, result, text, cached: true });
            follow_up_after_result(b);
        }
        None => b.command(Command::RunStrategy { strategy: kind }),
    }
    Ok(())
}

fn follow_up_after_result(b: &mut Builder) {
    match b.session.mode {
        Mode::Summary => b.message(MessagePurpose::SummaryFollowUp, SUMMARY_FOLLOW_UP),
        _ => b.message(MessagePurpose::Reinvite, REINVITE),
    }
}

fn ask_question(b: &mut Builder, text: String) -> Result<(), SessionError> {
    let mode = b.session.mode;
    if text.trim().is_empty() {
        return Err(SessionError::InvalidInput("empty message".into()));
    }
    match mode {
        Mode::Control => return Err(SessionError::InvalidForMode { action: "question", mode }),
        Mode::SelfSearch => {
            if matches!(b.session.final_stage, FinalStage::AwaitingReasoning(_) | FinalStage::Submitted) {
                return Err(SessionError::Finalizing);
            }
            b.user(EventBody::FreeQuestionAsked { text });
            b.system(EventBody::FreeAnswerIssued { text: SELF_SEARCH_ACK.into(), citations: Vec::new() });
            return Ok(());
        }
        Mode::Exploratory | Mode::Summary => {}
    }
    if let Some(kind) = route_question(&text) {
        return request_strategy(b, kind, Some(text));
    }
    if asks_for_final(&text) {
        return request_final(b, text);
    }
    ensure_idle(&b.session)?;
    if matches!(b.session.final_stage, FinalStage::AwaitingReasoning(_) | FinalStage::Submitted) {
        return Err(SessionError::Finalizing);
    }
    b.user(EventBody::FreeQuestionAsked { text: text.clone() });
    b.command(Command::AnswerQuestion { question: text });
    Ok(())
}

fn request_final(b: &mut Builder, text: String) -> Result<(), SessionError> {
    ensure_idle(&b.session)?;
    final_gate(&b.session)?;
    let all_done = b.session.done_count() == StrategyKind::ALL.len();
    b.user(EventBody::FinalVerdictRequested { text });
    b.message(MessagePurpose::FinalPrompt, if all_done { ALL_REVIEWED } else { FINAL_PROMPT });
    Ok(())
}

fn select_label(b: &mut Builder, raw: &str) -> Result<(), SessionError> {
    ensure_idle(&b.session)?;
    match b.session.final_stage {
        FinalStage::AwaitingLabel => {}
        FinalStage::NotRequested => final_gate(&b.session)?,
        _ => return Err(SessionError::Finalizing),
    }
    let label = parse_participant_label(raw)?;
    b.user(EventBody::FinalLabelSelected { label });
    b.message(MessagePurpose::ReasoningRequest, REASONING_REQUEST);
    Ok(())
}

fn submit_final(b: &mut Builder, label: Label, reasoning: String) -> Result<(), SessionError> {
    b.user(EventBody::FinalVerdictSubmitted { label, reasoning });
    if b.session.mode.has_strategies() {
        let (blocks, qa_labels) = evidence_blocks(&b.session);
        if blocks.is_empty() {
            b.system(EventBody::ClaimVerdictIssued { verdict: None, text: String::new() });
        } else {
            b.command(Command::JudgeClaim { blocks, qa_labels });
        }
    }
    Ok(())
}

fn submit_reasoning(b: &mut Builder, reasoning: String) -> Result<(), SessionError> {
    match b.session.final_stage {
        FinalStage::AwaitingReasoning(label) => submit_final(b, label, reasoning),
        FinalStage::Submitted => Err(SessionError::Finalizing),
        _ => Err(SessionError::NoFinalPending),
    }
}

fn submit_provisional(b: &mut Builder, judgment: String, reasoning: String) -> Result<(), SessionError> {
    ensure_idle(&b.session)?;
    let kind = b.session.pending_prompt.ok_or(SessionError::NoPendingPrompt)?;
    if reasoning.trim().is_empty() {
        return Err(SessionError::InvalidInput("empty reasoning".into()));
    }
    let transcript = strategy_transcript(&b.session, kind, &reasoning);
    b.user(EventBody::ProvisionalSubmitted { strategy: kind, judgment, reasoning });
    b.command(Command::JudgeStrategy { strategy: kind, transcript });
    Ok(())
}

fn user_message(b: &mut Builder, text: String) -> Result<(), SessionError> {
    let s = &b.session;
    if let FinalStage::AwaitingReasoning(_) = s.final_stage {
        return submit_reasoning(b, text);
    }
    if s.outstanding.is_none() && s.pending_prompt.is_some() && s.mode == Mode::Exploratory {
        return submit_provisional(b, String::new(), text);
    }
    if s.final_stage == FinalStage::AwaitingLabel && parse_participant_label(&text).is_ok() {
        return select_label(b, &text);
    }
    ask_question(b, text)
}

fn expect(cond: bool, what: &'static str) -> Result<(), SessionError> {
    if cond {
        Ok(())
    } else {
        Err(SessionError::UnexpectedCompletion(what))
    }
}

/// Applies one input. Rejected inputs leave the session untouched.
pub fn handle(session: &Session, input: Input, at: DateTime<Utc>) -> Result<Transition, SessionError> {
    if session.closed {
        return Err(SessionError::SessionClosed);
    }
    let mut b = Builder::new(session.clone(), at);
    let mode = session.mode;
    match input {
        Input::UserMessage { text } => user_message(&mut b, text)?,
        Input::RequestStrategy { strategy } => request_strategy(&mut b, strategy, None)?,
        Input::AskQuestion { text } => ask_question(&mut b, text)?,
        Input::SubmitProvisional { judgment, reasoning } => {
            if mode != Mode::Exploratory {
                return Err(SessionError::InvalidForMode { action: "provisional judgement", mode });
            }
            submit_provisional(&mut b, judgment, reasoning)?
        }
        Input::RequestFinalVerdict { text } => request_final(&mut b, text)?,
        Input::SelectFinalLabel { label } => select_label(&mut b, &label)?,
        Input::SubmitFinalReasoning { reasoning } => submit_reasoning(&mut b, reasoning)?,
        Input::SubmitFinalVerdict { label, reasoning } => {
            ensure_idle(&b.session)?;
            match b.session.final_stage {
                FinalStage::NotRequested => final_gate(&b.session)?,
                FinalStage::AwaitingLabel => {}
                _ => return Err(SessionError::Finalizing),
            }
            let label = parse_participant_label(&label)?;
            submit_final(&mut b, label, reasoning)?
        }
        Input::ViewArticle { index } => {
            if mode != Mode::Control {
                return Err(SessionError::InvalidForMode { action: "article view", mode });
            }
            let a = session
                .articles
                .get(index)
                .ok_or_else(|| SessionError::InvalidInput(format!("no article {index}")))?
                .clone();
            b.user(EventBody::ArticleShown { index, title: a.title, text: a.text });
        }
        Input::StrategyFinished { strategy, result } => {
            expect(session.outstanding == Some(Outstanding::Strategy(strategy)), "strategy result")?;
            expect(result.kind() == strategy, "strategy result of another kind")?;
            let text = strategy_text(&result);
            b.system(EventBody::StrategyCompleted { strategy, result, text, cached: false });
            match mode {
                Mode::Exploratory => {
                    b.system(EventBody::ProvisionalPromptIssued { strategy, text: provisional_prompt(strategy).into() })
                }
                _ => b.message(MessagePurpose::SummaryFollowUp, SUMMARY_FOLLOW_UP),
            }
        }
        Input::StrategyFailed { strategy, error } => {
            expect(session.outstanding == Some(Outstanding::Strategy(strategy)), "strategy failure")?;
            b.system(EventBody::Error {
                code: "strategy_failed".into(),
                message: format!("The {} strategy could not be completed: {error}", strategy.display_name()),
                strategy: Some(strategy),
            });
        }
        Input::StrategyVerdictReady { strategy, verdict } => {
            expect(session.outstanding == Some(Outstanding::StrategyJudgement(strategy)), "strategy verdict")?;
            let text = verdict_text(&verdict);
            b.system(EventBody::StrategyVerdictIssued { strategy, verdict, text });
            after_verdict(&mut b);
        }
        Input::StrategyVerdictFailed { strategy, error } => {
            expect(session.outstanding == Some(Outstanding::StrategyJudgement(strategy)), "strategy verdict failure")?;
            b.system(EventBody::Error {
                code: "judgement_failed".into(),
                message: format!("I could not interpret this strategy: {error}"),
                strategy: Some(strategy),
            });
            after_verdict(&mut b);
        }
        Input::FreeAnswerReady { text, citations } => {
            expect(session.outstanding == Some(Outstanding::FreeAnswer), "free answer")?;
            b.system(EventBody::FreeAnswerIssued { text, citations });
        }
        Input::FreeAnswerFailed { error } => {
            expect(session.outstanding == Some(Outstanding::FreeAnswer), "free answer failure")?;
            b.system(EventBody::Error {
                code: "answer_failed".into(),
                message: format!("I could not answer that question: {error}"),
                strategy: None,
            });
        }
        Input::ClaimVerdictReady { verdict } => {
            expect(session.outstanding == Some(Outstanding::ClaimJudgement), "claim verdict")?;
            let text = overall_text(verdict.decision, &verdict.summary);
            b.system(EventBody::ClaimVerdictIssued { verdict: Some(verdict), text });
        }
        Input::ClaimVerdictFailed { error } => {
            expect(session.outstanding == Some(Outstanding::ClaimJudgement), "claim verdict failure")?;
            b.system(EventBody::Error {
                code: "claim_judgement_failed".into(),
                message: format!("The overall judgement could not be produced: {error}"),
                strategy: None,
            });
        }
    }
    Ok(b.finish())
}

/// Rebuilds the command a session is waiting on from its events alone, so a
/// host that lost the command (for example after a restart) can re-run it.
pub fn pending_command(s: &Session) -> Option<Command> {
    Some(match s.outstanding? {
        Outstanding::Strategy(strategy) => Command::RunStrategy { strategy },
        Outstanding::StrategyJudgement(strategy) => {
            let at = s.transcript.iter().rposition(
                |e| matches!(&e.body, EventBody::ProvisionalSubmitted { strategy: k, .. } if *k == strategy),
            )?;
            let EventBody::ProvisionalSubmitted { reasoning, .. } = &s.transcript[at].body else { unreachable!() };
            let before = Session { transcript: s.transcript[..at].to_vec(), ..s.clone() };
            Command::JudgeStrategy { strategy, transcript: strategy_transcript(&before, strategy, reasoning) }
        }
        Outstanding::FreeAnswer => {
            let question = s.transcript.iter().rev().find_map(|e| match &e.body {
                EventBody::FreeQuestionAsked { text } => Some(text.clone()),
                _ => None,
            })?;
            Command::AnswerQuestion { question }
        }
        Outstanding::ClaimJudgement => {
            let (blocks, qa_labels) = evidence_blocks(s);
            Command::JudgeClaim { blocks, qa_labels }
        }
    })
}

fn after_verdict(b: &mut Builder) {
    let s = &b.session;
    if s.done_count() == StrategyKind::ALL.len() && s.final_stage == FinalStage::NotRequested {
        b.message(MessagePurpose::FinalPrompt, ALL_REVIEWED);
    } else {
        b.message(MessagePurpose::Reinvite, REINVITE);
    }
}
