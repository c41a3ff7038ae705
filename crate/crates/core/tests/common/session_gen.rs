//! Random input sequences for the session state machine, with the
//! invariants checked after every accepted transition. Shared by the
//! property test and the acceptance run.
#![allow(dead_code)]
use chrono::{DateTime, Utc};
use claimforge_core::model::{validate_claim, QALabel, RawClaimRecord};
use claimforge_core::session::{
    create_session, handle, pending_command, replay, Article, EventBody, Input, InteractionEvent, Mode, Outstanding,
    Session, SessionConfig, SessionError, StrategyState, SummaryBundle,
};
use claimforge_core::strategy::{
    ExpertFindings, PerspectiveSet, QAPair, SourceProfile, StrategyOutput, StrategyResult, SubQuestion,
};
use claimforge_core::synth::{ClaimVerdict, StrategyDecision, StrategyVerdict};
use claimforge_core::{Label, StrategyKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEQUENCES: u64 = 10_000;
pub const MAX_STEPS: usize = 40;

const TEXTS: &[&str] = &[
    "Where was this published?",
    "Is there any fact checking information about this statement?",
    "What evidence is there?",
    "Are there opposing perspectives?",
    "Make your judgement.",
    "Support the Claim.",
    "Refuted",
    "Not Enough Evidence",
    "I am not sure about this.",
    "What year was it?",
    "  ",
];

fn at() -> DateTime<Utc> {
    DateTime::from_timestamp(1_756_684_800, 0).unwrap()
}

fn result(kind: StrategyKind, rng: &mut ChaCha8Rng) -> StrategyResult {
    let output = match kind {
        StrategyKind::Source => StrategyOutput::Source(SourceProfile::unknown()),
        StrategyKind::FactChecking => {
            StrategyOutput::FactChecking(ExpertFindings { reviews: vec![], no_coverage: true })
        }
        StrategyKind::Evidence => StrategyOutput::Evidence(
            (1..=rng.gen_range(1..4))
                .map(|i| QAPair {
                    question: SubQuestion { index: i, text: format!("Q{i}?") },
                    answer: "A.".into(),
                    citations: vec![],
                    qa_label: Some(*QALabel::ALL.choose(rng).unwrap()),
                    error: None,
                })
                .collect(),
        ),
        StrategyKind::Controversial => StrategyOutput::Controversial(PerspectiveSet::default()),
    };
    StrategyResult { output, notes: vec![] }
}

fn open(mode: Mode, rng: &mut ChaCha8Rng) -> Session {
    let claim = validate_claim(&RawClaimRecord { id: Some("c".into()), text: "A claim.".into(), ..Default::default() })
        .unwrap();
    let config = SessionConfig {
        articles: (0..rng.gen_range(0..3))
            .map(|i| Article { title: format!("T{i}"), url: None, text: format!("Body {i}") })
            .collect(),
        ..SessionConfig::default()
    };
    let mut results = Vec::new();
    for kind in StrategyKind::ALL {
        if rng.gen_bool(0.8) {
            results.push(result(kind, rng));
        }
    }
    let summary = (mode == Mode::Summary).then(|| SummaryBundle {
        results,
        verdict: ClaimVerdict { decision: Label::Refuted, summary: "s".into(), error: None },
        predicted: Label::Refuted,
    });
    create_session("s", &claim, mode, &config, summary, at()).unwrap().session
}

fn completion(s: &Session, rng: &mut ChaCha8Rng) -> Input {
    let kind = *StrategyKind::ALL.choose(rng).unwrap();
    let matching = rng.gen_bool(0.85);
    let target = match (matching, s.outstanding) {
        (true, Some(o)) => o,
        _ => match rng.gen_range(0..4) {
            0 => Outstanding::Strategy(kind),
            1 => Outstanding::StrategyJudgement(kind),
            2 => Outstanding::FreeAnswer,
            _ => Outstanding::ClaimJudgement,
        },
    };
    let fail = rng.gen_bool(0.15);
    match (target, fail) {
        (Outstanding::Strategy(k), false) => Input::StrategyFinished { strategy: k, result: result(k, rng) },
        (Outstanding::Strategy(k), true) => Input::StrategyFailed { strategy: k, error: "e".into() },
        (Outstanding::StrategyJudgement(k), false) => Input::StrategyVerdictReady {
            strategy: k,
            verdict: StrategyVerdict { decision: StrategyDecision::Support, conclusion: "c".into(), error: None },
        },
        (Outstanding::StrategyJudgement(k), true) => Input::StrategyVerdictFailed { strategy: k, error: "e".into() },
        (Outstanding::FreeAnswer, false) => Input::FreeAnswerReady { text: "a".into(), citations: vec![] },
        (Outstanding::FreeAnswer, true) => Input::FreeAnswerFailed { error: "e".into() },
        (Outstanding::ClaimJudgement, false) => Input::ClaimVerdictReady {
            verdict: ClaimVerdict { decision: Label::Supported, summary: "s".into(), error: None },
        },
        (Outstanding::ClaimJudgement, true) => Input::ClaimVerdictFailed { error: "e".into() },
    }
}

fn random_input(s: &Session, rng: &mut ChaCha8Rng) -> Input {
    let pick = |rng: &mut ChaCha8Rng| TEXTS.choose(rng).unwrap().to_string();
    match rng.gen_range(0..12) {
        0..=2 => completion(s, rng),
        3 | 4 => Input::UserMessage { text: pick(rng) },
        5 => Input::RequestStrategy { strategy: *StrategyKind::ALL.choose(rng).unwrap() },
        6 => Input::SubmitProvisional { judgment: String::new(), reasoning: pick(rng) },
        7 => Input::AskQuestion { text: pick(rng) },
        8 => Input::RequestFinalVerdict { text: String::new() },
        9 => Input::SelectFinalLabel { label: pick(rng) },
        10 => match rng.gen_bool(0.5) {
            true => Input::SubmitFinalReasoning { reasoning: pick(rng) },
            false => Input::SubmitFinalVerdict { label: pick(rng), reasoning: pick(rng) },
        },
        _ => Input::ViewArticle { index: rng.gen_range(0..3) },
    }
}

pub fn check(seed: u64, s: &Session) {
    let running = s.strategies.values().filter(|st| matches!(st, StrategyState::Running)).count();
    assert!(running <= 1, "seed {seed}: {running} running strategies");
    let events: &[InteractionEvent] = &s.transcript;
    for (i, e) in events.iter().enumerate() {
        assert_eq!(e.seq, i as u64 + 1, "seed {seed}: seq gap");
    }
    let mut prompted: Option<StrategyKind> = None;
    for e in events {
        match &e.body {
            EventBody::ProvisionalPromptIssued { strategy, .. } => prompted = Some(*strategy),
            EventBody::ProvisionalSubmitted { strategy, .. } => {
                assert_eq!(prompted, Some(*strategy), "seed {seed}: provisional without a prompt");
                prompted = None;
            }
            EventBody::StrategyCompleted { .. } => {
                assert!(s.mode.has_strategies(), "seed {seed}: strategy result in {:?}", s.mode)
            }
            _ => {}
        }
    }
    assert_eq!(replay(&s.id, events).as_ref(), Some(s), "seed {seed}: fold mismatch");
}

/// One random sequence from `seed`; returns the number of accepted
/// transitions and whether the session closed. Panics on a violation.
pub fn run_sequence(seed: u64) -> (usize, bool) {
    let mut accepted = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = *Mode::ALL.choose(&mut rng).unwrap();
    let mut s = open(mode, &mut rng);
    check(seed, &s);
    for _ in 0..MAX_STEPS {
        let input = random_input(&s, &mut rng);
        let was_closed = s.closed;
        match handle(&s, input.clone(), at()) {
            Ok(t) => {
                assert!(!was_closed, "seed {seed}: transition after close: {input:?}");
                assert_eq!(&t.session.transcript[..s.transcript.len()], &s.transcript[..]);
                // A lost command can always be rebuilt from the log.
                assert!(t.commands.len() <= 1, "seed {seed}: several commands");
                assert_eq!(
                    pending_command(&t.session),
                    t.commands.first().cloned().or(pending_command(&s).filter(|_| t.session.outstanding.is_some())),
                    "seed {seed}"
                );
                s = t.session;
                accepted += 1;
                check(seed, &s);
            }
            Err(e) => {
                if was_closed {
                    assert_eq!(e, SessionError::SessionClosed, "seed {seed}");
                }
            }
        }
    }
    (accepted, s.closed)
}
