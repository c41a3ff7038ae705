//! Builders for every client and server frame kind, from a handful of
//! random primitives. Shared by the round-trip tests and the acceptance run.
#![allow(dead_code)]

use chrono::{DateTime, NaiveDate};
use claimforge_core::session::{
    Actor, Article, EventBody, Input, InteractionEvent, MessagePurpose, Mode, SummaryBundle,
};
use claimforge_core::strategy::{
    ExpertFindings, FactCheckReview, PerspectiveSet, QAPair, SourceProfile, StrategyOutput, StrategyResult, SubQuestion,
};
use claimforge_core::synth::{ClaimVerdict, StrategyDecision, StrategyVerdict};
use claimforge_core::{Claim, Label, QALabel, StrategyKind};
use claimforge_service::wire::{Hello, CLIENT_INPUT_KINDS, PROTOCOL_VERSION};
use claimforge_service::{ClientFrame, ClientMessage, ServerFrame, ServerMessage, WireMessage};
use rand::Rng;

pub const SERVER_KINDS: usize = 3 + EventBody::KINDS.len();
pub const CLIENT_KINDS: usize = 1 + CLIENT_INPUT_KINDS.len();

const PURPOSES: [MessagePurpose; 5] = [
    MessagePurpose::Greeting,
    MessagePurpose::Reinvite,
    MessagePurpose::SummaryFollowUp,
    MessagePurpose::FinalPrompt,
    MessagePurpose::ReasoningRequest,
];

/// Random primitives a message is assembled from.
#[derive(Debug, Clone)]
pub struct Raw {
    pub texts: Vec<String>,
    pub nums: Vec<u64>,
    pub flags: Vec<bool>,
}

impl Raw {
    /// Six of each primitive, with text drawn from an alphabet that
    /// stresses JSON escaping.
    pub fn random(rng: &mut impl Rng) -> Self {
        const ALPHABET: &[char] = &[
            'a', 'Z', '0', ' ', '"', '\\', '/', '\n', '\t', '\u{0}', '\u{7f}', 'é', 'Ü', '\u{2014}', '→', '😀', '{',
            '}',
        ];
        let text = |rng: &mut dyn rand::RngCore| -> String {
            let len = rng.gen_range(0..=24);
            (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
        };
        Raw {
            texts: (0..6).map(|_| text(rng)).collect(),
            nums: (0..6).map(|_| rng.gen()).collect(),
            flags: (0..6).map(|_| rng.gen()).collect(),
        }
    }

    fn t(&self, i: usize) -> String {
        self.texts[i % self.texts.len()].clone()
    }
    fn n(&self, i: usize) -> u64 {
        self.nums[i % self.nums.len()]
    }
    fn f(&self, i: usize) -> bool {
        self.flags[i % self.flags.len()]
    }
    fn opt(&self, i: usize) -> Option<String> {
        self.f(i).then(|| self.t(i))
    }
    fn strategy(&self, i: usize) -> StrategyKind {
        StrategyKind::ALL[self.n(i) as usize % 4]
    }
    fn label(&self, i: usize) -> Label {
        Label::ALL[self.n(i) as usize % 4]
    }
}

fn claim(r: &Raw) -> Claim {
    Claim {
        id: r.t(0),
        text: r.t(1),
        speaker: r.opt(2),
        claim_date: r.f(3).then(|| NaiveDate::from_num_days_from_ce_opt((r.n(0) % 800_000) as i32 + 1).unwrap()),
        location: r.opt(4),
        origin_url: r.opt(5),
        origin_domain: r.opt(0),
        gold_label: r.f(1).then(|| r.label(1)),
    }
}

fn result(r: &Raw, kind: StrategyKind) -> StrategyResult {
    let output = match kind {
        StrategyKind::Source => StrategyOutput::Source(SourceProfile {
            censorship_score: r.f(0).then(|| (r.n(0) % 101) as u8),
            source_type: r.t(1),
            political_bias: r.t(2),
            factual_reporting: r.opt(3),
            speaker_context: r.opt(4),
            ..SourceProfile::unknown()
        }),
        StrategyKind::FactChecking => StrategyOutput::FactChecking(ExpertFindings {
            reviews: (0..r.n(1) % 3)
                .map(|i| FactCheckReview {
                    question: r.t(i as usize),
                    publisher: r.t(i as usize + 1),
                    rating: r.t(i as usize + 2),
                    url: r.t(i as usize + 3),
                    summary: r.t(i as usize + 4),
                    error: r.opt(i as usize + 5),
                })
                .collect(),
            no_coverage: r.f(2),
        }),
        StrategyKind::Evidence => StrategyOutput::Evidence(
            (0..r.n(2) % 4)
                .map(|i| QAPair {
                    question: SubQuestion { index: i as usize + 1, text: r.t(i as usize) },
                    answer: r.t(i as usize + 1),
                    citations: (0..r.n(3) % 3).map(|j| r.t(j as usize)).collect(),
                    qa_label: r.f(i as usize).then(|| QALabel::ALL[(r.n(i as usize) % 3) as usize]),
                    error: r.opt(i as usize + 2),
                })
                .collect(),
        ),
        StrategyKind::Controversial => StrategyOutput::Controversial(PerspectiveSet {
            supporting: (0..r.n(4) % 4).map(|i| r.t(i as usize)).collect(),
            refuting: (0..r.n(5) % 4).map(|i| r.t(i as usize + 1)).collect(),
            citations: r.opt(0).into_iter().collect(),
            unstructured: r.opt(1),
            no_perspectives: r.f(2),
        }),
    };
    StrategyResult { output, notes: r.opt(5).into_iter().collect() }
}

fn body(r: &Raw, kind: usize) -> EventBody {
    let strategy = r.strategy(0);
    match kind {
        0 => EventBody::SessionCreated {
            mode: Mode::ALL[r.n(1) as usize % 4],
            claim: claim(r),
            text: r.t(2),
            articles: (0..r.n(2) % 3)
                .map(|i| Article { title: r.t(i as usize), url: r.opt(i as usize), text: r.t(3) })
                .collect(),
            summary: r.f(4).then(|| SummaryBundle {
                results: StrategyKind::ALL.iter().filter(|_| r.f(5)).map(|k| result(r, *k)).collect(),
                verdict: ClaimVerdict { decision: r.label(3), summary: r.t(4), error: r.opt(5) },
                predicted: r.label(4),
            }),
        },
        1 => EventBody::StrategyRequested { strategy, text: r.opt(1) },
        2 => EventBody::StrategyCompleted { strategy, result: result(r, strategy), text: r.t(2), cached: r.f(3) },
        3 => EventBody::ProvisionalPromptIssued { strategy, text: r.t(1) },
        4 => EventBody::ProvisionalSubmitted { strategy, judgment: r.t(1), reasoning: r.t(2) },
        5 => EventBody::StrategyVerdictIssued {
            strategy,
            verdict: StrategyVerdict {
                decision: StrategyDecision::ALL[r.n(1) as usize % 3],
                conclusion: r.t(2),
                error: r.opt(3),
            },
            text: r.t(4),
        },
        6 => EventBody::FreeQuestionAsked { text: r.t(1) },
        7 => {
            EventBody::FreeAnswerIssued { text: r.t(1), citations: (0..r.n(2) % 3).map(|i| r.t(i as usize)).collect() }
        }
        8 => EventBody::FinalVerdictRequested { text: r.t(1) },
        9 => EventBody::FinalLabelSelected { label: r.label(1) },
        10 => EventBody::FinalVerdictSubmitted { label: r.label(1), reasoning: r.t(2) },
        11 => EventBody::SystemSummaryShown { text: r.t(1) },
        12 => EventBody::ArticleShown { index: r.n(1) as usize % 10, title: r.t(2), text: r.t(3) },
        13 => EventBody::SystemMessage { purpose: PURPOSES[r.n(1) as usize % 5], text: r.t(2) },
        14 => EventBody::ClaimVerdictIssued {
            verdict: r.f(1).then(|| ClaimVerdict { decision: r.label(2), summary: r.t(3), error: r.opt(4) }),
            text: r.t(5),
        },
        15 => EventBody::Error { code: r.t(1), message: r.t(2), strategy: r.f(3).then_some(strategy) },
        _ => unreachable!(),
    }
}

pub fn server(r: &Raw, kind: usize) -> ServerFrame {
    let session_id = r.t(0);
    let seq = r.n(0) >> 1;
    let message = match kind {
        0 => ServerMessage::Hello(Hello {
            v: PROTOCOL_VERSION,
            mode: Mode::ALL[r.n(1) as usize % 4],
            claim_id: r.t(1),
            last_seq: r.n(2),
        }),
        1 => ServerMessage::Ack { client_seq: r.n(1), applied: r.f(0) },
        2 => ServerMessage::Error { code: r.t(1), message: r.t(2) },
        k => {
            let ev = InteractionEvent {
                seq,
                at: DateTime::from_timestamp((r.n(3) % 4_000_000_000) as i64, (r.n(4) % 1_000_000_000) as u32).unwrap(),
                actor: if r.f(5) { Actor::User } else { Actor::System },
                body: body(r, k - 3),
            };
            return ServerFrame::event(&session_id, ev);
        }
    };
    ServerFrame { session_id, seq, message }
}

pub fn client(r: &Raw, kind: usize) -> ClientFrame {
    let message = match kind {
        0 => ClientMessage::Hello { since: r.f(0).then(|| r.n(1)) },
        1 => ClientMessage::Input(Input::UserMessage { text: r.t(1) }),
        2 => ClientMessage::Input(Input::RequestStrategy { strategy: r.strategy(1) }),
        3 => ClientMessage::Input(Input::SubmitProvisional { judgment: r.t(1), reasoning: r.t(2) }),
        4 => ClientMessage::Input(Input::AskQuestion { text: r.t(1) }),
        5 => ClientMessage::Input(Input::RequestFinalVerdict { text: r.t(1) }),
        6 => ClientMessage::Input(Input::SelectFinalLabel { label: r.t(1) }),
        7 => ClientMessage::Input(Input::SubmitFinalReasoning { reasoning: r.t(1) }),
        8 => ClientMessage::Input(Input::SubmitFinalVerdict { label: r.t(1), reasoning: r.t(2) }),
        9 => ClientMessage::Input(Input::ViewArticle { index: r.n(1) as usize }),
        _ => unreachable!(),
    };
    ClientFrame { session_id: r.t(0), seq: r.n(0), message }
}

pub fn check_server(frame: &ServerFrame) {
    let text = frame.encode();
    assert_eq!(&ServerFrame::decode(&text).unwrap(), frame, "{text}");
    let wire = WireMessage::decode(&text).unwrap();
    assert_eq!(WireMessage::decode(&wire.encode()).unwrap(), wire);
}

pub fn check_client(frame: &ClientFrame) {
    let text = frame.encode();
    assert_eq!(&ClientFrame::decode(&text).unwrap(), frame, "{text}");
}
