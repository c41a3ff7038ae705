//! The four verification strategies and a common result type.

pub mod expert;
pub mod multihop;
pub mod perspective;
pub mod source;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expert::{chunk_and_summarize, find_expert_reviews, ExpertFindings, FactCheckReview};
pub use multihop::{answer_question, generate_questions, run_multihop, QAPair, SubQuestion, NO_EVIDENCE};
pub use perspective::{gather_perspectives, PerspectiveSet};
pub use source::{analyze_source, render_source_card, SourceProfile};

use crate::gateway::GatewayError;
use crate::model::{Claim, StrategyKind};
use crate::Context;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("chunk budget {0} is below the minimum of 512 characters")]
    InvalidChunkBudget(usize),
    #[error("no sub-questions could be parsed after {attempts} attempts")]
    QuestionParseFailure { attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum StrategyOutput {
    Source(SourceProfile),
    FactChecking(ExpertFindings),
    Evidence(Vec<QAPair>),
    Controversial(PerspectiveSet),
}

impl StrategyOutput {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyOutput::Source(_) => StrategyKind::Source,
            StrategyOutput::FactChecking(_) => StrategyKind::FactChecking,
            StrategyOutput::Evidence(_) => StrategyKind::Evidence,
            StrategyOutput::Controversial(_) => StrategyKind::Controversial,
        }
    }

    pub fn render(&self) -> String {
        match self {
            StrategyOutput::Source(p) => source::render_source_card(p),
            StrategyOutput::FactChecking(f) => expert::render_findings(f),
            StrategyOutput::Evidence(pairs) => multihop::render_pairs(pairs),
            StrategyOutput::Controversial(p) => perspective::render_perspectives(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub output: StrategyOutput,
    /// Degradations that did not fail the strategy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl StrategyResult {
    pub fn kind(&self) -> StrategyKind {
        self.output.kind()
    }

    pub fn render(&self) -> String {
        self.output.render()
    }

    /// Per-answer labels, present only for the evidence strategy.
    pub fn qa_labels(&self) -> Vec<crate::model::QALabel> {
        match &self.output {
            StrategyOutput::Evidence(pairs) => pairs.iter().filter_map(|p| p.qa_label).collect(),
            _ => Vec::new(),
        }
    }
}

/// Runs one strategy. Evidence pairs are labeled against the claim before
/// returning.
pub fn run_strategy(ctx: &Context, claim: &Claim, kind: StrategyKind) -> Result<StrategyResult, StrategyError> {
    let mut notes = Vec::new();
    let output = match kind {
        StrategyKind::Source => StrategyOutput::Source(source::analyze_source_noted(ctx, claim, &mut notes)),
        StrategyKind::FactChecking => {
            let f = find_expert_reviews(ctx, claim)?;
            notes.extend(f.reviews.iter().filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.url))));
            StrategyOutput::FactChecking(f)
        }
        StrategyKind::Evidence => {
            let mut pairs = run_multihop(ctx, claim)?;
            let labels = bounded_map(&pairs, ctx.fanout, |_, p| crate::synth::label_qa(ctx, claim, p));
            for (pair, label) in pairs.iter_mut().zip(labels) {
                match label {
                    Ok(outcome) => {
                        pair.qa_label = Some(outcome.label);
                        if let Some(e) = outcome.error {
                            notes.push(format!("Q{}: {e}", pair.question.index));
                        }
                    }
                    Err(e) => {
                        pair.qa_label = Some(crate::model::QALabel::Inconclusive);
                        notes.push(format!("Q{}: labeling failed: {e}", pair.question.index));
                    }
                }
                if let Some(e) = &pair.error {
                    notes.push(format!("Q{}: {e}", pair.question.index));
                }
            }
            StrategyOutput::Evidence(pairs)
        }
        StrategyKind::Controversial => StrategyOutput::Controversial(gather_perspectives(ctx, claim)?),
    };
    Ok(StrategyResult { output, notes })
}

/// Maps `f` over `items` on at most `width` scoped threads. Results keep the
/// input order.
pub(crate) fn bounded_map<T, R, F>(items: &[T], width: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let width = width.max(1).min(items.len());
    if width <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..width {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every slot is filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn bounded_map_preserves_order_and_width() {
        let live = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        let items: Vec<usize> = (0..32).collect();
        let out = bounded_map(&items, 4, |i, x| {
            let now = live.fetch_add(1, Ordering::SeqCst) + 1;
            peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(std::time::Duration::from_millis(2));
            live.fetch_sub(1, Ordering::SeqCst);
            (i, x * 2)
        });
        assert_eq!(out, items.iter().map(|&x| (x, x * 2)).collect::<Vec<_>>());
        assert!(peak.load(Ordering::SeqCst) <= 4);
        assert!(bounded_map(&Vec::<u8>::new(), 4, |_, x| *x).is_empty());
    }

    #[test]
    fn output_serde_is_tagged() {
        let out = StrategyOutput::Evidence(Vec::new());
        let v = serde_json::to_value(&out).unwrap();
        assert_eq!(v, serde_json::json!({"kind": "evidence", "data": []}));
        assert_eq!(serde_json::from_value::<StrategyOutput>(v).unwrap(), out);
    }
}
