//! Headless end-to-end run for one claim.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::model::{Claim, Label, QALabel, StrategyKind};
use crate::strategy::{bounded_map, run_strategy, StrategyResult};
use crate::synth::{aggregate_qa_labels, judge_claim, ClaimVerdict, EvidenceBlock, SynthError};
use crate::Context;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("every strategy failed for claim {claim_id}")]
    NoEvidence { claim_id: String },
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyRun {
    pub kind: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<StrategyResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRun {
    pub claim_id: String,
    pub strategies: Vec<StrategyRun>,
    pub qa_labels: Vec<QALabel>,
    pub verdict: ClaimVerdict,
    /// The aggregated evidence label when any exist, else the judged label.
    pub predicted: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Label>,
}

impl ClaimRun {
    pub fn evidence_blocks(&self) -> Vec<EvidenceBlock> {
        self.strategies
            .iter()
            .filter_map(|s| s.result.as_ref())
            .map(|r| EvidenceBlock { strategy: r.kind(), text: r.render() })
            .collect()
    }

    pub fn result(&self, kind: StrategyKind) -> Option<&StrategyResult> {
        self.strategies.iter().find(|s| s.kind == kind).and_then(|s| s.result.as_ref())
    }
}

/// Runs all four strategies, then the claim-level judgement. A failing
/// strategy is recorded and left out of the evidence.
pub fn run_claim(ctx: &Context, claim: &Claim) -> Result<ClaimRun, PipelineError> {
    let strategies: Vec<StrategyRun> =
        bounded_map(&StrategyKind::ALL, StrategyKind::ALL.len(), |_, &kind| match run_strategy(ctx, claim, kind) {
            Ok(r) => StrategyRun { kind, result: Some(r), error: None },
            Err(e) => {
                warn!(claim = %claim.id, strategy = ?kind, error = %e, "strategy failed");
                StrategyRun { kind, result: None, error: Some(e.to_string()) }
            }
        });
    let mut run = ClaimRun {
        claim_id: claim.id.clone(),
        qa_labels: Vec::new(),
        verdict: ClaimVerdict { decision: Label::NotEnoughEvidence, summary: String::new(), error: None },
        predicted: Label::NotEnoughEvidence,
        gold: claim.gold_label,
        strategies,
    };
    let blocks = run.evidence_blocks();
    if blocks.is_empty() {
        return Err(PipelineError::NoEvidence { claim_id: claim.id.clone() });
    }
    run.qa_labels = run.result(StrategyKind::Evidence).map(StrategyResult::qa_labels).unwrap_or_default();
    run.verdict = judge_claim(ctx, claim, &blocks)?;
    run.predicted = match aggregate_qa_labels(&run.qa_labels) {
        Ok(label) => label,
        Err(_) => run.verdict.decision,
    };
    Ok(run)
}
