//! Runs the pipeline over a dataset with a bounded worker pool.

use crate::model::{Claim, Label};
use crate::pipeline::{run_claim, ClaimRun};
use crate::strategy::bounded_map;
use crate::Context;

use super::report::{ClaimOutcome, EvalReport};

#[derive(Debug)]
pub struct Evaluation {
    pub report: EvalReport,
    /// Per-claim artifacts in claim-id order; `Err` holds the failure text.
    pub runs: Vec<(String, Result<ClaimRun, String>)>,
}

/// Claims without a gold label are run but not scored. A failing claim is
/// scored as `Not Enough Evidence` and counted in `failures`.
pub fn evaluate(ctx: &Context, claims: &[Claim], jobs: usize) -> Evaluation {
    let results = bounded_map(claims, jobs, |_, claim| run_claim(ctx, claim).map_err(|e| e.to_string()));
    let mut runs: Vec<(String, Result<ClaimRun, String>)> = claims.iter().map(|c| c.id.clone()).zip(results).collect();
    runs.sort_by(|a, b| a.0.cmp(&b.0));
    let outcomes = claims
        .iter()
        .filter_map(|claim| {
            let gold = claim.gold_label?;
            let (_, run) = runs.iter().find(|(id, _)| *id == claim.id)?;
            Some(match run {
                Ok(r) => ClaimOutcome { claim_id: claim.id.clone(), gold, predicted: r.predicted, error: None },
                Err(e) => ClaimOutcome {
                    claim_id: claim.id.clone(),
                    gold,
                    predicted: Label::NotEnoughEvidence,
                    error: Some(e.clone()),
                },
            })
        })
        .collect();
    Evaluation { report: EvalReport::from_outcomes(outcomes), runs }
}
