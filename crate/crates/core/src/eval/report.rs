//! Evaluation reports and their JSON and Markdown renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{confusion_matrix, f1_scores, LabelScores, Matrix};
use crate::model::Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimOutcome {
    pub claim_id: String,
    pub gold: Label,
    pub predicted: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub confusion: Matrix,
    pub per_label: Vec<LabelScores>,
    pub macro_f1: f64,
    /// Sorted by claim id.
    pub per_claim: Vec<ClaimOutcome>,
    pub failures: usize,
}

impl EvalReport {
    pub fn from_outcomes(mut outcomes: Vec<ClaimOutcome>) -> Self {
        outcomes.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
        let pairs: Vec<(Label, Label)> = outcomes.iter().map(|o| (o.gold, o.predicted)).collect();
        let confusion = confusion_matrix(&pairs);
        let scores = f1_scores(&confusion);
        Self {
            n: outcomes.len(),
            confusion,
            per_label: scores.per_label,
            macro_f1: scores.macro_f1,
            failures: outcomes.iter().filter(|o| o.error.is_some()).count(),
            per_claim: outcomes,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let heads: Vec<&str> = Label::ALL.iter().map(|l| l.short()).collect();
        let _ = writeln!(out, "# Evaluation report\n\nClaims: {}, failures: {}\n", self.n, self.failures);
        let _ = writeln!(out, "| Metric | {} | Macro |", heads.join(" | "));
        let _ = writeln!(out, "|---|{}---|", "---|".repeat(heads.len()));
        let row = |name: &str, f: fn(&LabelScores) -> f64, tail: String| {
            let cells: Vec<String> = self.per_label.iter().map(|s| format!("{:.4}", f(s))).collect();
            format!("| {name} | {} | {tail} |", cells.join(" | "))
        };
        let _ = writeln!(out, "{}", row("F1", |s| s.f1, format!("{:.4}", self.macro_f1)));
        let _ = writeln!(out, "{}", row("Precision", |s| s.precision, String::new()));
        let _ = writeln!(out, "{}", row("Recall", |s| s.recall, String::new()));

        let _ = writeln!(out, "\n## Confusion matrix (rows gold, columns predicted)\n");
        let _ = writeln!(out, "| Gold \\ Pred | {} |", heads.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(heads.len()));
        for (label, counts) in Label::ALL.iter().zip(self.confusion.iter()) {
            let cells: Vec<String> = counts.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "| {} | {} |", label.short(), cells.join(" | "));
        }

        let _ = writeln!(out, "\n## Claims\n");
        let _ = writeln!(out, "| Claim | Gold | Predicted | Error |");
        let _ = writeln!(out, "|---|---|---|---|");
        for c in &self.per_claim {
            let err = c.error.as_deref().unwrap_or("").replace('|', "\\|").replace('\n', " ");
            let _ = writeln!(out, "| {} | {} | {} | {} |", c.claim_id, c.gold, c.predicted, err);
        }
        out
    }
}
