//! Confusion matrix and per-label F1.

use serde::{Deserialize, Serialize};

use crate::model::Label;

/// Rows are gold labels, columns predictions, both in [`Label::ALL`] order.
pub type Matrix = [[u64; 4]; 4];

pub fn confusion_matrix(pairs: &[(Label, Label)]) -> Matrix {
    let mut m = [[0; 4]; 4];
    for (gold, pred) in pairs {
        m[gold.index()][pred.index()] += 1;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelScores {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Whether the label occurs in gold or predictions.
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub per_label: Vec<LabelScores>,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Zero denominators give zero. The macro mean skips labels absent from
/// both gold and predictions; with no labels at all it is zero.
pub fn f1_scores(m: &Matrix) -> Scores {
    let per_label: Vec<LabelScores> = Label::ALL
        .iter()
        .map(|&label| {
            let k = label.index();
            let tp = m[k][k];
            let row: u64 = m[k].iter().sum();
            let col: u64 = m.iter().map(|r| r[k]).sum();
            let precision = ratio(tp, col);
            let recall = ratio(tp, row);
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            LabelScores { label, precision, recall, f1, present: row + col > 0 }
        })
        .collect();
    let present: Vec<f64> = per_label.iter().filter(|s| s.present).map(|s| s.f1).collect();
    let macro_f1 = if present.is_empty() { 0.0 } else { present.iter().sum::<f64>() / present.len() as f64 };
    Scores { per_label, macro_f1 }
}
