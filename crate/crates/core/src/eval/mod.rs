//! Offline evaluation: datasets, metrics, reports and the parallel harness.

pub mod dataset;
pub mod fixture;
pub mod harness;
pub mod metrics;
pub mod report;

pub use dataset::{load_dataset, parse_dataset, DatasetError};
pub use harness::{evaluate, Evaluation};
pub use metrics::{confusion_matrix, f1_scores, LabelScores, Matrix, Scores};
pub use report::{ClaimOutcome, EvalReport};
