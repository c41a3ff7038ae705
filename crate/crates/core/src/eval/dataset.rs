//! Claim datasets: a JSON array or JSON lines of raw claim records.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{validate_claim_with, Claim, LabelAdapter, ModelError, RawClaimRecord};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("record {record_id}: unknown label {label:?}")]
    UnknownLabel { record_id: String, label: String },
    #[error("record {record_id}: missing gold label")]
    MissingLabel { record_id: String },
    #[error("record {record_id}: {source}")]
    Invalid { record_id: String, source: ModelError },
}

pub fn load_dataset(path: &Path, adapter: LabelAdapter) -> Result<Vec<Claim>, DatasetError> {
    let text =
        fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_dataset(&text, adapter)
}

/// Records in file order. Records without an id get `claim-NNNN` from
/// their 1-based position. Every record needs a gold label.
pub fn parse_dataset(text: &str, adapter: LabelAdapter) -> Result<Vec<Claim>, DatasetError> {
    let trimmed = text.trim_start();
    let raws: Vec<(usize, RawClaimRecord)> = if trimmed.is_empty() {
        Vec::new()
    } else if trimmed.starts_with('[') {
        let parsed: Vec<RawClaimRecord> =
            serde_json::from_str(text).map_err(|e| DatasetError::Parse { line: e.line(), reason: e.to_string() })?;
        parsed.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect()
    } else {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: RawClaimRecord =
                serde_json::from_str(line).map_err(|e| DatasetError::Parse { line: i + 1, reason: e.to_string() })?;
            out.push((out.len() + 1, r));
        }
        out
    };
    raws.into_iter()
        .map(|(pos, mut raw)| {
            if raw.id.as_deref().is_none_or(|s| s.trim().is_empty()) {
                raw.id = Some(format!("claim-{pos:04}"));
            }
            let record_id = raw.id.clone().unwrap_or_default();
            let claim = validate_claim_with(&raw, adapter).map_err(|e| match e {
                ModelError::UnknownLabel(label) => DatasetError::UnknownLabel { record_id: record_id.clone(), label },
                source => DatasetError::Invalid { record_id: record_id.clone(), source },
            })?;
            if claim.gold_label.is_none() {
                return Err(DatasetError::MissingLabel { record_id });
            }
            Ok(claim)
        })
        .collect()
}
