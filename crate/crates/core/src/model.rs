//! Domain types shared across the pipeline: claims, veracity labels,
//! strategy kinds and per-evidence labels.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown label: {0:?}")]
    UnknownLabel(String),
    #[error("claim text is empty")]
    EmptyClaimText,
    #[error("invalid origin url {0:?}")]
    InvalidOriginUrl(String),
    #[error("origin domain {domain:?} does not match origin url {url:?}")]
    DomainMismatch { domain: String, url: String },
    #[error("invalid claim date {0:?}")]
    InvalidDate(String),
}

/// Claim-level veracity label.
///
/// The declaration order is the fixed order used by confusion matrices and
/// reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Supported,
    Refuted,
    NotEnoughEvidence,
    ConflictingEvidence,
}

impl Label {
    pub const ALL: [Label; 4] =
        [Label::Supported, Label::Refuted, Label::NotEnoughEvidence, Label::ConflictingEvidence];

    /// The three options offered to participants.
    pub const PARTICIPANT: [Label; 3] = [Label::Supported, Label::Refuted, Label::NotEnoughEvidence];

    pub fn canonical(self) -> &'static str {
        match self {
            Label::Supported => "Supported",
            Label::Refuted => "Refuted",
            Label::NotEnoughEvidence => "Not Enough Evidence",
            Label::ConflictingEvidence => "Conflicting Evidence/Cherry-picking",
        }
    }

    /// Column abbreviation used in tabular reports.
    pub fn short(self) -> &'static str {
        match self {
            Label::Supported => "Sup",
            Label::Refuted => "Ref",
            Label::NotEnoughEvidence => "Nee",
            Label::ConflictingEvidence => "Conf",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical())
    }
}

fn normalize_ws(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Case-insensitive, whitespace-normalized match against the canonical
/// label strings.
pub fn parse_label(raw: &str) -> Result<Label, ModelError> {
    let norm = normalize_ws(raw);
    Label::ALL
        .into_iter()
        .find(|l| normalize_ws(l.canonical()) == norm)
        .ok_or_else(|| ModelError::UnknownLabel(raw.to_string()))
}

/// Collapses the internal taxonomy onto the participant-facing options.
pub fn project_participant_label(label: Label) -> Label {
    match label {
        Label::ConflictingEvidence => Label::NotEnoughEvidence,
        other => other,
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.canonical())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        parse_label(&raw).map_err(serde::de::Error::custom)
    }
}

/// How gold labels in a dataset file are spelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelAdapter {
    /// The four benchmark label strings.
    #[default]
    Averitec,
    /// True / False / Mixed answer keys.
    Table5,
}

impl LabelAdapter {
    pub fn parse(self, raw: &str) -> Result<Label, ModelError> {
        match self {
            LabelAdapter::Averitec => parse_label(raw),
            LabelAdapter::Table5 => match normalize_ws(raw).as_str() {
                "true" => Ok(Label::Supported),
                "false" => Ok(Label::Refuted),
                "mixed" => Ok(Label::ConflictingEvidence),
                _ => Err(ModelError::UnknownLabel(raw.to_string())),
            },
        }
    }
}

impl std::str::FromStr for LabelAdapter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "averitec" => Ok(LabelAdapter::Averitec),
            "table5" => Ok(LabelAdapter::Table5),
            other => Err(format!("unknown adapter {other:?} (expected averitec|table5)")),
        }
    }
}

/// The four verification lenses. Declaration order is display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Source,
    FactChecking,
    Evidence,
    Controversial,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] =
        [StrategyKind::Source, StrategyKind::FactChecking, StrategyKind::Evidence, StrategyKind::Controversial];

    pub fn display_name(self) -> &'static str {
        match self {
            StrategyKind::Source => "Source",
            StrategyKind::FactChecking => "Fact Checking",
            StrategyKind::Evidence => "Evidence",
            StrategyKind::Controversial => "Controversial",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Judgment of a single question-answer pair against the claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QALabel {
    Support,
    Refute,
    Inconclusive,
}

impl QALabel {
    pub const ALL: [QALabel; 3] = [QALabel::Support, QALabel::Refute, QALabel::Inconclusive];

    pub fn as_str(self) -> &'static str {
        match self {
            QALabel::Support => "support",
            QALabel::Refute => "refute",
            QALabel::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
}

/// Unvalidated claim record as found in dataset files or API payloads.
///
/// Field aliases cover the benchmark's own column names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawClaimRecord {
    #[serde(default, alias = "claim_id")]
    pub id: Option<String>,
    #[serde(default, alias = "claim")]
    pub text: String,
    #[serde(default)]
    pub speaker: Option<String>,
    #[serde(default, alias = "date")]
    pub claim_date: Option<String>,
    #[serde(default, alias = "location_ISO_code")]
    pub location: Option<String>,
    #[serde(default, alias = "original_claim_url")]
    pub origin_url: Option<String>,
    #[serde(default)]
    pub origin_domain: Option<String>,
    #[serde(default, alias = "gold_label", alias = "actual_answer")]
    pub label: Option<String>,
}

/// Lowercased host of `url` with any leading `www.` removed.
pub fn domain_of(url: &str) -> Result<String, ModelError> {
    let parsed = url::Url::parse(url.trim()).map_err(|_| ModelError::InvalidOriginUrl(url.to_string()))?;
    let host = parsed.host_str().ok_or_else(|| ModelError::InvalidOriginUrl(url.to_string()))?.to_ascii_lowercase();
    Ok(host.strip_prefix("www.").map(str::to_string).unwrap_or(host))
}

fn parse_date(raw: &str) -> Result<NaiveDate, ModelError> {
    let raw = raw.trim();
    ["%Y-%m-%d", "%d-%m-%Y", "%Y/%m/%d"]
        .iter()
        .find_map(|fmt| NaiveDate::parse_from_str(raw, fmt).ok())
        .ok_or_else(|| ModelError::InvalidDate(raw.to_string()))
}

fn non_blank(v: &Option<String>) -> Option<String> {
    v.as_deref().map(str::trim).filter(|s| !s.is_empty()).map(str::to_string)
}

/// Validates a raw record with the default label spelling.
pub fn validate_claim(raw: &RawClaimRecord) -> Result<Claim, ModelError> {
    validate_claim_with(raw, LabelAdapter::Averitec)
}

pub fn validate_claim_with(raw: &RawClaimRecord, adapter: LabelAdapter) -> Result<Claim, ModelError> {
    let text = raw.text.trim();
    if text.is_empty() {
        return Err(ModelError::EmptyClaimText);
    }
    let origin_url = non_blank(&raw.origin_url);
    let derived = origin_url.as_deref().map(domain_of).transpose()?;
    let origin_domain = match (non_blank(&raw.origin_domain), derived) {
        (Some(given), Some(derived)) => {
            let given_norm = given.to_ascii_lowercase();
            let given_norm = given_norm.strip_prefix("www.").unwrap_or(&given_norm).to_string();
            if given_norm != derived {
                return Err(ModelError::DomainMismatch { domain: given, url: origin_url.unwrap_or_default() });
            }
            Some(derived)
        }
        (Some(given), None) => Some(given.to_ascii_lowercase()),
        (None, derived) => derived,
    };
    Ok(Claim {
        id: non_blank(&raw.id).unwrap_or_else(|| uuid::Uuid::new_v4().to_string()),
        text: text.to_string(),
        speaker: non_blank(&raw.speaker),
        claim_date: non_blank(&raw.claim_date).as_deref().map(parse_date).transpose()?,
        location: non_blank(&raw.location),
        origin_url,
        origin_domain,
        gold_label: non_blank(&raw.label).as_deref().map(|l| adapter.parse(l)).transpose()?,
    })
}
