//! Verdicts: per-strategy judgements, evidence labeling, the deterministic
//! label aggregation and the claim-level judgement.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::model::{parse_label, Claim, Label, QALabel, StrategyKind};
use crate::prompts::render;
use crate::strategy::{QAPair, NO_EVIDENCE};
use crate::Context;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("transcript is empty")]
    EmptyTranscript,
    #[error("the last transcript turn must come from the user")]
    LastTurnNotUser,
    #[error("no evidence blocks to judge")]
    EmptyEvidence,
    #[error("no evidence labels to aggregate")]
    EmptyLabelList,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyDecision {
    #[serde(rename = "Support the Claim")]
    Support,
    #[serde(rename = "Refute the Claim")]
    Refute,
    #[serde(rename = "Not Enough Evidence")]
    NotEnoughEvidence,
}

impl StrategyDecision {
    pub const ALL: [StrategyDecision; 3] =
        [StrategyDecision::Support, StrategyDecision::Refute, StrategyDecision::NotEnoughEvidence];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyDecision::Support => "Support the Claim",
            StrategyDecision::Refute => "Refute the Claim",
            StrategyDecision::NotEnoughEvidence => "Not Enough Evidence",
        }
    }

    pub fn parse(raw: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == raw.trim())
    }
}

impl fmt::Display for StrategyDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyVerdict {
    pub decision: StrategyDecision,
    pub conclusion: String,
    /// Set when the verdict is a fallback after unparseable replies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub decision: Label,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub speaker: Speaker,
    pub text: String,
}

impl TranscriptTurn {
    pub fn user(text: impl Into<String>) -> Self {
        Self { speaker: Speaker::User, text: text.into() }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self { speaker: Speaker::Assistant, text: text.into() }
    }
}

pub fn render_transcript(turns: &[TranscriptTurn]) -> String {
    turns
        .iter()
        .map(|t| {
            let who = match t.speaker {
                Speaker::User => "User",
                Speaker::Assistant => "Assistant",
            };
            format!("{who}: {}", t.text.trim())
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceBlock {
    pub strategy: StrategyKind,
    pub text: String,
}

pub fn render_evidence(blocks: &[EvidenceBlock]) -> String {
    blocks
        .iter()
        .map(|b| format!("Strategy: {}\n{}", b.strategy.display_name(), b.text.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Finds the first balanced JSON object in `text` that parses, ignoring
/// braces inside strings and any surrounding prose or code fences.
pub fn extract_json_object(text: &str) -> Option<Map<String, Value>> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(offset) = text[start..].find('{') {
        let open = start + offset;
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        let mut close = None;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            if in_string {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_string = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        if let Some(end) = close {
            if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(&text[open..=end]) {
                return Some(map);
            }
        }
        start = open + 1;
    }
    None
}

fn string_field(map: &Map<String, Value>, key: &str) -> Option<String> {
    map.get(key).and_then(Value::as_str).map(str::to_string)
}

/// `(decision, explanation)` from a judgement reply, or `None` when the
/// reply has no object with both keys as strings.
pub fn parse_judgement_json(text: &str, decision_key: &str, explanation_key: &str) -> Option<(String, String)> {
    let map = extract_json_object(text)?;
    Some((string_field(&map, decision_key)?, string_field(&map, explanation_key)?))
}

pub fn parse_strategy_verdict(text: &str) -> Option<StrategyVerdict> {
    let (decision, conclusion) = parse_judgement_json(text, "decision", "conclusion")?;
    Some(StrategyVerdict { decision: StrategyDecision::parse(&decision)?, conclusion, error: None })
}

pub fn parse_claim_verdict(text: &str) -> Option<ClaimVerdict> {
    let (decision, summary) = parse_judgement_json(text, "decision", "summary")?;
    Some(ClaimVerdict { decision: parse_label(&decision).ok()?, summary, error: None })
}

fn correction(keys: &str) -> String {
    format!(
        "\n\nYour previous reply was not a valid JSON object with the keys {keys}. Reply with that JSON object only."
    )
}

/// One call, one corrective retry, then a fallback value flagged with an
/// error. Gateway failures propagate.
fn with_retry<T>(
    ctx: &Context,
    task: &str,
    prompt: &str,
    keys: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Result<T, String>, GatewayError> {
    let first = ctx.llm(task, "", prompt)?;
    if let Some(v) = parse(&first) {
        return Ok(Ok(v));
    }
    let second = ctx.llm(task, "", &format!("{prompt}{}", correction(keys)))?;
    Ok(parse(&second)
        .ok_or_else(|| format!("unparseable reply after retry: {}", second.chars().take(200).collect::<String>())))
}

/// Judges one strategy from the conversation transcript, whose last turn is
/// the user's own assessment.
pub fn judge_strategy(
    ctx: &Context,
    claim: &Claim,
    transcript: &[TranscriptTurn],
) -> Result<StrategyVerdict, SynthError> {
    let last = transcript.last().ok_or(SynthError::EmptyTranscript)?;
    if last.speaker != Speaker::User {
        return Err(SynthError::LastTurnNotUser);
    }
    let prompt = render(
        &ctx.prompts.strategy_judgement,
        &[("claim", claim.text.as_str()), ("transcript", render_transcript(transcript).as_str())],
    );
    Ok(
        match with_retry(ctx, "strategy_judgement", &prompt, "\"decision\" and \"conclusion\"", parse_strategy_verdict)?
        {
            Ok(v) => v,
            Err(e) => StrategyVerdict {
                decision: StrategyDecision::NotEnoughEvidence,
                conclusion: String::new(),
                error: Some(e),
            },
        },
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelOutcome {
    pub label: QALabel,
    pub error: Option<String>,
}

pub fn parse_qa_label(text: &str) -> Option<QALabel> {
    let word = match extract_json_object(text) {
        Some(map) => string_field(&map, "label")?,
        None => text.to_string(),
    };
    let word = word.trim().trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    match word.as_str() {
        "support" | "supports" => Some(QALabel::Support),
        "refute" | "refutes" => Some(QALabel::Refute),
        "inconclusive" => Some(QALabel::Inconclusive),
        _ => None,
    }
}

/// Labels one answer against the claim. Pairs without evidence are
/// inconclusive without a call.
pub fn label_qa(ctx: &Context, claim: &Claim, pair: &QAPair) -> Result<LabelOutcome, GatewayError> {
    if pair.answer == NO_EVIDENCE {
        return Ok(LabelOutcome { label: QALabel::Inconclusive, error: None });
    }
    let prompt = render(
        &ctx.prompts.qa_label,
        &[("claim", claim.text.as_str()), ("question", pair.question.text.as_str()), ("answer", pair.answer.as_str())],
    );
    Ok(match with_retry(ctx, "qa_label", &prompt, "\"label\"", parse_qa_label)? {
        Ok(label) => LabelOutcome { label, error: None },
        Err(e) => LabelOutcome { label: QALabel::Inconclusive, error: Some(e) },
    })
}

/// Deterministic claim label from per-answer labels. Inconclusive labels
/// carry no weight.
pub fn aggregate_qa_labels(labels: &[QALabel]) -> Result<Label, SynthError> {
    if labels.is_empty() {
        return Err(SynthError::EmptyLabelList);
    }
    let s = labels.iter().filter(|l| **l == QALabel::Support).count();
    let r = labels.iter().filter(|l| **l == QALabel::Refute).count();
    Ok(match (s, r) {
        (0, 0) => Label::NotEnoughEvidence,
        (_, 0) => Label::Supported,
        (0, _) => Label::Refuted,
        _ => Label::ConflictingEvidence,
    })
}

/// Claim-level judgement over all collected evidence.
pub fn judge_claim(ctx: &Context, claim: &Claim, blocks: &[EvidenceBlock]) -> Result<ClaimVerdict, SynthError> {
    if blocks.iter().all(|b| b.text.trim().is_empty()) {
        return Err(SynthError::EmptyEvidence);
    }
    let prompt = render(
        &ctx.prompts.claim_judgement,
        &[("claim", claim.text.as_str()), ("evidence_block", render_evidence(blocks).as_str())],
    );
    Ok(match with_retry(ctx, "claim_judgement", &prompt, "\"decision\" and \"summary\"", parse_claim_verdict)? {
        Ok(v) => v,
        Err(e) => ClaimVerdict { decision: Label::NotEnoughEvidence, summary: String::new(), error: Some(e) },
    })
}
