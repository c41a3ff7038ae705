//! Multi-hop question decomposition and per-question retrieval.

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{bounded_map, StrategyError};
use crate::gateway::{web_answer, AnswerStyle};
use crate::model::{Claim, QALabel};
use crate::prompts::render;
use crate::Context;

pub const MAX_QUESTIONS: usize = 6;
pub const NO_EVIDENCE: &str = "No evidence found";

const CORRECTION: &str = "\n\nYour previous reply did not contain at least two numbered questions. Reply with a numbered list of 2 to 6 questions and nothing else.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuestion {
    /// 1-based position in the generated list.
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: SubQuestion,
    pub answer: String,
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa_label: Option<QALabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl QAPair {
    pub fn has_evidence(&self) -> bool {
        self.answer != NO_EVIDENCE
    }
}

fn numbered_item(line: &str) -> Option<&str> {
    let line = line.trim_start();
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    Some(rest.trim()).filter(|s| !s.is_empty())
}

/// Numbered list items (`1.` or `1)`), each ending in `?`, capped at
/// [`MAX_QUESTIONS`].
pub fn parse_questions(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(numbered_item)
        .map(|q| {
            let q = q.trim_matches('*').trim();
            if q.ends_with('?') {
                q.to_string()
            } else {
                format!("{q}?")
            }
        })
        .take(MAX_QUESTIONS)
        .collect()
}

fn metadata_block(claim: &Claim) -> String {
    let mut lines = Vec::new();
    if let Some(s) = &claim.speaker {
        lines.push(format!("Speaker: {s}"));
    }
    if let Some(d) = &claim.claim_date {
        lines.push(format!("Date: {d}"));
    }
    if let Some(l) = &claim.location {
        lines.push(format!("Location: {l}"));
    }
    if lines.is_empty() {
        String::new()
    } else {
        format!("\n{}\n", lines.join("\n"))
    }
}

/// At most two generation calls: a reply with fewer than two questions is
/// re-prompted once, and the second reply is accepted with one or more.
pub fn generate_questions(ctx: &Context, claim: &Claim) -> Result<Vec<SubQuestion>, StrategyError> {
    let meta = metadata_block(claim);
    let prompt =
        render(&ctx.prompts.question_generation, &[("claim", claim.text.as_str())]).replace("{metadata}", &meta);
    let mut questions = parse_questions(&ctx.llm("question_generation", "", &prompt)?);
    if questions.len() < 2 {
        questions = parse_questions(&ctx.llm("question_generation", "", &format!("{prompt}{CORRECTION}"))?);
        if questions.is_empty() {
            return Err(StrategyError::QuestionParseFailure { attempts: 2 });
        }
    }
    Ok(questions.into_iter().enumerate().map(|(i, text)| SubQuestion { index: i + 1, text }).collect())
}

/// The question with whatever claim metadata is known appended.
pub fn contextualize(question: &str, claim: &Claim) -> String {
    let mut ctx = format!("regarding the claim: '{}'", claim.text.trim());
    if let Some(s) = &claim.speaker {
        ctx.push_str(&format!(", stated by {s}"));
    }
    if let Some(d) = &claim.claim_date {
        ctx.push_str(&format!(" on {d}"));
    }
    format!("{} ({ctx})", question.trim())
}

fn is_no_evidence(text: &str) -> bool {
    let t = text.trim();
    t.is_empty() || t.to_lowercase().contains("no evidence could be discovered")
}

pub fn answer_question(ctx: &Context, q: &SubQuestion, claim: &Claim) -> Result<QAPair, StrategyError> {
    let ans = web_answer(&ctx.gateway, &ctx.prompts, &contextualize(&q.text, claim), AnswerStyle::Evidence)?;
    let (answer, citations) = if is_no_evidence(&ans.text) {
        (NO_EVIDENCE.to_string(), Vec::new())
    } else {
        (ans.text.trim().to_string(), ans.citations)
    };
    Ok(QAPair { question: q.clone(), answer, citations, qa_label: None, error: None })
}

/// Generates sub-questions and answers them with bounded concurrency.
/// Pairs come back in question order; a failed answer becomes a
/// `No evidence found` pair carrying the error.
pub fn run_multihop(ctx: &Context, claim: &Claim) -> Result<Vec<QAPair>, StrategyError> {
    let questions = generate_questions(ctx, claim)?;
    Ok(bounded_map(&questions, ctx.fanout, |_, q| {
        answer_question(ctx, q, claim).unwrap_or_else(|e| {
            warn!(question = %q.text, error = %e, "sub-question retrieval failed");
            QAPair {
                question: q.clone(),
                answer: NO_EVIDENCE.into(),
                citations: Vec::new(),
                qa_label: None,
                error: Some(e.to_string()),
            }
        })
    }))
}

pub fn render_pairs(pairs: &[QAPair]) -> String {
    pairs
        .iter()
        .map(|p| {
            let mut block = format!("Q{}: {}\nA: {}", p.question.index, p.question.text, p.answer);
            if let Some(l) = p.qa_label {
                block.push_str(&format!("\nAssessment: {}", l.as_str()));
            }
            if !p.citations.is_empty() {
                block.push_str(&format!("\nSources: {}", p.citations.join(", ")));
            }
            block
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}
