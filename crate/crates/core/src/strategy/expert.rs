//! Expert fact-check retrieval and article summarization.

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{bounded_map, StrategyError};
use crate::gateway::{fetch_article, lookup_factchecks, FactCheckRecord};
use crate::model::Claim;
use crate::Context;

pub const MIN_CHUNK_BUDGET: usize = 512;
pub const SUMMARY_UNAVAILABLE: &str = "Summary unavailable";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactCheckReview {
    pub question: String,
    pub publisher: String,
    pub rating: String,
    pub url: String,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExpertFindings {
    pub reviews: Vec<FactCheckReview>,
    /// No fact-check organization has covered the claim.
    pub no_coverage: bool,
}

pub fn review_question(claim_text: &str) -> String {
    format!("Has any expert debunked a claim that stated \u{201c}{}\u{201d}?", claim_text.trim().trim_end_matches('.'))
}

/// Splits on blank lines and packs whole paragraphs greedily into segments
/// of at most `budget` characters. A paragraph longer than the budget is cut
/// on character boundaries, preferring whitespace.
pub fn split_segments(text: &str, budget: usize) -> Vec<String> {
    let normalized = text.replace("\r\n", "\n");
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in normalized.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join("\n").trim().to_string());
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join("\n").trim().to_string());
    }

    let mut segments = Vec::new();
    let mut acc = String::new();
    let mut acc_len = 0usize;
    for p in paragraphs {
        let len = p.chars().count();
        if len > budget {
            if !acc.is_empty() {
                segments.push(std::mem::take(&mut acc));
                acc_len = 0;
            }
            segments.extend(hard_split(&p, budget));
        } else if acc.is_empty() {
            acc = p;
            acc_len = len;
        } else if acc_len + 2 + len <= budget {
            acc.push_str("\n\n");
            acc.push_str(&p);
            acc_len += 2 + len;
        } else {
            segments.push(std::mem::replace(&mut acc, p));
            acc_len = len;
        }
    }
    if !acc.is_empty() {
        segments.push(acc);
    }
    segments
}

fn hard_split(p: &str, budget: usize) -> Vec<String> {
    let chars: Vec<char> = p.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = (start + budget).min(chars.len());
        if end < chars.len() {
            if let Some(ws) = (start + budget / 2..end).rev().find(|&i| chars[i].is_whitespace()) {
                end = ws + 1;
            }
        }
        let piece: String = chars[start..end].iter().collect();
        let piece = piece.trim();
        if !piece.is_empty() {
            out.push(piece.to_string());
        }
        start = end;
    }
    out
}

/// Summarizes `text` with segments of at most `budget` characters. One
/// segment costs one call and its output is returned verbatim; `k > 1`
/// segments cost `k + 1` calls, the last merging the partial summaries.
/// Empty text costs nothing and yields an empty summary.
pub fn chunk_and_summarize(ctx: &Context, text: &str, budget: usize) -> Result<String, StrategyError> {
    if budget < MIN_CHUNK_BUDGET {
        return Err(StrategyError::InvalidChunkBudget(budget));
    }
    let segments = split_segments(text, budget);
    match segments.len() {
        0 => Ok(String::new()),
        1 => Ok(ctx.llm("summarize", &ctx.prompts.summarize, &segments[0])?),
        _ => {
            let mut partial = Vec::with_capacity(segments.len());
            for s in &segments {
                partial.push(ctx.llm("summarize", &ctx.prompts.summarize, s)?);
            }
            Ok(ctx.llm("summarize", &ctx.prompts.summarize, &partial.join("\n\n"))?)
        }
    }
}

fn review_for(ctx: &Context, claim: &Claim, record: &FactCheckRecord) -> FactCheckReview {
    let mut review = FactCheckReview {
        question: review_question(&claim.text),
        publisher: record.publisher.clone(),
        rating: record.rating.clone(),
        url: record.url.clone(),
        summary: SUMMARY_UNAVAILABLE.into(),
        error: None,
    };
    let body = match record.text.clone().filter(|t| !t.trim().is_empty()) {
        Some(t) => Ok(Some(t)),
        None => fetch_article(&ctx.gateway, &record.url),
    };
    let outcome = match body {
        Ok(Some(text)) => chunk_and_summarize(ctx, &text, ctx.chunk_budget).map(Some),
        Ok(None) => Ok(None),
        Err(e) => Err(StrategyError::Gateway(e)),
    };
    match outcome {
        Ok(Some(summary)) if !summary.trim().is_empty() => review.summary = summary.trim().to_string(),
        Ok(_) => review.error = Some("article text unavailable".into()),
        Err(e) => {
            warn!(url = %record.url, error = %e, "fact-check summary failed");
            review.error = Some(e.to_string());
        }
    }
    review
}

/// Looks up fact-checks for the claim and summarizes each article
/// concurrently. Reviews keep the order the provider returned them in.
/// Per-article failures are recorded on the review; only the lookup itself
/// can fail the strategy.
pub fn find_expert_reviews(ctx: &Context, claim: &Claim) -> Result<ExpertFindings, StrategyError> {
    let records: Vec<FactCheckRecord> =
        lookup_factchecks(&ctx.gateway, &claim.text)?.into_iter().filter(|r| !r.url.trim().is_empty()).collect();
    let reviews = bounded_map(&records, ctx.fanout, |_, r| review_for(ctx, claim, r));
    Ok(ExpertFindings { no_coverage: reviews.is_empty(), reviews })
}

pub fn render_findings(f: &ExpertFindings) -> String {
    if f.no_coverage {
        return "No fact-checks by established organizations were found for this claim.".into();
    }
    f.reviews
        .iter()
        .map(|r| {
            format!(
                "Question: {}\nPublisher: {}\nRating: {}\nURL: {}\nSummary: {}",
                r.question, r.publisher, r.rating, r.url, r.summary
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}
