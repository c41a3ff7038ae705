//! Supporting and refuting viewpoints on a claim.

use serde::{Deserialize, Serialize};

use super::StrategyError;
use crate::gateway::{web_answer, AnswerStyle};
use crate::model::Claim;
use crate::prompts::render;
use crate::Context;

pub const MAX_PER_SIDE: usize = 3;

const CORRECTION: &str = "\n\nYour previous reply did not follow the required layout. Reply with a \"Supporting:\" section and a \"Refuting:\" section, each a list of \"- \" bullets, and nothing else.";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerspectiveSet {
    pub supporting: Vec<String>,
    pub refuting: Vec<String>,
    /// Drawn only from the retrieval step.
    pub citations: Vec<String>,
    /// Raw retrieval text, kept when synthesis could not be structured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unstructured: Option<String>,
    /// Retrieval found nothing to contrast.
    #[serde(default)]
    pub no_perspectives: bool,
}

fn is_placeholder(item: &str) -> bool {
    let lowered = item.trim().trim_end_matches('.').to_lowercase();
    matches!(lowered.as_str(), "none" | "n/a" | "" | "<argument>" | "no arguments" | "none found")
}

/// Parses the `Supporting:` / `Refuting:` bullet layout. Returns `None` when
/// neither section header appears.
pub fn parse_perspectives(text: &str) -> Option<(Vec<String>, Vec<String>)> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Supporting,
        Refuting,
    }
    let mut section = Section::None;
    let mut seen = false;
    let (mut sup, mut refu) = (Vec::new(), Vec::new());
    for raw in text.lines() {
        let line = raw.trim();
        let lower = line.trim_matches('*').trim().to_lowercase();
        let header = lower.trim_start_matches('#').trim();
        if let Some(rest) = header.strip_prefix("supporting") {
            if rest.trim_start().starts_with(':') || rest.trim().is_empty() {
                section = Section::Supporting;
                seen = true;
                continue;
            }
        }
        if let Some(rest) = header.strip_prefix("refuting") {
            if rest.trim_start().starts_with(':') || rest.trim().is_empty() {
                section = Section::Refuting;
                seen = true;
                continue;
            }
        }
        let item = line
            .strip_prefix("- ")
            .or_else(|| line.strip_prefix("• "))
            .or_else(|| line.strip_prefix("* "))
            .map(str::trim);
        let Some(item) = item else { continue };
        if is_placeholder(item) {
            continue;
        }
        match section {
            Section::Supporting => sup.push(item.to_string()),
            Section::Refuting => refu.push(item.to_string()),
            Section::None => {}
        }
    }
    if !seen {
        return None;
    }
    sup.truncate(MAX_PER_SIDE);
    refu.truncate(MAX_PER_SIDE);
    Some((sup, refu))
}

/// One controversial-style retrieval and one synthesis call; a second
/// synthesis call only when the first reply is unusable.
pub fn gather_perspectives(ctx: &Context, claim: &Claim) -> Result<PerspectiveSet, StrategyError> {
    let retrieval = web_answer(&ctx.gateway, &ctx.prompts, &claim.text, AnswerStyle::Controversial)?;
    if retrieval.text.trim().is_empty() {
        return Ok(PerspectiveSet { no_perspectives: true, ..Default::default() });
    }
    let prompt = render(
        &ctx.prompts.perspective_synthesis,
        &[("claim", claim.text.as_str()), ("retrieval", retrieval.text.as_str())],
    );
    let mut set = PerspectiveSet { citations: retrieval.citations.clone(), ..Default::default() };
    let first = ctx.llm("perspective_synthesis", "", &prompt)?;
    let parsed = match parse_perspectives(&first) {
        Some((s, r)) if !(s.is_empty() && r.is_empty()) => Some((s, r)),
        _ => {
            let second = ctx.llm("perspective_synthesis", "", &format!("{prompt}{CORRECTION}"))?;
            match parse_perspectives(&second) {
                Some((s, r)) if !(s.is_empty() && r.is_empty()) => Some((s, r)),
                _ => {
                    set.unstructured = Some(retrieval.text.trim().to_string());
                    None
                }
            }
        }
    };
    if let Some((s, r)) = parsed {
        set.supporting = s;
        set.refuting = r;
    }
    Ok(set)
}

pub fn render_perspectives(p: &PerspectiveSet) -> String {
    if p.no_perspectives {
        return "No opposing perspectives were found for this claim.".into();
    }
    let mut out = String::new();
    if let Some(raw) = &p.unstructured {
        out.push_str(raw);
    } else {
        let list = |items: &[String]| {
            if items.is_empty() {
                "- None found".to_string()
            } else {
                items.iter().map(|i| format!("- {i}")).collect::<Vec<_>>().join("\n")
            }
        };
        out.push_str(&format!("Supporting:\n{}\n\nRefuting:\n{}", list(&p.supporting), list(&p.refuting)));
    }
    if !p.citations.is_empty() {
        out.push_str("\n\nSources:\n");
        out.push_str(&p.citations.iter().map(|c| format!("- {c}")).collect::<Vec<_>>().join("\n"));
    }
    out
}
