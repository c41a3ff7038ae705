//! Source credibility profile for the claim's origin.

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::gateway::{lookup_country_freedom, lookup_media_bias, CountryFreedom, FreedomStatus, MediaBiasRecord};
use crate::model::Claim;
use crate::Context;

pub const UNKNOWN: &str = "Unknown";
pub const NOT_VERIFIABLE: &str = "Not verifiable";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProfile {
    pub censorship_score: Option<u8>,
    pub censorship_status: Option<FreedomStatus>,
    pub source_type: String,
    pub outlet_type: String,
    pub coverage_scope: String,
    pub propaganda_association: String,
    pub political_bias: String,
    pub factual_reporting: Option<String>,
    pub credibility_rating: Option<String>,
    pub author_credentials: String,
    pub speaker_context: Option<String>,
    pub original_source: String,
}

impl SourceProfile {
    pub fn unknown() -> Self {
        Self {
            censorship_score: None,
            censorship_status: None,
            source_type: UNKNOWN.into(),
            outlet_type: UNKNOWN.into(),
            coverage_scope: UNKNOWN.into(),
            propaganda_association: UNKNOWN.into(),
            political_bias: UNKNOWN.into(),
            factual_reporting: None,
            credibility_rating: None,
            author_credentials: NOT_VERIFIABLE.into(),
            speaker_context: None,
            original_source: UNKNOWN.into(),
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn original_source(domain: &str, source_type: Option<&str>) -> String {
    let kind = source_type.unwrap_or_default().to_lowercase();
    let prefix = if kind.contains("social media") {
        "Social media post"
    } else if kind.contains("video") {
        "Video post"
    } else if kind.contains("fact-check") {
        "Fact-check article"
    } else if kind.contains("satire") {
        "Satirical article"
    } else if kind.contains("news") || kind.contains("magazine") {
        "Article"
    } else {
        "Content"
    };
    format!("{prefix} from {}", capitalize(domain))
}

/// Joins media-bias and country-freedom data for the claim's origin.
///
/// Never fails: missing or failing lookups leave the affected fields as
/// `Unknown`, and each degradation is appended to `notes`.
pub fn analyze_source_noted(ctx: &Context, claim: &Claim, notes: &mut Vec<String>) -> SourceProfile {
    let mut profile = SourceProfile::unknown();
    profile.speaker_context = claim.speaker.clone();

    let bias: Option<MediaBiasRecord> = match claim.origin_domain.as_deref() {
        Some(domain) => match lookup_media_bias(&ctx.gateway, domain) {
            Ok(found) => found,
            Err(e) => {
                warn!(domain, error = %e, "media bias lookup failed");
                notes.push(format!("media bias lookup failed: {e}"));
                None
            }
        },
        None => None,
    };
    if let Some(domain) = claim.origin_domain.as_deref() {
        profile.original_source = original_source(domain, bias.as_ref().map(|b| b.source_type.as_str()));
    }
    if let Some(b) = &bias {
        profile.source_type = b.source_type.clone();
        profile.outlet_type = b.outlet_type.clone();
        profile.coverage_scope = b.coverage_scope.clone();
        profile.propaganda_association = b.propaganda_association.clone();
        profile.political_bias = b.political_bias.clone();
        profile.factual_reporting = b.factual_reporting.clone();
        profile.credibility_rating = b.credibility_rating.clone();
    }

    let candidates = [claim.location.as_deref(), bias.as_ref().and_then(|b| b.country.as_deref())];
    let freedom: Option<CountryFreedom> =
        candidates.into_iter().flatten().find_map(|country| match lookup_country_freedom(&ctx.gateway, country) {
            Ok(row) => Some(row),
            Err(e) => {
                notes.push(format!("country lookup for {country:?} failed: {e}"));
                None
            }
        });
    if let Some(f) = freedom {
        profile.censorship_score = Some(f.score);
        profile.censorship_status = Some(f.status);
    }
    profile
}

pub fn analyze_source(ctx: &Context, claim: &Claim) -> SourceProfile {
    analyze_source_noted(ctx, claim, &mut Vec::new())
}

/// Field/value lines in declaration order. The two reporting-record fields
/// share one line.
pub fn source_card_lines(p: &SourceProfile) -> Vec<(&'static str, String)> {
    let or_unknown = |v: &Option<String>| v.clone().unwrap_or_else(|| UNKNOWN.into());
    vec![
        (
            "Censorship Score (Country)",
            p.censorship_score.map(|s| format!("{s}/100")).unwrap_or_else(|| UNKNOWN.into()),
        ),
        ("Censorship Status", p.censorship_status.map(|s| s.as_str().to_string()).unwrap_or_else(|| UNKNOWN.into())),
        ("Source Type", p.source_type.clone()),
        ("Outlet Type", p.outlet_type.clone()),
        ("Coverage Scope", p.coverage_scope.clone()),
        ("Propaganda Association", p.propaganda_association.clone()),
        ("Political Bias", p.political_bias.clone()),
        (
            "Factual Reporting / Credibility",
            format!("{} / {}", or_unknown(&p.factual_reporting), or_unknown(&p.credibility_rating)),
        ),
        ("Author Credentials", p.author_credentials.clone()),
        ("Speaker Context", or_unknown(&p.speaker_context)),
        ("Original Source", p.original_source.clone()),
    ]
}

pub fn render_source_card(p: &SourceProfile) -> String {
    source_card_lines(p).into_iter().map(|(field, value)| format!("{field}: {value}")).collect::<Vec<_>>().join("\n")
}
