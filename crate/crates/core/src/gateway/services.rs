//! Typed wrappers over [`Gateway::call`] for each external service.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Gateway, GatewayError, ProviderId, ProviderRequest, ProviderResponse};
use crate::prompts::PromptSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub temperature: f64,
    pub max_output_tokens: usize,
    pub context_budget: usize,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self { model: None, temperature: 1.0, max_output_tokens: 65_536, context_budget: 131_072 }
    }
}

/// Bytes/4 heuristic, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

fn malformed(provider: ProviderId, detail: impl Into<String>) -> GatewayError {
    GatewayError::MalformedProviderPayload { provider, detail: detail.into() }
}

fn text_field(resp: &ProviderResponse, provider: ProviderId) -> Result<String, GatewayError> {
    match &resp.payload {
        Value::String(s) => Ok(s.clone()),
        Value::Object(map) => map
            .get("text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| malformed(provider, "missing \"text\" field")),
        other => Err(malformed(provider, format!("expected text, got {other}"))),
    }
}

/// One chat completion. `task` names the call site and becomes the request
/// operation, so identical prompts used for different purposes are cached
/// separately. The system prompt may be empty for self-contained templates.
pub fn llm_complete(
    gw: &Gateway,
    task: &str,
    system_prompt: &str,
    user_prompt: &str,
    params: &GenerationParams,
) -> Result<String, GatewayError> {
    if user_prompt.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("user prompt is empty".into()));
    }
    let estimated = estimate_tokens(system_prompt) + estimate_tokens(user_prompt);
    if estimated > params.context_budget {
        return Err(GatewayError::ContextBudgetExceeded { estimated, budget: params.context_budget });
    }
    let mut payload = json!({
        "system": system_prompt,
        "user": user_prompt,
        "temperature": params.temperature,
        "max_output_tokens": params.max_output_tokens,
    });
    if let Some(model) = &params.model {
        payload["model"] = json!(model);
    }
    let resp = gw.call(&ProviderRequest::new(ProviderId::LlmChat, task, payload))?;
    text_field(&resp, ProviderId::LlmChat)
}

/// A raw fact-check hit. `text` carries the article body when the provider
/// ships it inline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactCheckRecord {
    #[serde(default)]
    pub claim_reviewed: String,
    pub publisher: String,
    pub rating: String,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

pub fn lookup_factchecks(gw: &Gateway, claim_text: &str) -> Result<Vec<FactCheckRecord>, GatewayError> {
    if claim_text.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("claim text is empty".into()));
    }
    let req = ProviderRequest::new(ProviderId::FactCheckLookup, "search", json!({ "query": claim_text }));
    let resp = gw.call(&req)?;
    let claims = match &resp.payload {
        Value::Null => return Ok(Vec::new()),
        Value::Object(map) => map.get("claims").cloned().unwrap_or(Value::Array(Vec::new())),
        Value::Array(_) => resp.payload.clone(),
        other => return Err(malformed(ProviderId::FactCheckLookup, format!("unexpected payload {other}"))),
    };
    serde_json::from_value(claims).map_err(|e| malformed(ProviderId::FactCheckLookup, e.to_string()))
}

/// Article body behind a fact-check URL, if the provider can retrieve it.
pub fn fetch_article(gw: &Gateway, url: &str) -> Result<Option<String>, GatewayError> {
    let req = ProviderRequest::new(ProviderId::FactCheckLookup, "fetch_article", json!({ "url": url }));
    let resp = gw.call(&req)?;
    match &resp.payload {
        Value::Null => Ok(None),
        _ => text_field(&resp, ProviderId::FactCheckLookup).map(|t| Some(t).filter(|t| !t.trim().is_empty())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaBiasRecord {
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    pub source_type: String,
    pub outlet_type: String,
    pub coverage_scope: String,
    pub political_bias: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factual_reporting: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credibility_rating: Option<String>,
    pub propaganda_association: String,
}

pub fn lookup_media_bias(gw: &Gateway, domain: &str) -> Result<Option<MediaBiasRecord>, GatewayError> {
    let domain = domain.trim().to_ascii_lowercase();
    if domain.is_empty() || domain.contains(char::is_whitespace) {
        return Err(GatewayError::InvalidRequest(format!("invalid hostname {domain:?}")));
    }
    let req = ProviderRequest::new(ProviderId::MediaBiasLookup, "lookup", json!({ "domain": domain }));
    let resp = gw.call(&req)?;
    match resp.payload {
        Value::Null => Ok(None),
        payload => {
            serde_json::from_value(payload).map(Some).map_err(|e| malformed(ProviderId::MediaBiasLookup, e.to_string()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FreedomStatus {
    Free,
    #[serde(rename = "Partly Free")]
    PartlyFree,
    #[serde(rename = "Not Free")]
    NotFree,
}

impl FreedomStatus {
    /// Banding used when a table row carries only a score.
    pub fn from_score(score: u8) -> Self {
        match score {
            70.. => FreedomStatus::Free,
            35..=69 => FreedomStatus::PartlyFree,
            _ => FreedomStatus::NotFree,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FreedomStatus::Free => "Free",
            FreedomStatus::PartlyFree => "Partly Free",
            FreedomStatus::NotFree => "Not Free",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryFreedom {
    pub country: String,
    pub score: u8,
    pub status: FreedomStatus,
}

pub fn lookup_country_freedom(gw: &Gateway, country: &str) -> Result<CountryFreedom, GatewayError> {
    let req = ProviderRequest::new(ProviderId::CountryFreedomLookup, "lookup", json!({ "country": country.trim() }));
    let resp = gw.call(&req)?;
    match resp.payload {
        Value::Null => Err(GatewayError::UnknownCountry(country.to_string())),
        payload => {
            let row: CountryFreedom = serde_json::from_value(payload)
                .map_err(|e| malformed(ProviderId::CountryFreedomLookup, e.to_string()))?;
            if row.score > 100 {
                return Err(malformed(ProviderId::CountryFreedomLookup, format!("score {} out of range", row.score)));
            }
            Ok(row)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerStyle {
    Evidence,
    Controversial,
    General,
}

impl AnswerStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerStyle::Evidence => "evidence",
            AnswerStyle::Controversial => "controversial",
            AnswerStyle::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WebAnswer {
    pub text: String,
    pub citations: Vec<String>,
}

/// Search-grounded answer; `style` picks the retrieval system prompt.
pub fn web_answer(
    gw: &Gateway,
    prompts: &PromptSet,
    query: &str,
    style: AnswerStyle,
) -> Result<WebAnswer, GatewayError> {
    if query.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("query is empty".into()));
    }
    let system = prompts.retrieval_prompt(style);
    let req = ProviderRequest::new(
        ProviderId::WebAnswer,
        "answer",
        json!({ "style": style.as_str(), "system": system, "query": query }),
    );
    let resp = gw.call(&req)?;
    let text = match &resp.payload {
        Value::Null => String::new(),
        _ => text_field(&resp, ProviderId::WebAnswer)?,
    };
    Ok(WebAnswer { text, citations: resp.citations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::data::LocalDataProvider;
    use crate::gateway::mock::{CountingProvider, ScriptRule, ScriptedProvider};
    use crate::gateway::{GatewayMode, ProviderReply};
    use std::sync::Arc;

    fn live(id: ProviderId, p: CountingProvider) -> Gateway {
        Gateway::builder().mode(GatewayMode::Live).provider(id, Arc::new(p)).deadline(None).build()
    }

    #[test]
    fn llm_returns_completion_verbatim() {
        let p = CountingProvider::new(|_: &ProviderRequest| Ok(ProviderReply::new(json!({"text": "fixed reply\n"}))));
        let gw = live(ProviderId::LlmChat, p.clone());
        let out = llm_complete(&gw, "chat", "sys", "user", &GenerationParams::default()).unwrap();
        assert_eq!(out, "fixed reply\n");
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn llm_budget_guard() {
        let p = CountingProvider::new(|_: &ProviderRequest| Ok(ProviderReply::new(json!("x"))));
        let gw = live(ProviderId::LlmChat, p.clone());
        let params = GenerationParams { context_budget: 10, ..Default::default() };
        // 4 + 41 bytes -> 1 + 11 tokens
        let err = llm_complete(&gw, "chat", "abcd", &"y".repeat(41), &params).unwrap_err();
        assert_eq!(err, GatewayError::ContextBudgetExceeded { estimated: 12, budget: 10 });
        assert_eq!(p.calls(), 0);
        let big = "z".repeat(131_072 * 4 + 1);
        assert!(matches!(
            llm_complete(&gw, "chat", "", &big, &GenerationParams::default()),
            Err(GatewayError::ContextBudgetExceeded { .. })
        ));
    }

    #[test]
    fn llm_replay_is_byte_identical() {
        let p = CountingProvider::new(|req: &ProviderRequest| {
            Ok(ProviderReply::new(json!({"text": format!("echo:{}", req.payload["user"].as_str().unwrap())})))
        });
        let store: Arc<dyn crate::gateway::CacheStore> = Arc::new(crate::gateway::MemoryStore::default());
        let rec = Gateway::builder()
            .mode(GatewayMode::Record)
            .store(store.clone())
            .provider(ProviderId::LlmChat, Arc::new(p.clone()))
            .build();
        let recorded = llm_complete(&rec, "chat", "s", "héllo", &GenerationParams::default()).unwrap();
        let replay = Gateway::builder().mode(GatewayMode::Replay).store(store).build();
        let a = llm_complete(&replay, "chat", "s", "héllo", &GenerationParams::default()).unwrap();
        let b = llm_complete(&replay, "chat", "s", "héllo", &GenerationParams::default()).unwrap();
        assert_eq!(a.as_bytes(), recorded.as_bytes());
        assert_eq!(a.as_bytes(), b.as_bytes());
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn factcheck_records_preserve_order() {
        let script = ScriptedProvider::new(vec![ScriptRule::reply(
            ProviderId::FactCheckLookup,
            "search",
            &[],
            json!({"claims": [
                {"publisher": "Snopes", "rating": "False", "url": "https://snopes.example/1"},
                {"publisher": "PolitiFact", "rating": "Pants on Fire", "url": "https://politifact.example/2"},
                {"publisher": "Full Fact", "rating": "Incorrect", "url": "https://fullfact.example/3"}
            ]}),
        )]);
        let gw = live(ProviderId::FactCheckLookup, CountingProvider::new(script));
        let recs = lookup_factchecks(&gw, "claim").unwrap();
        let publishers: Vec<_> = recs.iter().map(|r| r.publisher.as_str()).collect();
        assert_eq!(publishers, ["Snopes", "PolitiFact", "Full Fact"]);
    }

    #[test]
    fn factcheck_absence_is_empty() {
        let script = ScriptedProvider::new(vec![ScriptRule::reply(
            ProviderId::FactCheckLookup,
            "search",
            &[],
            json!({"claims": []}),
        )]);
        let gw = live(ProviderId::FactCheckLookup, CountingProvider::new(script));
        assert!(lookup_factchecks(&gw, "nothing").unwrap().is_empty());
    }

    fn local_gateway(mode: GatewayMode) -> (Gateway, CountingProvider) {
        let p = CountingProvider::new(LocalDataProvider::bundled());
        let gw = Gateway::builder()
            .mode(mode)
            .provider(ProviderId::MediaBiasLookup, Arc::new(p.clone()))
            .provider(ProviderId::CountryFreedomLookup, Arc::new(p.clone()))
            .build();
        (gw, p)
    }

    #[test]
    fn media_bias_lookup_for_x() {
        let (gw, p) = local_gateway(GatewayMode::Record);
        let rec = lookup_media_bias(&gw, "x.com").unwrap().unwrap();
        assert_eq!(rec.source_type, "Social media platform");
        assert_eq!(rec.outlet_type, "User-generated content");
        assert_eq!(rec.coverage_scope, "Global");
        assert_eq!(lookup_media_bias(&gw, "unknown-outlet.example").unwrap(), None);
        lookup_media_bias(&gw, "x.com").unwrap();
        assert_eq!(p.calls(), 2);
    }

    #[test]
    fn country_freedom_lookup() {
        let (gw, _) = local_gateway(GatewayMode::Live);
        let us = lookup_country_freedom(&gw, "United States").unwrap();
        assert_eq!((us.score, us.status), (83, FreedomStatus::Free));
        assert_eq!(lookup_country_freedom(&gw, "us").unwrap().score, 83);
        assert_eq!(lookup_country_freedom(&gw, "Atlantis"), Err(GatewayError::UnknownCountry("Atlantis".into())));
    }

    #[test]
    fn freedom_banding() {
        assert_eq!(FreedomStatus::from_score(70), FreedomStatus::Free);
        assert_eq!(FreedomStatus::from_score(69), FreedomStatus::PartlyFree);
        assert_eq!(FreedomStatus::from_score(35), FreedomStatus::PartlyFree);
        assert_eq!(FreedomStatus::from_score(34), FreedomStatus::NotFree);
    }

    #[test]
    fn web_answer_selects_style_prompt() {
        let p = CountingProvider::new(|req: &ProviderRequest| {
            Ok(ProviderReply::with_citations(
                json!({"text": req.payload["system"].as_str().unwrap()}),
                vec!["https://a.example".into(), "https://b.example".into()],
            ))
        });
        let gw = live(ProviderId::WebAnswer, p);
        let prompts = PromptSet::default();
        let c = web_answer(&gw, &prompts, "q", AnswerStyle::Controversial).unwrap();
        assert!(c.text.starts_with("Find and summarize controversial perspectives"));
        assert_eq!(c.citations.len(), 2);
        let g = web_answer(&gw, &prompts, "q", AnswerStyle::General).unwrap();
        assert!(g.text.contains("answers user questions based on real-time web search"));
        let e = web_answer(&gw, &prompts, "q", AnswerStyle::Evidence).unwrap();
        assert!(e.text.contains("clearly state that no evidence could be discovered"));
    }
}
