//! Deterministic providers for tests and fixtures.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::data::LocalDataProvider;
use super::{Provider, ProviderError, ProviderId, ProviderReply, ProviderRequest};

/// Wraps a provider and counts upstream calls. Clones share the counter.
#[derive(Clone)]
pub struct CountingProvider {
    inner: Arc<dyn Provider>,
    calls: Arc<AtomicUsize>,
}

impl CountingProvider {
    pub fn new(inner: impl Provider + 'static) -> Self {
        Self::wrap(Arc::new(inner))
    }

    pub fn wrap(inner: Arc<dyn Provider>) -> Self {
        Self { inner, calls: Arc::new(AtomicUsize::new(0)) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::SeqCst);
    }
}

impl Provider for CountingProvider {
    fn call(&self, request: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.call(request)
    }
}

/// Every string value in a payload, joined by newlines, unescaped.
pub fn payload_text(value: &Value) -> String {
    fn walk(v: &Value, out: &mut Vec<String>) {
        match v {
            Value::String(s) => out.push(s.clone()),
            Value::Array(items) => items.iter().for_each(|i| walk(i, out)),
            Value::Object(map) => map.values().for_each(|i| walk(i, out)),
            _ => {}
        }
    }
    let mut parts = Vec::new();
    walk(value, &mut parts);
    parts.join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedFailure {
    Timeout,
    Transport,
    Malformed,
    Unavailable,
}

/// One scripted response. A rule matches when the provider and operation
/// agree (if given) and every `contains` needle occurs in the payload text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<ProviderId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    #[serde(default)]
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<ScriptedFailure>,
}

impl ScriptRule {
    pub fn reply(provider: ProviderId, operation: &str, contains: &[&str], payload: Value) -> Self {
        Self {
            provider: Some(provider),
            operation: Some(operation.to_string()),
            contains: contains.iter().map(|s| s.to_string()).collect(),
            payload,
            citations: Vec::new(),
            fail: None,
        }
    }

    pub fn with_citations(mut self, citations: &[&str]) -> Self {
        self.citations = citations.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn failing(provider: ProviderId, operation: &str, contains: &[&str], fail: ScriptedFailure) -> Self {
        Self { fail: Some(fail), ..Self::reply(provider, operation, contains, Value::Null) }
    }

    fn matches(&self, req: &ProviderRequest, text: &str) -> bool {
        self.provider.is_none_or(|p| p == req.provider)
            && self.operation.as_deref().is_none_or(|op| op == req.operation)
            && self.contains.iter().all(|needle| text.contains(needle.as_str()))
    }
}

/// First-match rule table. Unmatched requests fail as unavailable.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScriptedProvider {
    rules: Vec<ScriptRule>,
}

impl ScriptedProvider {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        Self { rules }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn push(&mut self, rule: ScriptRule) {
        self.rules.push(rule);
    }

    pub fn rules(&self) -> &[ScriptRule] {
        &self.rules
    }
}

impl Provider for ScriptedProvider {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        let text = payload_text(&req.payload);
        let rule = self.rules.iter().find(|r| r.matches(req, &text)).ok_or_else(|| {
            ProviderError::Unavailable(format!("no scripted rule for {} {}", req.provider, req.operation))
        })?;
        match rule.fail {
            Some(ScriptedFailure::Timeout) => Err(ProviderError::Timeout),
            Some(ScriptedFailure::Transport) => Err(ProviderError::Transport("scripted transport failure".into())),
            Some(ScriptedFailure::Malformed) => Err(ProviderError::Malformed("scripted malformed payload".into())),
            Some(ScriptedFailure::Unavailable) => Err(ProviderError::Unavailable("scripted outage".into())),
            None => Ok(ProviderReply::with_citations(rule.payload.clone(), rule.citations.clone())),
        }
    }
}

/// A script for the network services with the reference tables served
/// locally, which is how the bundled fixtures are recorded.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    pub script: ScriptedProvider,
    pub local: LocalDataProvider,
}

impl FixtureProvider {
    pub fn new(script: ScriptedProvider) -> Self {
        Self { script, local: LocalDataProvider::bundled() }
    }
}

impl Provider for FixtureProvider {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        match req.provider {
            ProviderId::MediaBiasLookup | ProviderId::CountryFreedomLookup => self.local.call(req),
            _ => self.script.call(req),
        }
    }
}
