//! Single chokepoint for every external service call.
//!
//! Requests are content-addressed by the SHA-256 of their canonical JSON
//! serialization. Depending on [`GatewayMode`] a response is served from the
//! cache store, fetched from the live provider, or both.

pub mod canonical;
pub mod data;
#[cfg(feature = "http")]
pub mod http;
pub mod mock;
pub mod services;
pub mod store;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tracing::{debug, warn};

pub use services::{
    fetch_article, llm_complete, lookup_country_freedom, lookup_factchecks, lookup_media_bias, web_answer, AnswerStyle,
    CountryFreedom, FactCheckRecord, FreedomStatus, GenerationParams, MediaBiasRecord, WebAnswer,
};
pub use store::{CacheStore, FileStore, MemoryStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderId {
    LlmChat,
    WebAnswer,
    FactCheckLookup,
    MediaBiasLookup,
    CountryFreedomLookup,
}

impl ProviderId {
    pub const ALL: [ProviderId; 5] = [
        ProviderId::LlmChat,
        ProviderId::WebAnswer,
        ProviderId::FactCheckLookup,
        ProviderId::MediaBiasLookup,
        ProviderId::CountryFreedomLookup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProviderId::LlmChat => "llm_chat",
            ProviderId::WebAnswer => "web_answer",
            ProviderId::FactCheckLookup => "fact_check_lookup",
            ProviderId::MediaBiasLookup => "media_bias_lookup",
            ProviderId::CountryFreedomLookup => "country_freedom_lookup",
        }
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatewayMode {
    Live,
    Record,
    #[default]
    Replay,
    ReplayThenLive,
}

impl std::str::FromStr for GatewayMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "live" => Ok(GatewayMode::Live),
            "record" => Ok(GatewayMode::Record),
            "replay" => Ok(GatewayMode::Replay),
            "replay-then-live" => Ok(GatewayMode::ReplayThenLive),
            other => Err(format!("unknown gateway mode {other:?} (expected live|record|replay|replay-then-live)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub provider: ProviderId,
    pub operation: String,
    pub payload: Value,
}

impl ProviderRequest {
    /// Builds a request; string content is NFC-normalized up front so the
    /// stored request matches what was hashed.
    pub fn new(provider: ProviderId, operation: impl Into<String>, payload: Value) -> Self {
        Self { provider, operation: operation.into(), payload: canonical::normalize(&payload) }
    }

    pub fn canonical_string(&self) -> String {
        canonical::canonical_string(&json!({
            "provider": self.provider.as_str(),
            "operation": self.operation,
            "payload": self.payload,
        }))
    }

    pub fn cache_key(&self) -> String {
        cache_key(self)
    }
}

/// Hex SHA-256 of the request's canonical serialization.
pub fn cache_key(req: &ProviderRequest) -> String {
    canonical::sha256_hex(req.canonical_string().as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub payload: Value,
    #[serde(default)]
    pub citations: Vec<String>,
    pub fetched_at: DateTime<Utc>,
    #[serde(default)]
    pub from_cache: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub request: ProviderRequest,
    pub response: ProviderResponse,
    pub stored_at: DateTime<Utc>,
}

/// What a provider hands back before the gateway stamps it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProviderReply {
    pub payload: Value,
    #[serde(default)]
    pub citations: Vec<String>,
}

impl ProviderReply {
    pub fn new(payload: Value) -> Self {
        Self { payload, citations: Vec::new() }
    }

    pub fn with_citations(payload: Value, citations: Vec<String>) -> Self {
        Self { payload, citations }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("upstream returned status {code}: {message}")]
    Status { code: u16, message: String },
    #[error("deadline exceeded")]
    Timeout,
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("unavailable: {0}")]
    Unavailable(String),
}

impl ProviderError {
    /// Transport failures and 5xx responses get one retry; 4xx never do.
    fn retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { code, .. } => *code >= 500,
            _ => false,
        }
    }
}

pub trait Provider: Send + Sync {
    fn call(&self, request: &ProviderRequest) -> Result<ProviderReply, ProviderError>;
}

impl<F> Provider for F
where
    F: Fn(&ProviderRequest) -> Result<ProviderReply, ProviderError> + Send + Sync,
{
    fn call(&self, request: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        self(request)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("cache miss for {provider} request {key}")]
    CacheMiss { provider: ProviderId, key: String },
    #[error("provider {provider} unavailable: {cause}")]
    ProviderUnavailable { provider: ProviderId, cause: String },
    #[error("provider {provider} exceeded the {after:?} deadline")]
    Timeout { provider: ProviderId, after: Duration },
    #[error("malformed payload from {provider}: {detail}")]
    MalformedProviderPayload { provider: ProviderId, detail: String },
    #[error("prompt needs ~{estimated} tokens, budget is {budget}")]
    ContextBudgetExceeded { estimated: usize, budget: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown country {0:?}")]
    UnknownCountry(String),
    #[error("cache store error: {0}")]
    Store(String),
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always returns the same instant. Used to make recorded caches reproducible.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(30);

pub struct Gateway {
    mode: GatewayMode,
    store: Arc<dyn CacheStore>,
    providers: HashMap<ProviderId, Arc<dyn Provider>>,
    clock: Arc<dyn Clock>,
    deadline: Option<Duration>,
    // keys written by this gateway instance in Record mode
    recorded: Mutex<HashSet<String>>,
    last_fetched: Mutex<HashMap<ProviderId, DateTime<Utc>>>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("mode", &self.mode)
            .field("providers", &self.providers.keys().collect::<Vec<_>>())
            .field("deadline", &self.deadline)
            .finish()
    }
}

pub struct GatewayBuilder {
    mode: GatewayMode,
    store: Option<Arc<dyn CacheStore>>,
    providers: HashMap<ProviderId, Arc<dyn Provider>>,
    clock: Arc<dyn Clock>,
    deadline: Option<Duration>,
}

impl GatewayBuilder {
    pub fn mode(mut self, mode: GatewayMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn store(mut self, store: Arc<dyn CacheStore>) -> Self {
        self.store = Some(store);
        self
    }

    pub fn provider(mut self, id: ProviderId, provider: Arc<dyn Provider>) -> Self {
        self.providers.insert(id, provider);
        self
    }

    /// Registers one provider for every service.
    pub fn provider_for_all(mut self, provider: Arc<dyn Provider>) -> Self {
        for id in ProviderId::ALL {
            self.providers.insert(id, Arc::clone(&provider));
        }
        self
    }

    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// `None` disables the per-request deadline.
    pub fn deadline(mut self, deadline: Option<Duration>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn build(self) -> Gateway {
        Gateway {
            mode: self.mode,
            store: self.store.unwrap_or_else(|| Arc::new(MemoryStore::default())),
            providers: self.providers,
            clock: self.clock,
            deadline: self.deadline,
            recorded: Mutex::new(HashSet::new()),
            last_fetched: Mutex::new(HashMap::new()),
        }
    }
}

impl Gateway {
    pub fn builder() -> GatewayBuilder {
        GatewayBuilder {
            mode: GatewayMode::Replay,
            store: None,
            providers: HashMap::new(),
            clock: Arc::new(SystemClock),
            deadline: Some(DEFAULT_DEADLINE),
        }
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    pub fn store(&self) -> &Arc<dyn CacheStore> {
        &self.store
    }

    /// Executes with the gateway's configured mode.
    pub fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, GatewayError> {
        self.execute(req, self.mode)
    }

    pub fn execute(&self, req: &ProviderRequest, mode: GatewayMode) -> Result<ProviderResponse, GatewayError> {
        let key = cache_key(req);
        match mode {
            GatewayMode::Replay => {
                self.cached(req.provider, &key)?.ok_or(GatewayError::CacheMiss { provider: req.provider, key })
            }
            GatewayMode::Live => self.call_live(req),
            GatewayMode::Record => {
                let seen = self.recorded.lock().expect("recorded set poisoned").contains(&key);
                if seen {
                    if let Some(hit) = self.cached(req.provider, &key)? {
                        return Ok(hit);
                    }
                }
                self.record(req, key)
            }
            GatewayMode::ReplayThenLive => match self.cached(req.provider, &key)? {
                Some(hit) => Ok(hit),
                None => self.record(req, key),
            },
        }
    }

    fn cached(&self, provider: ProviderId, key: &str) -> Result<Option<ProviderResponse>, GatewayError> {
        let entry = self.store.get(provider, key)?;
        Ok(entry.map(|e| {
            debug!(%provider, key, "cache hit");
            ProviderResponse { from_cache: true, ..e.response }
        }))
    }

    fn record(&self, req: &ProviderRequest, key: String) -> Result<ProviderResponse, GatewayError> {
        let response = self.call_live(req)?;
        let entry = CacheEntry {
            key: key.clone(),
            request: req.clone(),
            response: response.clone(),
            stored_at: self.clock.now(),
        };
        self.store.put(&entry)?;
        self.recorded.lock().expect("recorded set poisoned").insert(key);
        Ok(response)
    }

    fn call_live(&self, req: &ProviderRequest) -> Result<ProviderResponse, GatewayError> {
        let provider = self.providers.get(&req.provider).ok_or_else(|| GatewayError::ProviderUnavailable {
            provider: req.provider,
            cause: "no live provider configured".into(),
        })?;
        let reply = match self.invoke(provider, req) {
            Err(e) if e.retryable() => {
                warn!(provider = %req.provider, error = %e, "retrying provider call");
                self.invoke(provider, req)
            }
            other => other,
        }
        .map_err(|e| self.map_error(req.provider, e))?;
        Ok(ProviderResponse {
            payload: reply.payload,
            citations: reply.citations,
            fetched_at: self.stamp(req.provider),
            from_cache: false,
        })
    }

    fn invoke(&self, provider: &Arc<dyn Provider>, req: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        let Some(deadline) = self.deadline else {
            return provider.call(req);
        };
        let (tx, rx) = mpsc::channel();
        let provider = Arc::clone(provider);
        let req = req.clone();
        thread::spawn(move || {
            let _ = tx.send(provider.call(&req));
        });
        match rx.recv_timeout(deadline) {
            Ok(result) => result,
            Err(mpsc::RecvTimeoutError::Timeout) => Err(ProviderError::Timeout),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(ProviderError::Transport("provider call aborted".into())),
        }
    }

    fn map_error(&self, provider: ProviderId, err: ProviderError) -> GatewayError {
        match err {
            ProviderError::Timeout => GatewayError::Timeout { provider, after: self.deadline.unwrap_or_default() },
            ProviderError::Malformed(detail) => GatewayError::MalformedProviderPayload { provider, detail },
            other => GatewayError::ProviderUnavailable { provider, cause: other.to_string() },
        }
    }

    fn stamp(&self, provider: ProviderId) -> DateTime<Utc> {
        let mut last = self.last_fetched.lock().expect("clock map poisoned");
        let now = self.clock.now();
        let stamped = match last.get(&provider) {
            Some(prev) if *prev > now => *prev,
            _ => now,
        };
        last.insert(provider, stamped);
        stamped
    }
}
