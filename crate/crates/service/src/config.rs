//! Service configuration: a TOML or JSON file with `[server]`, `[gateway]`,
//! `[data]` and `[prompts]` sections, overridden by `CLAIMFORGE_*`
//! environment variables.

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use claimforge_core::eval::{load_dataset, DatasetError};
use claimforge_core::gateway::data::LocalDataProvider;
use claimforge_core::gateway::http::EndpointConfig;
use claimforge_core::gateway::mock::{FixtureProvider, ScriptedProvider};
use claimforge_core::gateway::{CacheStore, FileStore, MemoryStore, Provider, ProviderId};
use claimforge_core::model::LabelAdapter;
use claimforge_core::session::{Article, SessionConfig};
use claimforge_core::{Claim, Context, Gateway, GatewayMode, PromptSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for {var}: {message}")]
    Env { var: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot load claims: {0}")]
    Claims(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub server: ServerSection,
    pub gateway: GatewaySection,
    pub data: DataSection,
    pub prompts: PromptsSection,
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSection {
    pub bind: String,
    /// Static bearer token required on every request when set.
    #[serde(skip_serializing)]
    pub token: Option<String>,
    pub assistant_name: Option<String>,
}

impl Default for ServerSection {
    fn default() -> Self {
        Self { bind: "127.0.0.1:8080".into(), token: None, assistant_name: None }
    }
}

impl fmt::Debug for ServerSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ServerSection")
            .field("bind", &self.bind)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .field("assistant_name", &self.assistant_name)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewaySection {
    pub mode: GatewayMode,
    /// Cache directory; an in-memory cache when absent.
    pub cache_dir: Option<PathBuf>,
    pub deadline_secs: u64,
    /// Scripted replies for providers without an endpoint (demos and tests).
    pub script: Option<PathBuf>,
    pub llm_chat: Option<EndpointConfig>,
    pub web_answer: Option<EndpointConfig>,
    pub fact_check_lookup: Option<EndpointConfig>,
    pub media_bias_lookup: Option<EndpointConfig>,
    pub country_freedom_lookup: Option<EndpointConfig>,
}

impl Default for GatewaySection {
    fn default() -> Self {
        Self {
            mode: GatewayMode::Replay,
            cache_dir: None,
            deadline_secs: 30,
            script: None,
            llm_chat: None,
            web_answer: None,
            fact_check_lookup: None,
            media_bias_lookup: None,
            country_freedom_lookup: None,
        }
    }
}

impl GatewaySection {
    pub fn endpoint(&self, id: ProviderId) -> Option<&EndpointConfig> {
        match id {
            ProviderId::LlmChat => self.llm_chat.as_ref(),
            ProviderId::WebAnswer => self.web_answer.as_ref(),
            ProviderId::FactCheckLookup => self.fact_check_lookup.as_ref(),
            ProviderId::MediaBiasLookup => self.media_bias_lookup.as_ref(),
            ProviderId::CountryFreedomLookup => self.country_freedom_lookup.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Session logs, one JSON-lines file per session.
    pub log_dir: PathBuf,
    pub claims: Option<PathBuf>,
    pub adapter: LabelAdapter,
    /// JSON array of articles shown in control sessions.
    pub articles: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { log_dir: PathBuf::from("data/sessions"), claims: None, adapter: LabelAdapter::Averitec, articles: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptsSection {
    /// Template overrides; missing files keep the defaults.
    pub dir: Option<PathBuf>,
}

impl ServiceConfig {
    /// Reads `path` (JSON when the extension is `.json`, TOML otherwise),
    /// applies process environment overrides and validates the result.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let parse_err = |message: String| ConfigError::Parse { path: path.to_path_buf(), message };
        let mut config: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        if let Some(base) = path.parent() {
            config.resolve_relative(base);
        }
        Ok(config)
    }

    /// Paths in a config file are relative to the file.
    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            self.gateway.cache_dir.as_mut(),
            self.gateway.script.as_mut(),
            Some(&mut self.data.log_dir),
            self.data.claims.as_mut(),
            self.data.articles.as_mut(),
            self.prompts.dir.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Applies `CLAIMFORGE_<SECTION>_<KEY>` overrides. Unrelated variables are
    /// ignored; a recognised variable with a bad value is an error.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (var, value) in vars {
            let Some(key) = var.strip_prefix("CLAIMFORGE_") else { continue };
            let bad = |message: String| ConfigError::Env { var: var.clone(), message };
            match key {
                "SERVER_BIND" => self.server.bind = value,
                "SERVER_TOKEN" => self.server.token = Some(value).filter(|t| !t.is_empty()),
                "SERVER_ASSISTANT_NAME" => self.server.assistant_name = Some(value),
                "GATEWAY_MODE" => self.gateway.mode = value.parse().map_err(bad)?,
                "GATEWAY_CACHE_DIR" => self.gateway.cache_dir = Some(value.into()),
                "GATEWAY_DEADLINE_SECS" => {
                    self.gateway.deadline_secs = value.parse().map_err(|e| bad(format!("{e}")))?
                }
                "GATEWAY_SCRIPT" => self.gateway.script = Some(value.into()),
                "DATA_LOG_DIR" => self.data.log_dir = value.into(),
                "DATA_CLAIMS" => self.data.claims = Some(value.into()),
                "DATA_ADAPTER" => {
                    self.data.adapter = serde_json::from_value(serde_json::Value::String(value.to_ascii_lowercase()))
                        .map_err(|_| bad(format!("unknown adapter {value:?} (expected averitec|table5)")))?
                }
                "DATA_ARTICLES" => self.data.articles = Some(value.into()),
                "PROMPTS_DIR" => self.prompts.dir = Some(value.into()),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.bind_addr()?;
        if self.gateway.deadline_secs == 0 {
            return Err(ConfigError::Invalid("gateway.deadline_secs must be positive".into()));
        }
        if matches!(self.gateway.mode, GatewayMode::Replay | GatewayMode::ReplayThenLive)
            && self.gateway.cache_dir.is_none()
        {
            return Err(ConfigError::Invalid("replay modes need gateway.cache_dir".into()));
        }
        for id in ProviderId::ALL {
            if let Some(e) = self.gateway.endpoint(id) {
                url::Url::parse(&e.url)
                    .map_err(|err| ConfigError::Invalid(format!("gateway.{id}.url {:?}: {err}", e.url)))?;
            }
        }
        for (name, p) in [("data.claims", &self.data.claims), ("data.articles", &self.data.articles)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(ConfigError::Invalid(format!("{name} {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn bind_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.server.bind.parse().map_err(|e| ConfigError::Invalid(format!("server.bind {:?}: {e}", self.server.bind)))
    }

    /// Builds the strategy context. Each provider uses its endpoint when one
    /// is configured, the bundled local tables for the two lookup tables,
    /// and the script (or nothing) otherwise.
    pub fn build_context(&self) -> Result<Context, ConfigError> {
        let store: Arc<dyn CacheStore> = match &self.gateway.cache_dir {
            Some(dir) => Arc::new(FileStore::new(dir)),
            None => Arc::new(MemoryStore::default()),
        };
        self.build_context_with_store(store)
    }

    /// As [`Self::build_context`], with the cache store supplied by the caller.
    pub fn build_context_with_store(&self, store: Arc<dyn CacheStore>) -> Result<Context, ConfigError> {
        let prompts = match &self.prompts.dir {
            Some(dir) => PromptSet::load_dir(dir).map_err(|source| ConfigError::Read { path: dir.clone(), source })?,
            None => PromptSet::default(),
        };
        let script = match &self.gateway.script {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.clone(), source })?;
                Some(
                    ScriptedProvider::from_json(&text)
                        .map_err(|e| ConfigError::Parse { path: p.clone(), message: e.to_string() })?,
                )
            }
            None => None,
        };
        let deadline = Duration::from_secs(self.gateway.deadline_secs);
        let mut builder = Gateway::builder().mode(self.gateway.mode).store(store).deadline(Some(deadline));
        for id in ProviderId::ALL {
            let provider: Option<Arc<dyn Provider>> = match (self.gateway.endpoint(id), &script, id) {
                (Some(e), _, _) => {
                    Some(e.build(deadline).map_err(|err| ConfigError::Invalid(format!("gateway.{id}: {err}")))?.into())
                }
                (None, Some(s), _) => Some(Arc::new(FixtureProvider::new(s.clone()))),
                (None, None, ProviderId::MediaBiasLookup | ProviderId::CountryFreedomLookup) => {
                    Some(Arc::new(LocalDataProvider::bundled()))
                }
                (None, None, _) => None,
            };
            if let Some(p) = provider {
                builder = builder.provider(id, p);
            }
        }
        Ok(Context::new(builder.build()).with_prompts(prompts))
    }

    pub fn load_claims(&self) -> Result<Vec<Claim>, ConfigError> {
        match &self.data.claims {
            Some(p) => Ok(load_dataset(p, self.data.adapter)?),
            None => Ok(Vec::new()),
        }
    }

    pub fn session_config(&self, prompts: &PromptSet) -> Result<SessionConfig, ConfigError> {
        let mut config = SessionConfig::with_prompts(prompts);
        if let Some(name) = &self.server.assistant_name {
            config.assistant_name = name.clone();
        }
        if let Some(p) = &self.data.articles {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.clone(), source })?;
            config.articles = serde_json::from_str::<Vec<Article>>(&text)
                .map_err(|e| ConfigError::Parse { path: p.clone(), message: e.to_string() })?;
        }
        Ok(config)
    }
}
