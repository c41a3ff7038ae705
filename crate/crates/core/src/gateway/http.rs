//! Live HTTP providers.
//!
//! Two wire shapes are supported: OpenAI-compatible chat completions (used for
//! both LLM inference and search-grounded answering; citations are read from a
//! top-level `citations` array when present) and a generic JSON relay that
//! forwards the whole request and expects a [`ProviderReply`] back.
//! Credentials live only inside the provider and are never part of a request.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Provider, ProviderError, ProviderId, ProviderReply, ProviderRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    #[default]
    OpenaiChat,
    Relay,
}

/// One `[gateway.<provider>]` section of a config file.
#[derive(Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    #[serde(default)]
    pub kind: EndpointKind,
    pub url: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    /// Name of an environment variable holding the key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
}

impl fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("kind", &self.kind)
            .field("url", &self.url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("api_key_env", &self.api_key_env)
            .field("model", &self.model)
            .finish()
    }
}

impl EndpointConfig {
    pub fn resolved_key(&self) -> Option<String> {
        self.api_key
            .clone()
            .or_else(|| self.api_key_env.as_ref().and_then(|var| std::env::var(var).ok()))
            .filter(|k| !k.is_empty())
    }

    pub fn build(&self, timeout: Duration) -> Result<Box<dyn Provider>, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let api_key = self.resolved_key();
        Ok(match self.kind {
            EndpointKind::OpenaiChat => Box::new(OpenAiChatProvider {
                client,
                base_url: self.url.trim_end_matches('/').to_string(),
                api_key,
                model: self.model.clone().unwrap_or_else(|| "gpt-oss-120b".into()),
            }),
            EndpointKind::Relay => Box::new(RelayProvider { client, url: self.url.clone(), api_key }),
        })
    }
}

fn transport(e: reqwest::Error) -> ProviderError {
    if e.is_timeout() {
        ProviderError::Timeout
    } else {
        ProviderError::Transport(e.to_string())
    }
}

fn send(req: reqwest::blocking::RequestBuilder, api_key: Option<&str>) -> Result<Value, ProviderError> {
    let req = match api_key {
        Some(k) => req.bearer_auth(k),
        None => req,
    };
    let resp = req.send().map_err(transport)?;
    let status = resp.status();
    if !status.is_success() {
        let message = resp.text().unwrap_or_default().chars().take(512).collect();
        return Err(ProviderError::Status { code: status.as_u16(), message });
    }
    resp.json::<Value>().map_err(|e| ProviderError::Malformed(e.to_string()))
}

pub struct OpenAiChatProvider {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
    model: String,
}

impl OpenAiChatProvider {
    fn body(&self, req: &ProviderRequest) -> Value {
        let p = &req.payload;
        let str_of = |k: &str| p.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
        let (system, user) = match req.provider {
            ProviderId::WebAnswer => (str_of("system"), str_of("query")),
            _ => (str_of("system"), str_of("user")),
        };
        let mut messages = Vec::new();
        if !system.is_empty() {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": user}));
        let mut body = json!({
            "model": p.get("model").and_then(Value::as_str).unwrap_or(&self.model),
            "messages": messages,
        });
        if let Some(t) = p.get("temperature") {
            body["temperature"] = t.clone();
        }
        if let Some(m) = p.get("max_output_tokens") {
            body["max_tokens"] = m.clone();
        }
        body
    }
}

impl Provider for OpenAiChatProvider {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        let url = format!("{}/chat/completions", self.base_url);
        let resp = send(self.client.post(url).json(&self.body(req)), self.api_key.as_deref())?;
        let text = resp
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::Malformed("no choices[0].message.content".into()))?;
        let mut citations: Vec<String> = resp
            .get("citations")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default();
        if citations.is_empty() {
            if let Some(results) = resp.get("search_results").and_then(Value::as_array) {
                citations =
                    results.iter().filter_map(|r| r.get("url").and_then(Value::as_str)).map(str::to_string).collect();
            }
        }
        Ok(ProviderReply::with_citations(json!({ "text": text }), citations))
    }
}

pub struct RelayProvider {
    client: reqwest::blocking::Client,
    url: String,
    api_key: Option<String>,
}

impl Provider for RelayProvider {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        let body = json!({
            "provider": req.provider.as_str(),
            "operation": req.operation,
            "payload": req.payload,
        });
        let resp = send(self.client.post(&self.url).json(&body), self.api_key.as_deref())?;
        serde_json::from_value(resp).map_err(|e| ProviderError::Malformed(e.to_string()))
    }
}
