//! Secrets reach upstream but never land in session logs or cache files.

use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::HeaderMap;
use axum::routing::post;
use axum::{Json, Router};
use claimforge_core::gateway::http::EndpointConfig;
use claimforge_core::session::{Input, Mode};
use claimforge_core::{GatewayMode, StrategyKind};
use claimforge_service::{build_state_async, ServiceConfig};
use serde_json::{json, Value};
use tokio::net::TcpListener;

const API_KEY: &str = "sk-live-7f3a9c1e-SECRET";
const TOKEN: &str = "bearer-tok-SECRET-42";

/// An OpenAI-compatible endpoint that records the keys it was sent.
async fn fake_upstream() -> (String, Arc<Mutex<Vec<String>>>) {
    let seen = Arc::new(Mutex::new(Vec::new()));
    let app = Router::new()
        .route(
            "/v1/chat/completions",
            post(|State(seen): State<Arc<Mutex<Vec<String>>>>, headers: HeaderMap, Json(_): Json<Value>| async move {
                let auth = headers.get("authorization").and_then(|v| v.to_str().ok()).unwrap_or_default();
                seen.lock().unwrap().push(auth.to_string());
                Json(json!({"choices": [{"message": {"content": "Decision: Not Enough Evidence\nConclusion: unclear."}}]}))
            }),
        )
        .with_state(seen.clone());
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), seen)
}

fn files_under(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files_under(&path, out);
        } else {
            out.push(path);
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn no_credential_is_ever_written() {
    let (url, seen) = fake_upstream().await;
    let data = tempfile::tempdir().unwrap();
    let claims = data.path().join("claims.json");
    std::fs::write(
        &claims,
        r#"[{"id": "c1", "text": "The bridge opened in 1932.", "origin_url": "https://example.org/a", "label": "Supported"}]"#,
    )
    .unwrap();

    let endpoint = EndpointConfig { url, api_key: Some(API_KEY.into()), ..Default::default() };
    let mut config = ServiceConfig::default();
    config.server.token = Some(TOKEN.into());
    config.gateway.mode = GatewayMode::Record;
    config.gateway.cache_dir = Some(data.path().join("cache"));
    config.gateway.llm_chat = Some(endpoint.clone());
    config.gateway.web_answer = Some(endpoint.clone());
    config.gateway.fact_check_lookup = Some(endpoint);
    config.data.log_dir = data.path().join("sessions");
    config.data.claims = Some(claims);
    config.validate().unwrap();

    let state = build_state_async(&config).await.unwrap();
    let host = state.host.clone();
    let (id, _) = host.create("c1", Some(Mode::Exploratory)).await.unwrap();
    let steps = [
        Input::RequestStrategy { strategy: StrategyKind::Source },
        Input::UserMessage { text: "Seems fine to me.".into() },
        Input::AskQuestion { text: "When did construction start?".into() },
        Input::RequestStrategy { strategy: StrategyKind::Evidence },
    ];
    for input in steps {
        let seq = host.snapshot(&id).await.unwrap().last_seq();
        host.submit(&id, seq, input).await.unwrap();
        host.wait_idle(&id, Duration::from_secs(30)).await.unwrap();
    }
    let events = host.events(&id).unwrap();
    assert!(events.iter().any(|e| e.body.kind() == "strategy_completed"), "{events:?}");
    let (summary_id, _) = host.create("c1", Some(Mode::Summary)).await.unwrap();
    host.wait_idle(&summary_id, Duration::from_secs(30)).await.unwrap();

    let sent = seen.lock().unwrap().clone();
    assert!(!sent.is_empty(), "upstream was never called");
    assert!(sent.iter().all(|h| h == &format!("Bearer {API_KEY}")), "{sent:?}");

    let mut files = Vec::new();
    files_under(data.path(), &mut files);
    let logs = files.iter().filter(|p| p.extension().is_some_and(|e| e == "jsonl")).count();
    assert_eq!(logs, 2);
    assert!(files.len() > logs, "nothing was cached");
    for path in &files {
        let bytes = std::fs::read(path).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        for secret in [API_KEY, TOKEN, "SECRET"] {
            assert!(!text.contains(secret), "{} contains {secret:?}", path.display());
        }
    }
}
