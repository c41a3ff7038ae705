//! Fixture loading shared by the service tests.
#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use claimforge_core::eval::fixture::{fixture_epoch, replay_context};
use claimforge_core::eval::load_dataset;
use claimforge_core::gateway::mock::ScriptedProvider;
use claimforge_core::gateway::{CacheStore, FixedClock, MemoryStore};
use claimforge_core::model::LabelAdapter;
use claimforge_core::session::transcript::import_jsonl;
use claimforge_core::session::{EventBody, Input, InteractionEvent, Mode, SessionConfig};
use claimforge_core::{Claim, Context};
use claimforge_service::{EventStore, SessionHost};
use serde::Deserialize;

pub const IDLE: Duration = Duration::from_secs(20);

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[derive(Debug, Clone, Deserialize)]
pub struct SessionFixture {
    pub session_id: String,
    pub mode: Mode,
    pub claim_id: String,
    pub inputs: Vec<Input>,
}

pub fn session_fixture(name: &str) -> SessionFixture {
    serde_json::from_str(&fs::read_to_string(root().join("sessions").join(format!("{name}.json"))).unwrap()).unwrap()
}

pub fn claims() -> Vec<Claim> {
    load_dataset(&root().join("table5/claims.json"), LabelAdapter::Table5).unwrap()
}

pub fn combined_script() -> ScriptedProvider {
    let mut script =
        ScriptedProvider::from_json(&fs::read_to_string(root().join("sessions/script.json")).unwrap()).unwrap();
    let table5 = ScriptedProvider::from_json(&fs::read_to_string(root().join("table5/script.json")).unwrap()).unwrap();
    for rule in table5.rules() {
        script.push(rule.clone());
    }
    script
}

/// Replay-only context over the recorded session cache.
pub fn replay_ctx() -> Context {
    let store: Arc<dyn CacheStore> = Arc::new(MemoryStore::load_bundle(root().join("sessions/cache.json")).unwrap());
    replay_context(store).0
}

pub fn host_with(ctx: Context, store: Arc<dyn EventStore>) -> Arc<SessionHost> {
    let config = SessionConfig::with_prompts(&ctx.prompts);
    SessionHost::new(Arc::new(ctx), claims(), store, config, Arc::new(FixedClock(fixture_epoch())))
}

/// The shipped event log, with the gold label removed as the host does.
pub fn shipped_events(name: &str) -> Vec<InteractionEvent> {
    let text = fs::read_to_string(root().join("sessions").join(format!("{name}.events.jsonl"))).unwrap();
    let (_, mut events) = import_jsonl(&text).unwrap();
    if let EventBody::SessionCreated { claim, .. } = &mut events[0].body {
        claim.gold_label = None;
    }
    events
}

/// Feeds every input in order, waiting for the session to go idle after
/// each one.
pub async fn drive(host: &Arc<SessionHost>, id: &str, inputs: &[Input]) {
    for (i, input) in inputs.iter().enumerate() {
        let seq = host.snapshot(id).await.unwrap().last_seq();
        host.submit(id, seq, input.clone()).await.unwrap_or_else(|e| panic!("input {i} rejected: {e}"));
        let s = host.wait_idle(id, IDLE).await.unwrap();
        assert!(s.outstanding.is_none(), "input {i} did not settle");
    }
}

pub async fn play(host: &Arc<SessionHost>, name: &str, id: &str) {
    let f = session_fixture(name);
    host.create_with_id(id, &f.claim_id, f.mode).await.unwrap();
    drive(host, id, &f.inputs).await;
}
