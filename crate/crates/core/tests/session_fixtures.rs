//! Scripted Summary and Exploratory sessions replayed from bundled caches.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use claimforge_core::eval::fixture::{fixture_epoch, recording_context, replay_context};
use claimforge_core::eval::load_dataset;
use claimforge_core::gateway::mock::ScriptedProvider;
use claimforge_core::gateway::{CacheStore, FixedClock, MemoryStore};
use claimforge_core::model::LabelAdapter;
use claimforge_core::session::runner::{play, SessionScript};
use claimforge_core::session::transcript::{export_jsonl, import_jsonl};
use claimforge_core::session::{replay, EventBody, InteractionEvent, Session};
use claimforge_core::{Claim, Context, StrategyKind};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    #[serde(flatten)]
    script: SessionScript,
    claim_id: String,
    expected_messages: Vec<String>,
    #[serde(default)]
    source_card_lines: Vec<String>,
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> Fixture {
    serde_json::from_str(&fs::read_to_string(root().join("sessions").join(name)).unwrap()).unwrap()
}

fn claim(id: &str) -> Claim {
    let claims = load_dataset(&root().join("table5/claims.json"), LabelAdapter::Table5).unwrap();
    claims.into_iter().find(|c| c.id == id).unwrap()
}

fn combined_script() -> ScriptedProvider {
    let mut script =
        ScriptedProvider::from_json(&fs::read_to_string(root().join("sessions/script.json")).unwrap()).unwrap();
    let table5 = ScriptedProvider::from_json(&fs::read_to_string(root().join("table5/script.json")).unwrap()).unwrap();
    for rule in table5.rules() {
        script.push(rule.clone());
    }
    script
}

fn run(ctx: &Context, f: &Fixture) -> (Session, Vec<InteractionEvent>) {
    play(ctx, &claim(&f.claim_id), &f.script, &FixedClock(fixture_epoch())).unwrap()
}

fn replayed(name: &str) -> (Fixture, Session, Vec<InteractionEvent>) {
    let store: Arc<dyn CacheStore> = Arc::new(MemoryStore::load_bundle(root().join("sessions/cache.json")).unwrap());
    let (ctx, upstream) = replay_context(store);
    let f = fixture(name);
    let (session, events) = run(&ctx, &f);
    assert_eq!(upstream.calls(), 0);
    (f, session, events)
}

fn assert_in_order(messages: &[&str], expected: &[String]) {
    let mut at = 0;
    for want in expected {
        let found = messages[at..].iter().position(|m| m.contains(want.as_str()));
        let Some(offset) = found else {
            panic!("{want:?} not found after message {at}; messages: {messages:#?}");
        };
        at += offset + 1;
    }
}

/// Set CLAIMFORGE_REGEN_FIXTURES=1 to rewrite the cache and event logs.
#[test]
fn recorded_sessions_are_reproducible() {
    let store = Arc::new(MemoryStore::default());
    let (ctx, _) = recording_context(combined_script(), store.clone());
    let regen = std::env::var_os("CLAIMFORGE_REGEN_FIXTURES").is_some();
    for name in ["table6", "table7"] {
        let f = fixture(&format!("{name}.json"));
        let (_, events) = run(&ctx, &f);
        let log = export_jsonl(&f.script.session_id, &events);
        let path = root().join(format!("sessions/{name}.events.jsonl"));
        if regen {
            fs::write(&path, &log).unwrap();
        }
        assert!(fs::read_to_string(&path).unwrap() == log, "{} differs", path.display());
    }
    let bundle = store.to_bundle_string().unwrap();
    let path = root().join("sessions/cache.json");
    if regen {
        fs::write(&path, &bundle).unwrap();
    }
    assert!(fs::read_to_string(&path).unwrap() == bundle, "{} differs", path.display());
}

#[test]
fn shipped_event_logs_replay_to_the_played_session() {
    for name in ["table6", "table7"] {
        let (f, session, events) = replayed(&format!("{name}.json"));
        let text = fs::read_to_string(root().join(format!("sessions/{name}.events.jsonl"))).unwrap();
        let (header, shipped) = import_jsonl(&text).unwrap();
        assert_eq!(header.session_id, f.script.session_id);
        assert_eq!(shipped, events);
        assert_eq!(replay(&header.session_id, &shipped), Some(session.clone()));
        assert!(session.closed);
    }
}

#[test]
fn summary_session_messages_in_order() {
    let (f, session, _) = replayed("table6.json");
    assert_in_order(&session.system_messages(), &f.expected_messages);
    let verdict = session.final_user_verdict.as_ref().unwrap();
    assert_eq!(verdict.label, claimforge_core::Label::Supported);
    assert_eq!(verdict.reasoning, "Snopes—although not always correct, often is.");
}

#[test]
fn exploratory_session_messages_in_order() {
    let (f, session, events) = replayed("table7.json");
    assert_in_order(&session.system_messages(), &f.expected_messages);
    let source_done = events
        .iter()
        .position(|e| matches!(e.body, EventBody::StrategyCompleted { strategy: StrategyKind::Source, .. }))
        .unwrap();
    let first_provisional =
        events.iter().position(|e| matches!(e.body, EventBody::ProvisionalSubmitted { .. })).unwrap();
    assert!(source_done < first_provisional);
    let EventBody::StrategyCompleted { text: card, .. } = &events[source_done].body else { unreachable!() };
    let lines: Vec<&str> = card.lines().collect();
    assert_eq!(lines.len(), 11);
    let mut at = 0;
    for want in &f.source_card_lines {
        let offset = lines[at..].iter().position(|l| l == want).unwrap_or_else(|| panic!("{want:?} in {lines:#?}"));
        at += offset + 1;
    }
    assert_eq!(session.provisional.len(), 4);
}
