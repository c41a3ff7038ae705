//! Scripted evaluations recorded into reproducible cache bundles.
//!
//! Recording uses a fixed clock, so the bundle bytes depend only on the
//! claims and the script.

use std::sync::Arc;

use chrono::{DateTime, Utc};

use crate::gateway::mock::{CountingProvider, FixtureProvider, ScriptedProvider};
use crate::gateway::{
    CacheStore, FixedClock, Gateway, GatewayError, GatewayMode, MemoryStore, ProviderError, ProviderRequest,
};
use crate::model::Claim;
use crate::Context;

use super::harness::{evaluate, Evaluation};

/// 2025-09-01T00:00:00Z, stamped on every recorded response.
pub fn fixture_epoch() -> DateTime<Utc> {
    DateTime::from_timestamp(1_756_684_800, 0).expect("valid epoch")
}

/// Record-mode context over `script`; the counter sees every upstream call.
pub fn recording_context(script: ScriptedProvider, store: Arc<dyn CacheStore>) -> (Context, CountingProvider) {
    let provider = CountingProvider::new(FixtureProvider::new(script));
    let gateway = Gateway::builder()
        .mode(GatewayMode::Record)
        .store(store)
        .clock(Arc::new(FixedClock(fixture_epoch())))
        .provider_for_all(Arc::new(provider.clone()))
        .deadline(None)
        .build();
    (Context::new(gateway), provider)
}

/// Replay-mode context. Every provider slot holds a refusing counter, so a
/// non-zero count means something escaped the cache.
pub fn replay_context(store: Arc<dyn CacheStore>) -> (Context, CountingProvider) {
    let refuse = |req: &ProviderRequest| -> Result<_, ProviderError> {
        Err(ProviderError::Unavailable(format!("replay must not reach {}", req.provider)))
    };
    let provider = CountingProvider::new(refuse);
    let gateway = Gateway::builder()
        .mode(GatewayMode::Replay)
        .store(store)
        .clock(Arc::new(FixedClock(fixture_epoch())))
        .provider_for_all(Arc::new(provider.clone()))
        .deadline(None)
        .build();
    (Context::new(gateway), provider)
}

/// Runs `claims` against the script and returns the evaluation together with
/// the serialized bundle.
pub fn record(claims: &[Claim], script: ScriptedProvider, jobs: usize) -> Result<(Evaluation, String), GatewayError> {
    let store = Arc::new(MemoryStore::default());
    let (ctx, _) = recording_context(script, store.clone());
    let evaluation = evaluate(&ctx, claims, jobs);
    Ok((evaluation, store.to_bundle_string()?))
}
