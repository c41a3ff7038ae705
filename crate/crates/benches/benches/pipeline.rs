use std::hint::black_box;
use std::path::PathBuf;
use std::sync::Arc;

use claimforge_core::eval::fixture::replay_context;
use claimforge_core::eval::{confusion_matrix, evaluate, f1_scores, load_dataset};
use claimforge_core::gateway::{cache_key, CacheStore, MemoryStore, ProviderId, ProviderRequest};
use claimforge_core::model::LabelAdapter;
use claimforge_core::synth::aggregate_qa_labels;
use claimforge_core::{Label, QALabel};
use criterion::{criterion_group, criterion_main, Criterion};
use serde_json::json;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/table5")
}

fn aggregation(c: &mut Criterion) {
    let vectors: Vec<Vec<QALabel>> =
        (0..81u32).map(|n| (0..4).map(|i| QALabel::ALL[(n / 3u32.pow(i) % 3) as usize]).collect()).collect();
    c.bench_function("aggregate 81 label vectors", |b| {
        b.iter(|| vectors.iter().map(|v| aggregate_qa_labels(black_box(v)).unwrap()).collect::<Vec<_>>())
    });
}

fn metrics(c: &mut Criterion) {
    let pairs: Vec<(Label, Label)> = (0..500).map(|i| (Label::ALL[i % 4], Label::ALL[(i * 7 + i / 3) % 4])).collect();
    c.bench_function("confusion + f1 over 500 pairs", |b| {
        b.iter(|| f1_scores(&confusion_matrix(black_box(&pairs))).macro_f1)
    });
}

fn cache_keys(c: &mut Criterion) {
    let req = ProviderRequest::new(
        ProviderId::LlmChat,
        "chat",
        json!({"system": "", "user": "x".repeat(4000), "temperature": 0.0, "max_tokens": 512}),
    );
    c.bench_function("cache key of a 4k prompt", |b| b.iter(|| cache_key(black_box(&req))));
}

fn replay(c: &mut Criterion) {
    let claims = load_dataset(&fixtures().join("claims.json"), LabelAdapter::Table5).unwrap();
    let store: Arc<dyn CacheStore> = Arc::new(MemoryStore::load_bundle(fixtures().join("cache.json")).unwrap());
    let (ctx, _) = replay_context(store);
    let mut group = c.benchmark_group("replay");
    group.sample_size(20);
    for jobs in [1, 4] {
        group.bench_function(format!("ten claims, {jobs} jobs"), |b| {
            b.iter(|| evaluate(&ctx, black_box(&claims), jobs).report.macro_f1)
        });
    }
    group.finish();
}

criterion_group!(benches, aggregation, metrics, cache_keys, replay);
criterion_main!(benches);
