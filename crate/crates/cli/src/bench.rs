//! Offline benchmark runs and scoring of pre-computed predictions.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use claimforge_core::eval::{evaluate, load_dataset, ClaimOutcome, EvalReport, Evaluation};
use claimforge_core::gateway::{CacheStore, FileStore, MemoryStore};
use claimforge_core::model::{parse_label, LabelAdapter};
use claimforge_core::{GatewayError, GatewayMode};
use claimforge_service::ServiceConfig;
use serde::Deserialize;
use thiserror::Error;
use tracing::info;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Dataset(#[from] claimforge_core::eval::DatasetError),
    #[error(transparent)]
    Config(#[from] claimforge_service::ConfigError),
    #[error("cache {path}: {source}")]
    Cache { path: PathBuf, source: GatewayError },
    #[error("{mode:?} mode needs --cache-dir")]
    CacheRequired { mode: GatewayMode },
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("pairs line {line}: {reason}")]
    Pairs { line: usize, reason: String },
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub dataset: PathBuf,
    pub mode: GatewayMode,
    /// A directory of per-entry cache files, or a single `.json` bundle.
    pub cache: Option<PathBuf>,
    pub out: PathBuf,
    pub adapter: LabelAdapter,
    pub jobs: usize,
    pub dump_artifacts: bool,
    /// Service-style config supplying provider endpoints and prompts.
    pub config: Option<PathBuf>,
    /// Scripted responses used for every provider without an endpoint.
    pub script: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub evaluation: Evaluation,
    pub report_json: PathBuf,
    pub report_markdown: PathBuf,
}

impl RunSummary {
    /// Claims that failed, scored or not.
    pub fn failed(&self) -> usize {
        self.evaluation.runs.iter().filter(|(_, r)| r.is_err()).count()
    }
}

enum Cache {
    Bundle(PathBuf, Arc<MemoryStore>),
    Dir(Arc<FileStore>),
    None(Arc<MemoryStore>),
}

impl Cache {
    fn open(path: Option<&Path>, mode: GatewayMode) -> Result<Self, BenchError> {
        let Some(path) = path else {
            return match mode {
                GatewayMode::Replay | GatewayMode::ReplayThenLive => Err(BenchError::CacheRequired { mode }),
                _ => Ok(Cache::None(Arc::new(MemoryStore::default()))),
            };
        };
        let is_bundle = path.is_file() || path.extension().is_some_and(|e| e == "json");
        if !is_bundle {
            return Ok(Cache::Dir(Arc::new(FileStore::new(path))));
        }
        let store = if path.exists() {
            MemoryStore::load_bundle(path).map_err(|source| BenchError::Cache { path: path.into(), source })?
        } else {
            MemoryStore::default()
        };
        Ok(Cache::Bundle(path.into(), Arc::new(store)))
    }

    fn store(&self) -> Arc<dyn CacheStore> {
        match self {
            Cache::Bundle(_, s) | Cache::None(s) => s.clone(),
            Cache::Dir(s) => s.clone(),
        }
    }

    /// Writes a bundle back when the run could have added entries.
    fn persist(&self, mode: GatewayMode) -> Result<(), BenchError> {
        if let Cache::Bundle(path, store) = self {
            if matches!(mode, GatewayMode::Record | GatewayMode::ReplayThenLive) {
                store.save_bundle(path).map_err(|source| BenchError::Cache { path: path.clone(), source })?;
            }
        }
        Ok(())
    }
}

fn write(path: &Path, text: &str) -> Result<(), BenchError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| BenchError::Write { path: dir.into(), source })?;
    }
    fs::write(path, text).map_err(|source| BenchError::Write { path: path.into(), source })
}

/// Keeps claim ids usable as file names.
fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Runs the pipeline over the dataset and writes `report.json` and
/// `report.md` under `out`, plus one artifact per claim when asked.
/// Per-claim failures do not fail the run; they are in the report.
pub fn run(opts: &RunOptions) -> Result<RunSummary, BenchError> {
    let claims = load_dataset(&opts.dataset, opts.adapter)?;
    let mut config = match &opts.config {
        Some(p) => ServiceConfig::from_file(p)?,
        None => ServiceConfig::default(),
    };
    config.gateway.mode = opts.mode;
    if opts.script.is_some() {
        config.gateway.script = opts.script.clone();
    }
    let cache = Cache::open(opts.cache.as_deref(), opts.mode)?;
    let ctx = config.build_context_with_store(cache.store())?;
    info!(claims = claims.len(), mode = ?opts.mode, jobs = opts.jobs, "running");
    let evaluation = evaluate(&ctx, &claims, opts.jobs.max(1));
    cache.persist(opts.mode)?;

    let report_json = opts.out.join("report.json");
    let report_markdown = opts.out.join("report.md");
    write(&report_json, &evaluation.report.to_json())?;
    write(&report_markdown, &evaluation.report.to_markdown())?;
    if opts.dump_artifacts {
        for (id, run) in &evaluation.runs {
            let body = match run {
                Ok(r) => serde_json::to_string_pretty(r).expect("claim run serializes"),
                Err(e) => serde_json::to_string_pretty(&serde_json::json!({ "claim_id": id, "error": e }))
                    .expect("error serializes"),
            };
            write(&opts.out.join("artifacts").join(format!("{}.json", file_stem(id))), &(body + "\n"))?;
        }
    }
    Ok(RunSummary { evaluation, report_json, report_markdown })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRecord {
    #[serde(default)]
    claim_id: Option<String>,
    gold: String,
    predicted: String,
}

/// Scores `{claim_id?, gold, predicted}` records, given as a JSON array or
/// as JSON lines. Gold labels go through `adapter`; predictions are always
/// in the four-label taxonomy.
pub fn score_pairs(text: &str, adapter: LabelAdapter) -> Result<EvalReport, BenchError> {
    let trimmed = text.trim_start();
    let records: Vec<(usize, PairRecord)> = if trimmed.is_empty() {
        Vec::new()
    } else if trimmed.starts_with('[') {
        let parsed: Vec<PairRecord> =
            serde_json::from_str(text).map_err(|e| BenchError::Pairs { line: e.line(), reason: e.to_string() })?;
        parsed.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect()
    } else {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r = serde_json::from_str(line).map_err(|e| BenchError::Pairs { line: i + 1, reason: e.to_string() })?;
            out.push((i + 1, r));
        }
        out
    };
    let outcomes = records
        .into_iter()
        .enumerate()
        .map(|(n, (line, r))| {
            let bad = |e: claimforge_core::model::ModelError| BenchError::Pairs { line, reason: e.to_string() };
            Ok(ClaimOutcome {
                claim_id: r.claim_id.unwrap_or_else(|| format!("pair-{:04}", n + 1)),
                gold: adapter.parse(&r.gold).map_err(bad)?,
                predicted: parse_label(&r.predicted).map_err(bad)?,
                error: None,
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    Ok(EvalReport::from_outcomes(outcomes))
}

pub fn score_file(path: &Path, adapter: LabelAdapter) -> Result<EvalReport, BenchError> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Read { path: path.into(), source })?;
    score_pairs(&text, adapter)
}

pub fn write_report(report: &EvalReport, out: &Path) -> Result<(), BenchError> {
    write(&out.join("report.json"), &report.to_json())?;
    write(&out.join("report.md"), &report.to_markdown())
}
