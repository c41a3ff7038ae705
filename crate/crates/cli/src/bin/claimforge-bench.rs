//! Offline benchmark: run the pipeline over a dataset, or score existing
//! predictions. Exits 2 when any claim failed; the report is written anyway.

use std::path::PathBuf;
use std::process::ExitCode;

use claimforge_cli::bench::{self, RunOptions};
use claimforge_core::model::LabelAdapter;
use claimforge_core::GatewayMode;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "claimforge-bench", version, about = "Claim verification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the headless pipeline over every claim in a dataset
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// live | record | replay | replay-then-live
        #[arg(long, default_value = "replay")]
        gateway_mode: GatewayMode,
        /// Cache directory, or a single .json bundle file
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// averitec | table5
        #[arg(long, default_value = "averitec")]
        adapter: LabelAdapter,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        /// Write one JSON artifact per claim under OUT/artifacts
        #[arg(long)]
        dump_artifacts: bool,
        /// Config file with provider endpoints and prompts
        #[arg(long, env = "CLAIMFORGE_CONFIG")]
        config: Option<PathBuf>,
        /// Scripted provider responses (for deterministic recordings)
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Score pre-computed predictions
    Score {
        /// JSON array or JSON lines of {claim_id?, gold, predicted}
        #[arg(long)]
        pairs: PathBuf,
        /// Vocabulary of the gold labels: averitec | table5
        #[arg(long, default_value = "averitec")]
        adapter: LabelAdapter,
        /// Also write report.json and report.md here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print JSON instead of Markdown
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Exit code 2 is reserved for claim failures.
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run { dataset, gateway_mode, cache_dir, out, adapter, jobs, dump_artifacts, config, script } => {
            let opts = RunOptions {
                dataset,
                mode: gateway_mode,
                cache: cache_dir,
                out,
                adapter,
                jobs,
                dump_artifacts,
                config,
                script,
            };
            match bench::run(&opts) {
                Ok(summary) => {
                    let r = &summary.evaluation.report;
                    println!(
                        "claims={} scored={} macro_f1={:.4} failures={} report={}",
                        summary.evaluation.runs.len(),
                        r.n,
                        r.macro_f1,
                        summary.failed(),
                        summary.report_json.display()
                    );
                    if summary.failed() > 0 {
                        ExitCode::from(2)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Score { pairs, adapter, out, json } => {
            let result = bench::score_file(&pairs, adapter).and_then(|report| {
                if let Some(dir) = &out {
                    bench::write_report(&report, dir)?;
                }
                Ok(report)
            });
            match result {
                Ok(report) => {
                    print!("{}", if json { report.to_json() } else { report.to_markdown() });
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
