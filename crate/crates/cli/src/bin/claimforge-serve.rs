//! Session server. Configuration comes from `--config` (or
//! `CLAIMFORGE_CONFIG`) with `CLAIMFORGE_*` environment overrides.

use std::path::PathBuf;

use claimforge_service::{serve, ServiceConfig};
use clap::Parser;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "claimforge-serve", version, about = "Interactive claim verification sessions over WebSockets")]
struct Cli {
    /// TOML (or .json) configuration file
    #[arg(long, env = "CLAIMFORGE_CONFIG")]
    config: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    let config = ServiceConfig::load(cli.config.as_deref())?;
    serve(config).await?;
    Ok(())
}
