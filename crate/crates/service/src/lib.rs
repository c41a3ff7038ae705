//! The claimforge session service: one process hosting interactive
//! verification sessions over WebSockets, with HTTP endpoints for claims,
//! session creation and logs.

pub mod app;
pub mod config;
pub mod host;
pub mod store;
pub mod wire;

use std::sync::Arc;

use claimforge_core::gateway::SystemClock;
use thiserror::Error;
use tokio::net::TcpListener;
use tracing::info;

pub use app::{router, AppState};
pub use config::{ConfigError, ServiceConfig};
pub use host::{HostError, SessionHost};
pub use store::{EventStore, FileEventStore, MemoryEventStore, PersistedLog, StoreError};
pub use wire::{ClientFrame, ClientMessage, ServerFrame, ServerMessage, WireError, WireMessage};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server stopped: {0}")]
    Io(#[from] std::io::Error),
}

/// Builds the application state from a validated config, with file-backed
/// session logs and the system clock. HTTP providers use blocking clients,
/// so call this off the async runtime or through [`build_state_async`].
pub fn build_state(config: &ServiceConfig) -> Result<AppState, ConfigError> {
    let ctx = config.build_context()?;
    let claims = config.load_claims()?;
    let session_config = config.session_config(&ctx.prompts)?;
    let store = Arc::new(FileEventStore::new(&config.data.log_dir));
    let host = SessionHost::new(Arc::new(ctx), claims, store, session_config, Arc::new(SystemClock));
    Ok(AppState { host, token: config.server.token.as_deref().map(Arc::from) })
}

pub async fn build_state_async(config: &ServiceConfig) -> Result<AppState, ConfigError> {
    let config = config.clone();
    tokio::task::spawn_blocking(move || build_state(&config)).await.expect("state construction panicked")
}

/// Binds the configured address and serves until the process stops.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    config.validate()?;
    let addr = config.bind_addr()?;
    let state = build_state_async(&config).await?;
    let listener =
        TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr: addr.to_string(), source })?;
    info!(addr = %listener.local_addr()?, claims = state.host.claims().len(), "listening");
    serve_on(listener, state).await
}

pub async fn serve_on(listener: TcpListener, state: AppState) -> Result<(), ServeError> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}
