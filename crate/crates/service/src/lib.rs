//! HTTP facade over `hyperadapt-core` with a directory-of-JSON document store.
//!
//! Handlers load state from the [`Store`], call the pure engine functions and
//! write the result back. Mutations of one learner are serialized by a
//! per-learner lock; different learners proceed concurrently.

pub mod api;
pub mod auth;
pub mod cohort;
pub mod config;
pub mod error;
pub mod store;

pub use api::{router, AppState};
pub use auth::{Clock, FixedClock, SystemClock};
pub use config::ServiceConfig;
pub use error::ApiError;
pub use store::{Store, StoreError};

/// Binds the configured address and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let state = AppState::from_config(&config, std::sync::Arc::new(SystemClock))?;
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
