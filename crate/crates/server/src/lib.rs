//! HTTP/JSON interface over the datascope library: datasets, statistics,
//! layouts, neighborhoods, coding sessions and hypotheses.
//!
//! Session events are synced to disk before they are acknowledged, so the
//! only state lost on a crash is the in-memory job table.

pub mod catalog;
pub mod config;
pub mod error;
pub mod jobs;
pub mod layouts;
mod routes;

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::Router;
use datascope::coding::SessionStore;
use datascope::hypothesis::HypothesisStore;
use datascope::Exec;
use tower_http::cors::CorsLayer;

pub use catalog::Catalog;
pub use config::ServerConfig;
pub use error::ApiError;
pub use jobs::{JobRegistry, JobState, JobStatus};
pub use layouts::LayoutStore;
pub use routes::{evidence_layouts, EventAck, EventRequest, NewHypothesis, NewLayout, NewSession, PointRecord, SessionView};

pub struct AppState {
    pub catalog: Catalog,
    pub layouts: LayoutStore,
    pub sessions: SessionStore,
    pub hypotheses: HypothesisStore,
    pub jobs: JobRegistry,
    pub exec: Exec,
    /// Serializes read-modify-write cycles on hypothesis files.
    hypothesis_lock: Mutex<()>,
}

impl AppState {
    /// Opens the stores under `config.state_dir` with a catalog over `config.data_root`.
    pub fn open(config: &ServerConfig) -> Result<Self, String> {
        let catalog = Catalog::new(&config.data_root, config.check_counts, config.exec);
        Self::with_catalog(config, catalog)
    }

    pub fn with_catalog(config: &ServerConfig, catalog: Catalog) -> Result<Self, String> {
        let dir = &config.state_dir;
        let ctx = |what: &str, e: &dyn std::fmt::Display| format!("cannot open {what} under {}: {e}", dir.display());
        Ok(AppState {
            catalog,
            layouts: LayoutStore::open(dir.join("layouts")).map_err(|e| ctx("layouts", &e))?,
            sessions: SessionStore::open(dir.join("sessions")).map_err(|e| ctx("sessions", &e))?,
            hypotheses: HypothesisStore::open(dir.join("hypotheses")).map_err(|e| ctx("hypotheses", &e))?,
            jobs: JobRegistry::default(),
            exec: config.exec,
            hypothesis_lock: Mutex::new(()),
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    routes::api(state).layer(CorsLayer::permissive())
}

/// Binds `0.0.0.0:port` and serves until ctrl-c.
pub async fn serve(config: ServerConfig) -> Result<(), String> {
    if !config.data_root.is_dir() {
        tracing::warn!(
            data_root = %config.data_root.display(),
            "data root does not exist; dataset endpoints will answer 503 until it is populated"
        );
    }
    let state = Arc::new(AppState::open(&config)?);
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| format!("cannot bind {addr}: {e} (set DATASCOPE_PORT to another port)"))?;
    tracing::info!(%addr, state_dir = %config.state_dir.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await
        .map_err(|e| e.to_string())
}
