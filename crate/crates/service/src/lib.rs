//! Read-only HTTP API over a workspace. Every payload is JSON; errors carry
//! `{status, code, message}`. See `docs/http-api.md` for the routes.

mod error;
mod routes;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::http::{HeaderValue, Method};
use axum::routing::get;
use axum::Router;
use stratincon_core::store::{AnalysisBundle, StoreError, Workspace};
use stratincon_core::telemetry::MatchLog;
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::ApiError;

/// Startup index: every stored match, parsed once, plus the version of the
/// default model. Bundles are read from disk per request.
#[derive(Debug, Clone)]
pub struct AppState {
    inner: Arc<Index>,
}

#[derive(Debug)]
struct Index {
    workspace: Workspace,
    matches: Vec<MatchLog>,
    by_id: BTreeMap<String, usize>,
    model_version: Option<String>,
}

impl AppState {
    pub fn load(workspace: Workspace) -> Result<Self, StoreError> {
        let matches = workspace.load_matches()?;
        let by_id = matches
            .iter()
            .enumerate()
            .map(|(i, m)| (m.match_id().to_string(), i))
            .collect();
        let model_version = workspace.current_model_version()?;
        Ok(Self {
            inner: Arc::new(Index {
                workspace,
                matches,
                by_id,
                model_version,
            }),
        })
    }

    pub fn matches(&self) -> &[MatchLog] {
        &self.inner.matches
    }

    pub fn model_version(&self) -> Option<&str> {
        self.inner.model_version.as_deref()
    }

    fn get_match(&self, id: &str) -> Result<&MatchLog, ApiError> {
        self.inner
            .by_id
            .get(id)
            .map(|&i| &self.inner.matches[i])
            .ok_or_else(|| ApiError::match_not_found(id))
    }

    fn bundle(&self, id: &str) -> Result<AnalysisBundle, StoreError> {
        self.inner.workspace.get_bundle(id)
    }

    /// A bundle built by a model other than the current default one.
    fn is_stale(&self, bundle: &AnalysisBundle) -> bool {
        self.model_version()
            .is_some_and(|v| v != bundle.model_version)
    }
}

/// Routes with CORS for `ui_origin`, or for any origin when `None`.
pub fn router(state: AppState, ui_origin: Option<HeaderValue>) -> Router {
    let origin = match ui_origin {
        Some(o) => AllowOrigin::exact(o),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET]);
    Router::new()
        .route("/api/matches", get(routes::list_matches))
        .route("/api/matches/{id}", get(routes::match_detail))
        .route("/api/matches/{id}/frames", get(routes::frames))
        .route("/api/matches/{id}/events", get(routes::events))
        .route(
            "/api/matches/{id}/inconsistencies",
            get(routes::inconsistencies),
        )
        .route("/api/matches/{id}/attribution", get(routes::attribution))
        .route("/api/teams/{id}/profile", get(routes::team_profile))
        .route("/api/players/{id}/profile", get(routes::player_profile))
        .fallback(routes::fallback)
        .layer(cors)
        .with_state(state)
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

impl ServeError {
    pub fn code(&self) -> &'static str {
        match self {
            ServeError::Bind { .. } => "bind_error",
            ServeError::Io(_) => "io_error",
        }
    }
}

/// Binds `addr`, reports the bound address through `on_ready`, and serves
/// until SIGINT or SIGTERM.
pub async fn serve(
    state: AppState,
    addr: &str,
    ui_origin: Option<HeaderValue>,
    on_ready: impl FnOnce(SocketAddr),
) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: addr.to_string(),
            source,
        })?;
    let local = listener.local_addr()?;
    tracing::info!(%local, matches = state.matches().len(), "serving");
    on_ready(local);
    axum::serve(listener, router(state, ui_origin))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
