//! Local HTTP service for two-reader review of an extraction run.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/health` | liveness and run id |
//! | GET | `/runs/{run}/pairs?reader=` | pair list with the reader's progress |
//! | GET | `/runs/{run}/pairs/{pair}?reader=` | report texts, extraction, the reader's own judgments |
//! | POST | `/runs/{run}/judgments` | append one judgment |
//! | GET | `/runs/{run}/summary?readers=a,b` | pooled summary over the latest-wins view |
//! | GET | `/runs/{run}/export` | latest-wins judgments as JSON lines |

mod http;
mod store;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

pub use http::{router, PairDetail, PairListItem};
pub use store::{JudgmentStore, LogRecord, LOG_FILE};

use crate::engine::EngineError;

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("run directory {0} has no manifest.json")]
    MissingManifest(PathBuf),
    #[error(transparent)]
    Run(#[from] EngineError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot listen on {addr}: {source}")]
    PortBusy {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("unknown run {0}")]
    UnknownRun(String),
    #[error("unknown pair {0}")]
    UnknownPair(String),
    #[error("unknown lesion {0}")]
    UnknownLesion(String),
    #[error("invalid attribute {0}")]
    InvalidAttribute(String),
    #[error("invalid judgment: {0}")]
    InvalidJudgment(String),
    #[error("no judgments recorded for the requested readers")]
    NoJudgments,
}

impl ReviewError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ReviewError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Stable machine-readable code for HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            ReviewError::MissingManifest(_) => "missing_manifest",
            ReviewError::Run(_) => "run_error",
            ReviewError::Io { .. } => "io_error",
            ReviewError::PortBusy { .. } => "port_busy",
            ReviewError::UnknownRun(_) => "unknown_run",
            ReviewError::UnknownPair(_) => "unknown_pair",
            ReviewError::UnknownLesion(_) => "unknown_lesion",
            ReviewError::InvalidAttribute(_) => "invalid_attribute",
            ReviewError::InvalidJudgment(_) => "invalid_judgment",
            ReviewError::NoJudgments => "no_judgments",
        }
    }
}

/// Binds `addr` and serves `run_dir` until ctrl-c. The store is opened
/// before binding, so a bad run directory fails fast.
pub async fn serve(run_dir: impl AsRef<Path>, addr: SocketAddr) -> Result<(), ReviewError> {
    let store = Arc::new(JudgmentStore::open(run_dir)?);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ReviewError::PortBusy { addr, source })?;
    let local = listener
        .local_addr()
        .map_err(|source| ReviewError::PortBusy { addr, source })?;
    tracing::info!(%local, run = store.run_id(), "review service listening");
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| ReviewError::PortBusy { addr, source })
}
