//! HTTP JSON API over pipeline artifacts and the participant session store.

mod artifacts;
mod routes;
pub mod store;

pub use artifacts::{Artifacts, ExplanationIndex, InstancePayload, Scenario};
pub use routes::{router, Analytics, AppState, CreateSession, ResponseBatch, SessionView};
pub use store::{SessionRecord, Store, StoreEvent};

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use nidsx_core::survey::SurveyError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Survey(#[from] SurveyError),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("admin token required")]
    Forbidden,
    #[error("artifacts not loaded: {0}")]
    Unavailable(String),
    #[error("store: {0}")]
    Store(String),
    #[error("artifacts: {0}")]
    Artifacts(String),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    detail: String,
}

impl ServiceError {
    fn kind(&self) -> (StatusCode, &'static str) {
        match self {
            ServiceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ServiceError::Survey(SurveyError::OutOfScale { .. }) => (StatusCode::BAD_REQUEST, "out_of_scale"),
            ServiceError::Survey(SurveyError::UnknownItem(_)) => (StatusCode::BAD_REQUEST, "unknown_item"),
            ServiceError::Survey(SurveyError::IncompleteResponse(_)) => (StatusCode::BAD_REQUEST, "incomplete_response"),
            ServiceError::Survey(_) => (StatusCode::BAD_REQUEST, "invalid_response"),
            ServiceError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ServiceError::Forbidden => (StatusCode::FORBIDDEN, "forbidden"),
            ServiceError::Unavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, "unavailable"),
            ServiceError::Store(_) | ServiceError::Artifacts(_) | ServiceError::Config(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, error) = self.kind();
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(ErrorBody { error, detail: self.to_string() })).into_response()
    }
}

/// Service settings; every field can be overridden by an `NIDSX_*` variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Pipeline output directory holding `explanations/`, `metrics/` and optionally `scenarios.json`.
    pub artifacts_dir: PathBuf,
    pub store_path: PathBuf,
    /// Built UI assets served at `/`, when present.
    pub static_dir: Option<PathBuf>,
    /// Instrument definitions replacing the built-in set.
    pub instruments_path: Option<PathBuf>,
    /// When set, `/api/analytics` and `/api/export.csv` require this token.
    pub admin_token: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            artifacts_dir: PathBuf::from("runs/default"),
            store_path: PathBuf::from("runs/default/sessions.jsonl"),
            static_dir: None,
            instruments_path: None,
            admin_token: None,
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `NIDSX_HOST`, `NIDSX_PORT`, `NIDSX_ARTIFACTS_DIR`,
    /// `NIDSX_STORE_PATH`, `NIDSX_STATIC_DIR`, `NIDSX_INSTRUMENTS_PATH` and
    /// `NIDSX_ADMIN_TOKEN` from `vars`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(mut self, vars: I) -> Result<Self, ServiceError> {
        for (key, value) in vars {
            match key.as_str() {
                "NIDSX_HOST" => self.host = value,
                "NIDSX_PORT" => {
                    self.port = value.parse().map_err(|_| ServiceError::Config(format!("NIDSX_PORT={value} is not a port")))?
                }
                "NIDSX_ARTIFACTS_DIR" => self.artifacts_dir = value.into(),
                "NIDSX_STORE_PATH" => self.store_path = value.into(),
                "NIDSX_STATIC_DIR" => self.static_dir = Some(value.into()),
                "NIDSX_INSTRUMENTS_PATH" => self.instruments_path = Some(value.into()),
                "NIDSX_ADMIN_TOKEN" => self.admin_token = (!value.is_empty()).then_some(value),
                _ => {}
            }
        }
        Ok(self)
    }

    pub fn addr(&self) -> Result<SocketAddr, ServiceError> {
        format!("{}:{}", self.host, self.port)
            .parse()
            .map_err(|_| ServiceError::Config(format!("{}:{} is not a socket address", self.host, self.port)))
    }
}

/// Loads artifacts and the store, then serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::from_config(&config)?;
    let addr = config.addr()?;
    let app = router(state, config.static_dir.as_deref());
    let listener =
        tokio::net::TcpListener::bind(addr).await.map_err(|e| ServiceError::Config(format!("cannot bind {addr}: {e}")))?;
    let bound = listener.local_addr().map_err(|e| ServiceError::Config(e.to_string()))?;
    log::info!("listening on http://{bound}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::Config(e.to_string()))
}
