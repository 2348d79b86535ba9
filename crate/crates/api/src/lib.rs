//! REST service over the verifi workflow and ledger.
//!
//! Every structured body, in both directions, is JSON; responses are rendered
//! with sorted keys. Binary content travels as standard base64. Protected
//! routes take `Authorization: Bearer <token>` and are checked in a fixed
//! order: token (401), role (403), then request body (422).

mod error;
mod reply;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard, PoisonError};

use axum::extract::DefaultBodyLimit;
use axum::http::{header, HeaderValue, Method};
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;
use verifi_core::workflow::{DataDir, MAX_UPLOAD_BYTES};
use verifi_core::Platform;

pub use error::ApiError;
pub use reply::Reply;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

/// Request body ceiling: a maximal upload after base64 expansion, plus slack.
const BODY_LIMIT: usize = MAX_UPLOAD_BYTES / 3 * 4 + 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub data_dir: PathBuf,
    pub bind: SocketAddr,
    /// Overrides the secret stored in the data directory.
    pub token_secret: Option<Vec<u8>>,
    /// Directory of static web UI assets served at `/`, if any.
    pub webui_dir: Option<PathBuf>,
}

/// Shared handle to the platform. All operations go through one lock, which
/// serializes mutations and keeps the approve pipeline atomic to observers.
#[derive(Clone)]
pub struct AppState {
    platform: Arc<Mutex<Platform>>,
}

impl AppState {
    pub fn new(platform: Platform) -> Self {
        Self {
            platform: Arc::new(Mutex::new(platform)),
        }
    }

    pub fn platform(&self) -> MutexGuard<'_, Platform> {
        self.platform.lock().unwrap_or_else(PoisonError::into_inner)
    }
}

pub fn router(state: AppState) -> Router {
    routes::api_routes()
        .with_state(state)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(localhost_cors())
}

fn localhost_cors() -> CorsLayer {
    CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin: &HeaderValue, _| {
            origin.to_str().is_ok_and(is_local_origin)
        }))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE])
}

fn is_local_origin(origin: &str) -> bool {
    let Some(rest) = origin
        .strip_prefix("http://")
        .or_else(|| origin.strip_prefix("https://"))
    else {
        return false;
    };
    let host = rest.rsplit_once(':').map_or(rest, |(h, port)| {
        if port.bytes().all(|b| b.is_ascii_digit()) {
            h
        } else {
            rest
        }
    });
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

/// Open the data directory, bind, and serve until ctrl-c.
pub async fn serve(config: ApiConfig) -> Result<(), ServeError> {
    let dir = DataDir::new(&config.data_dir);
    let platform = Platform::open(&dir, config.token_secret.clone())?;
    let mut app = router(AppState::new(platform));
    if let Some(ui) = config.webui_dir.as_ref().filter(|p| p.is_dir()) {
        app = app.fallback_service(ServeDir::new(ui));
    }
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| ServeError::Bind(config.bind, e))?;
    let local = listener.local_addr().map_err(|e| ServeError::Bind(config.bind, e))?;
    println!("listening on http://{local}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServeError::Io)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {0}: {1}")]
    Bind(SocketAddr, std::io::Error),
    #[error(transparent)]
    Workflow(#[from] verifi_core::WorkflowError),
    #[error("server: {0}")]
    Io(std::io::Error),
}
