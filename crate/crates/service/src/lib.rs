//! HTTP front end for interactive steering of the block-wise render pipeline.
//!
//! Routes: `GET /api/health`, `GET /api/datasets`, `GET /api/presets` and
//! `POST /api/render`. A render responds with PNG bytes and the stage
//! timings in `x-*-seconds` headers plus a JSON `x-timings` header. Renders
//! for one dataset run one at a time; a request still queued when a newer
//! one arrives gets `409` with status `superseded`.

pub mod api;
pub mod coalesce;
pub mod registry;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tower_http::cors::CorsLayer;

use crate::api::{ErrorBody, RenderBody, SupersededBody, TimingBody};
use crate::coalesce::Rejected;
use crate::registry::Registry;
use crate::session::{render_queue, RenderQueue, Session};

pub use crate::registry::{DatasetDescriptor, DatasetEntry};

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Workers per render; `None` uses one per block.
    pub n_workers: Option<usize>,
}

struct Dataset {
    session: Arc<Session>,
    queue: RenderQueue,
}

/// Shared by all handlers; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    registry: Arc<Registry>,
    datasets: Arc<HashMap<String, Dataset>>,
}

impl AppState {
    pub fn new(registry: Registry, config: ServiceConfig) -> Self {
        let datasets = registry
            .entries()
            .iter()
            .map(|e| {
                let session = Arc::new(Session::new(e.clone(), config.n_workers));
                let queue = render_queue(Arc::clone(&session));
                (e.id.clone(), Dataset { session, queue })
            })
            .collect();
        Self {
            registry: Arc::new(registry),
            datasets: Arc::new(datasets),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Renders started for a dataset so far, superseded requests excluded.
    pub fn renders_executed(&self, dataset: &str) -> Option<usize> {
        self.datasets.get(dataset).map(|d| d.queue.executed())
    }

    pub fn is_loaded(&self, dataset: &str) -> Option<bool> {
        self.datasets.get(dataset).map(|d| d.session.is_loaded())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/datasets", get(list_datasets))
        .route("/api/presets", get(list_presets))
        .route("/api/render", post(render))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "datasets": state.registry.len() }))
}

async fn list_datasets(State(state): State<AppState>) -> Json<Vec<DatasetDescriptor>> {
    Json(state.registry.descriptors())
}

async fn list_presets() -> Json<Vec<api::PresetBody>> {
    Json(api::preset_bodies())
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

async fn render(State(state): State<AppState>, body: Bytes) -> Response {
    let body: RenderBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid render body: {e}")),
    };
    let Some(dataset) = state.datasets.get(&body.dataset) else {
        return error(
            StatusCode::NOT_FOUND,
            format!("unknown dataset {:?}", body.dataset),
        );
    };
    let request = match body.to_request(&dataset.session.entry.manifest) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let rendered = match dataset.queue.submit(request).await {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(Rejected::Superseded) => {
            let body = SupersededBody {
                status: "superseded".into(),
                request_id: body.request_id,
            };
            return (StatusCode::CONFLICT, Json(body)).into_response();
        }
        Err(Rejected::Aborted) => {
            return error(StatusCode::INTERNAL_SERVER_ERROR, "render aborted")
        }
    };
    let png = match rendered.image.to_png_bytes() {
        Ok(p) => p,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let t = rendered.timings;
    let timing = TimingBody {
        timings: t,
        quality: body.quality,
        width: rendered.image.width,
        height: rendered.image.height,
    };
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/png"));
    let mut put = |name: &'static str, value: String| {
        if let Ok(v) = HeaderValue::from_str(&value) {
            headers.insert(HeaderName::from_static(name), v);
        }
    };
    put("x-fetch-seconds", t.fetch.to_string());
    put("x-render-seconds", t.render.to_string());
    put("x-composite-seconds", t.composite.to_string());
    put("x-merge-seconds", t.merge.to_string());
    put("x-total-seconds", t.total.to_string());
    put(
        "x-timings",
        serde_json::to_string(&timing).unwrap_or_default(),
    );
    if let Some(id) = body.request_id {
        put("x-request-id", id);
    }
    (StatusCode::OK, headers, png).into_response()
}
