//! HTTP service behind the annotation UI: serves the taxonomy and images,
//! leases images to annotators and persists validated annotations.

pub mod store;
pub mod tasks;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use hairstyle_core::taxonomy::{HairstyleAnnotation, Taxonomy};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tower_http::services::ServeDir;

pub use store::{export, AnnotationRecord, ExportSummary, LineWarning, Store, StoreError};
pub use tasks::{TaskQueue, DEFAULT_LEASE};

pub const ANNOTATOR_HEADER: &str = "x-annotator-id";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub image_dir: PathBuf,
    pub store_path: PathBuf,
    /// Built UI served at `/` when set.
    pub ui_dir: Option<PathBuf>,
    pub lease: Duration,
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("image directory {path}: {source}")]
    Images { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

struct Queue {
    store: Store,
    tasks: TaskQueue,
}

struct Shared {
    taxonomy: Taxonomy,
    schema: Value,
    images: BTreeMap<String, PathBuf>,
    queue: Mutex<Queue>,
}

/// Cheaply cloneable handle on the service state.
#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    /// Scan images and replay the store. Skipped store lines are returned.
    pub fn open(cfg: &ServiceConfig, taxonomy: Taxonomy) -> Result<(Self, Vec<LineWarning>), ServiceError> {
        let images = tasks::scan_images(&cfg.image_dir).map_err(|source| ServiceError::Images {
            path: cfg.image_dir.clone(),
            source,
        })?;
        let (store, warnings) = Store::open(&cfg.store_path, &taxonomy)?;
        let pending = images.keys().filter(|id| !store.contains(id)).cloned();
        let tasks = TaskQueue::new(pending, cfg.lease);
        let schema = serde_json::to_value(taxonomy.document()).expect("schema serializes");
        let shared = Shared {
            taxonomy,
            schema,
            images,
            queue: Mutex::new(Queue { store, tasks }),
        };
        Ok((Self(Arc::new(shared)), warnings))
    }

    fn queue(&self) -> MutexGuard<'_, Queue> {
        // A panic mid-request cannot leave the store half-written: appends
        // complete before the in-memory state changes.
        self.0.queue.lock().unwrap_or_else(|p| p.into_inner())
    }
}

pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/taxonomy", get(get_taxonomy))
        .route("/api/tasks/next", get(next_task))
        .route("/api/images/{id}", get(get_image))
        .route("/api/annotations", post(post_annotation).get(list_annotations))
        .route("/api/progress", get(progress))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serve until Ctrl-C.
pub async fn serve(cfg: ServiceConfig, taxonomy: Taxonomy, addr: SocketAddr) -> Result<(), ServiceError> {
    let (state, warnings) = AppState::open(&cfg, taxonomy)?;
    for w in &warnings {
        tracing::warn!("{}: skipped {w}", cfg.store_path.display());
    }
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    tracing::info!("listening on http://{}", listener.local_addr().map_err(ServiceError::Serve)?);
    axum::serve(listener, router(state, cfg.ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn get_taxonomy(State(state): State<AppState>) -> Json<Value> {
    Json(state.0.schema.clone())
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TaskResponse {
    pub image_id: String,
    pub image_url: String,
}

async fn next_task(State(state): State<AppState>) -> Response {
    let next = state.queue().tasks.next(Instant::now());
    match next {
        Some(image_id) => Json(TaskResponse {
            image_url: format!("/api/images/{image_id}"),
            image_id,
        })
        .into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

async fn get_image(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(path) = state.0.images.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown image {id:?}"));
    };
    let mime = tasks::content_type(&id).expect("scanned images have a known type");
    match tokio::fs::read(path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, mime)], bytes).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, format!("reading {id:?}: {e}")),
    }
}

#[derive(Debug, Deserialize)]
pub struct Submission {
    pub image_id: String,
    #[serde(default)]
    pub annotator_id: Option<String>,
    pub annotation: HairstyleAnnotation,
}

async fn post_annotation(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Result<Json<Submission>, JsonRejection>,
) -> Response {
    let Json(sub) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    if !state.0.images.contains_key(&sub.image_id) {
        return error(StatusCode::NOT_FOUND, format!("unknown image {:?}", sub.image_id));
    }
    let mut annotation = sub.annotation;
    annotation.style_id = sub.image_id.clone();
    match state.0.taxonomy.validate_annotation(&annotation) {
        Err(e) => {
            return (
                StatusCode::UNPROCESSABLE_ENTITY,
                Json(json!({ "violations": [], "problems": e.problems })),
            )
                .into_response()
        }
        Ok(v) if !v.is_empty() => {
            return (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "violations": v }))).into_response()
        }
        Ok(_) => {}
    }
    let annotator_id = sub
        .annotator_id
        .or_else(|| {
            headers
                .get(ANNOTATOR_HEADER)
                .and_then(|h| h.to_str().ok())
                .map(str::to_string)
        })
        .unwrap_or_else(|| "anonymous".to_string());
    let record = AnnotationRecord {
        image_id: sub.image_id,
        annotator_id,
        submitted_at: Utc::now(),
        annotation,
    };

    let mut queue = state.queue();
    match queue.store.append(record.clone()) {
        Ok(()) => {
            queue.tasks.complete(&record.image_id);
            (StatusCode::CREATED, Json(record)).into_response()
        }
        Err(e @ StoreError::Duplicate(_)) => error(StatusCode::CONFLICT, e.to_string()),
        Err(e) => {
            tracing::error!("{e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        }
    }
}

#[derive(Debug, Deserialize)]
struct AnnotationQuery {
    image_id: Option<String>,
}

async fn list_annotations(State(state): State<AppState>, Query(q): Query<AnnotationQuery>) -> Json<Vec<AnnotationRecord>> {
    let queue = state.queue();
    let records = match q.image_id {
        Some(id) => queue.store.get(&id).cloned().into_iter().collect(),
        None => queue.store.records().to_vec(),
    };
    Json(records)
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Progress {
    pub total: usize,
    pub done: usize,
    pub pending: usize,
}

async fn progress(State(state): State<AppState>) -> Json<Progress> {
    let queue = state.queue();
    let total = state.0.images.len();
    let pending = queue.tasks.pending();
    Json(Progress {
        total,
        done: total - pending,
        pending,
    })
}
