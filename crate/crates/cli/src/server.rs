//! HTTP API over a garden store.
//!
//! ```text
//! GET  /api/sessions                      list of ApiSessionView
//! POST /api/sessions          {seed, mode, id?, max_steps?}  201
//! GET  /api/sessions/{id}                 ApiSessionView
//! GET  /api/sessions/{id}/graph[?step=k]  graph with metric overlays
//! POST /api/sessions/{id}/step {prompt?}  202 + handle, runs in background
//! GET  /api/sessions/{id}/steps/{k}       full GrowthStep
//! GET  /api/sessions/{id}/export?format=graphml|json
//! GET  /api/sessions/{id}/events          server-sent status events
//! ```
//!
//! Each garden has one writer at a time; readers clone an `Arc` snapshot
//! that is swapped only after the store has been written.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use tracing::{info, warn};

use gpfo_core::garden::{grow_step, new_garden, GardenConfig, GardenError, GardenMode, GardenSession, GardenStore};
use gpfo_core::gateway::Gateway;
use gpfo_core::graph::to_graphml;

use crate::view::{ApiSessionView, GraphView, Status};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl From<GardenError> for ApiError {
    fn from(e: GardenError) -> Self {
        let status = match &e {
            GardenError::NotFound(_) => StatusCode::NOT_FOUND,
            GardenError::InvalidArgument(_) | GardenError::EmptyGraph => StatusCode::UNPROCESSABLE_ENTITY,
            GardenError::StepLimitReached { .. } => StatusCode::CONFLICT,
            GardenError::Engine(_) | GardenError::Gateway(_) => StatusCode::BAD_GATEWAY,
            GardenError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

fn join_error(e: tokio::task::JoinError) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}"))
}

/// One status transition, as sent on the event stream.
#[derive(Debug, Clone, Serialize)]
pub struct StatusEvent {
    pub session: String,
    pub status: Status,
    pub step_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Slot {
    snapshot: RwLock<Arc<GardenSession>>,
    /// Held only briefly; `Generating` marks the single writer.
    status: Mutex<(Status, Option<String>)>,
    events: broadcast::Sender<StatusEvent>,
}

impl Slot {
    fn new(garden: GardenSession) -> Self {
        Self {
            snapshot: RwLock::new(Arc::new(garden)),
            status: Mutex::new((Status::Idle, None)),
            events: broadcast::channel(64).0,
        }
    }

    fn snapshot(&self) -> Arc<GardenSession> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn status(&self) -> (Status, Option<String>) {
        self.status.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn view(&self) -> ApiSessionView {
        let (status, error) = self.status();
        ApiSessionView::new(&self.snapshot(), status, error)
    }

    fn event(&self) -> StatusEvent {
        let (status, error) = self.status();
        let g = self.snapshot();
        StatusEvent { session: g.id.clone(), status, step_count: g.steps.len(), error }
    }

    fn set_status(&self, status: Status, error: Option<String>) {
        *self.status.lock().unwrap_or_else(|e| e.into_inner()) = (status, error);
        // No subscribers is fine.
        let _ = self.events.send(self.event());
    }

    /// Claims the writer role after `admit` accepts the current snapshot.
    /// The snapshot only changes while the role is held, so the check and
    /// the claim see the same garden.
    fn try_begin(
        &self,
        admit: impl FnOnce(&GardenSession) -> Result<(), ApiError>,
    ) -> Result<Arc<GardenSession>, ApiError> {
        let mut st = self.status.lock().unwrap_or_else(|e| e.into_inner());
        let current = self.snapshot();
        if st.0 == Status::Generating {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("a step is already running for {:?}", current.id),
            ));
        }
        admit(&current)?;
        *st = (Status::Generating, None);
        drop(st);
        let _ = self.events.send(self.event());
        Ok(current)
    }
}

struct Shared {
    store: GardenStore,
    gateway: Arc<dyn Gateway>,
    config: GardenConfig,
    max_steps: usize,
    slots: Mutex<HashMap<String, Arc<Slot>>>,
}

/// Everything the handlers need. Gardens are loaded from the store on
/// first use, so a restarted service picks up where it left off.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    pub fn new(store: GardenStore, gateway: Arc<dyn Gateway>, config: GardenConfig, max_steps: usize) -> Self {
        Self { shared: Arc::new(Shared { store, gateway, config, max_steps, slots: Mutex::new(HashMap::new()) }) }
    }

    fn cached(&self, id: &str) -> Option<Arc<Slot>> {
        self.shared.slots.lock().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    fn insert(&self, garden: GardenSession) -> Arc<Slot> {
        let mut slots = self.shared.slots.lock().unwrap_or_else(|e| e.into_inner());
        slots.entry(garden.id.clone()).or_insert_with(|| Arc::new(Slot::new(garden))).clone()
    }

    async fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        if let Some(s) = self.cached(id) {
            return Ok(s);
        }
        let store = self.shared.store.clone();
        let owned = id.to_string();
        let garden = tokio::task::spawn_blocking(move || store.load(&owned)).await.map_err(join_error)??;
        Ok(self.insert(garden))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", get(list_sessions).post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/graph", get(get_graph))
        .route("/api/sessions/{id}/step", post(post_step))
        .route("/api/sessions/{id}/steps/{k}", get(get_step))
        .route("/api/sessions/{id}/export", get(export))
        .route("/api/sessions/{id}/events", get(events))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Bodies are parsed by hand so every malformed body is a 422, whatever
/// the content type. An empty body reads as `{}`.
fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let bytes: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(bytes).map_err(|e| ApiError::unprocessable(format!("malformed body: {e}")))
}

async fn list_sessions(State(state): State<AppState>) -> Result<Json<Vec<ApiSessionView>>, ApiError> {
    let store = state.shared.store.clone();
    let ids = tokio::task::spawn_blocking(move || store.list()).await.map_err(join_error)??;
    let mut views = Vec::with_capacity(ids.len());
    for id in ids {
        match state.slot(&id).await {
            Ok(slot) => views.push(slot.view()),
            Err(e) => warn!(garden = %id, error = %e.message, "skipping unreadable garden"),
        }
    }
    Ok(Json(views))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    seed: String,
    mode: GardenMode,
    id: Option<String>,
    max_steps: Option<usize>,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let body: CreateBody = parse_body(&body)?;
    let shared = state.shared.clone();
    let garden = tokio::task::spawn_blocking(move || -> Result<GardenSession, GardenError> {
        let id = body.id.unwrap_or_else(|| crate::fresh_id(&shared.store, &body.seed));
        if shared.store.dir(&id).exists() {
            return Err(GardenError::InvalidArgument(format!("garden {id:?} already exists")));
        }
        let max_steps = body.max_steps.unwrap_or(shared.max_steps);
        let garden = new_garden(&id, &body.seed, body.mode, max_steps, shared.config.clone(), &*shared.gateway)?;
        shared.store.save(&garden)?;
        Ok(garden)
    })
    .await
    .map_err(join_error)?
    .map_err(|e| match e {
        GardenError::InvalidArgument(m) if m.contains("already exists") => ApiError::new(StatusCode::CONFLICT, m),
        e => e.into(),
    })?;
    info!(garden = %garden.id, "created");
    let slot = state.insert(garden);
    Ok((StatusCode::CREATED, Json(slot.view())).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<ApiSessionView>, ApiError> {
    Ok(Json(state.slot(&id).await?.view()))
}

#[derive(Deserialize)]
struct GraphQuery {
    step: Option<usize>,
}

async fn get_graph(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<GraphQuery>,
) -> Result<Json<GraphView>, ApiError> {
    let garden = state.slot(&id).await?.snapshot();
    let view = tokio::task::spawn_blocking(move || match q.step {
        None => Ok(GraphView::new(&garden.id, None, &garden.integrated)),
        Some(k) if k < garden.steps.len() => {
            Ok(GraphView::new(&garden.id, Some(k), &garden.integrated.filter_by_step(&garden.step_ref(k))))
        }
        Some(k) => Err(ApiError::new(StatusCode::NOT_FOUND, format!("garden {:?} has no step {k}", garden.id))),
    })
    .await
    .map_err(join_error)??;
    Ok(Json(view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepBody {
    prompt: Option<String>,
}

/// Returned with 202; progress arrives on the event stream.
#[derive(Debug, Serialize)]
struct StepHandle {
    session: String,
    step: usize,
    status: Status,
    events: String,
}

async fn post_step(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let slot = state.slot(&id).await?;
    let body: StepBody = parse_body(&body)?;
    let prompt = body.prompt.filter(|p| !p.trim().is_empty());
    let current = slot.try_begin(|g| match (g.mode, &prompt) {
        _ if g.is_full() => Err(ApiError::new(StatusCode::CONFLICT, format!("step limit of {} reached", g.max_steps))),
        (GardenMode::Steered, None) => Err(ApiError::unprocessable("a steered garden needs a prompt")),
        (GardenMode::Autonomous, Some(_)) => Err(ApiError::unprocessable("an autonomous garden takes no prompt; send {}")),
        _ => Ok(()),
    })?;

    let handle = StepHandle {
        session: id.clone(),
        step: current.steps.len(),
        status: Status::Generating,
        events: format!("/api/sessions/{id}/events"),
    };
    let shared = state.shared.clone();
    let worker = slot.clone();
    tokio::spawn(async move {
        let result = tokio::task::spawn_blocking(move || -> Result<GardenSession, GardenError> {
            let mut next = (*current).clone();
            grow_step(&mut next, prompt.as_deref(), &*shared.gateway)?;
            shared.store.save(&next)?;
            Ok(next)
        })
        .await;
        match result {
            Ok(Ok(next)) => {
                info!(garden = %next.id, steps = next.steps.len(), "step done");
                *worker.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
                worker.set_status(Status::Idle, None);
            }
            Ok(Err(e)) => {
                warn!(error = %e, "step failed");
                worker.set_status(Status::Error, Some(e.to_string()));
            }
            Err(e) => worker.set_status(Status::Error, Some(format!("worker failed: {e}"))),
        }
    });
    Ok((StatusCode::ACCEPTED, Json(handle)).into_response())
}

async fn get_step(State(state): State<AppState>, Path((id, k)): Path<(String, usize)>) -> Result<Response, ApiError> {
    let garden = state.slot(&id).await?.snapshot();
    match garden.steps.get(k) {
        Some(step) => Ok(Json(step).into_response()),
        None => Err(ApiError::new(StatusCode::NOT_FOUND, format!("garden {id:?} has no step {k}"))),
    }
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let garden = state.slot(&id).await?.snapshot();
    match q.format.as_deref().unwrap_or("graphml") {
        "graphml" => Ok(([(header::CONTENT_TYPE, "application/graphml+xml")], to_graphml(&garden.integrated)).into_response()),
        "json" => Ok(([(header::CONTENT_TYPE, "application/json")], garden.integrated.to_json()).into_response()),
        other => Err(ApiError::unprocessable(format!("unknown export format {other:?} (graphml|json)"))),
    }
}

/// The current status first, then every transition.
async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let slot = state.slot(&id).await?;
    let rx = slot.events.subscribe();
    let first = slot.event();
    let tail = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(ev) => return Some((ev, rx)),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let all = stream::once(async move { first }).chain(tail).map(|ev| {
        Ok(Event::default().event("status").json_data(&ev).unwrap_or_else(|_| Event::default().data("{}")))
    });
    Ok(Sse::new(all).keep_alive(KeepAlive::default()))
}
