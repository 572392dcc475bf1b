//! HTTP API behind the GATE sandbox.
//!
//! Every route lives under `/api/v1`. Solves run on a bounded pool of
//! blocking workers; saved scenarios are run directories in the data
//! directory, written in the same format as the command-line runner.

pub mod jobs;
pub mod store;

use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gate_core::io::{self, COLUMNS};
use gate_core::params::{self, parameter_specs, Violation};
use gate_core::{default_preset, desk_preset, GateError, Mode, SolverSettings, ValidationMode};
use serde::Deserialize;
use serde_json::{json, Value};

use jobs::{Job, JobStatus, Registry};
use store::{valid_name, ScenarioStore};

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    session_id: String,
    registry: Registry,
    store: Mutex<ScenarioStore>,
}

impl AppState {
    /// Opens (or creates) the session in `data_dir` with `workers` solver slots.
    pub fn open(data_dir: &Path, workers: usize) -> gate_core::Result<Self> {
        std::fs::create_dir_all(data_dir)?;
        let session_file = data_dir.join("session");
        let session_id = match std::fs::read_to_string(&session_file) {
            Ok(s) if !s.trim().is_empty() => s.trim().to_string(),
            _ => {
                let seed = format!("{:?}{}", std::time::SystemTime::now(), std::process::id());
                let id = io::sha256_hex(seed.as_bytes())[..16].to_string();
                io::write_atomic(&session_file, id.as_bytes())?;
                id
            }
        };
        Ok(AppState {
            inner: Arc::new(Inner {
                session_id,
                registry: Registry::new(workers),
                store: Mutex::new(ScenarioStore::open(data_dir)?),
            }),
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.inner.registry
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/schema", get(schema))
        .route("/solve", post(solve))
        .route("/jobs/{id}", get(job_status))
        .route("/jobs/{id}/trajectory", get(job_trajectory))
        .route("/jobs/{id}/progress", get(job_progress))
        .route("/scenarios", get(list_scenarios).post(save_scenario))
        .route("/scenarios/{name}", get(get_scenario))
        .route("/compare", get(compare));
    Router::new().nest("/api/v1", api).with_state(state)
}

/// Error body: `{"error": ..., "violations": [...]}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    violations: Vec<Violation>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            violations: Vec::new(),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} `{id}`"))
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl From<GateError> for ApiError {
    fn from(e: GateError) -> Self {
        match e {
            GateError::Invalid(violations) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                message: "invalid parameters".into(),
                violations,
            },
            GateError::Config(_) | GateError::Json(_) | GateError::UnknownParameter(_) => {
                Self::unprocessable(e.to_string())
            }
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if !self.violations.is_empty() {
            body["violations"] = json!(self.violations);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn job(state: &AppState, id: &str) -> ApiResult<Arc<Job>> {
    state
        .registry()
        .get(id)
        .ok_or_else(|| ApiError::not_found("job", id))
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let scenarios = state
        .inner
        .store
        .lock()
        .expect("store poisoned")
        .list()
        .len();
    Json(json!({
        "status": "ok",
        "session_id": state.inner.session_id,
        "jobs": state.registry().len(),
        "scenarios": scenarios,
    }))
}

async fn schema() -> Json<Value> {
    Json(json!({
        "version": 1,
        "parameters": parameter_specs(),
        "presets": { "default": default_preset(), "desk": desk_preset() },
        "modes": ["deterministic", "externality", "uncertainty"],
        "labor_modes": ["perfect_reallocation", "no_reallocation"],
        "solver_defaults": SolverSettings::default(),
        "trajectory_columns": COLUMNS,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveRequest {
    #[serde(default)]
    params: Value,
    #[serde(default)]
    mode: Option<Mode>,
    #[serde(default)]
    settings: Option<SolverSettings>,
}

async fn solve(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: SolveRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::unprocessable(format!("malformed request: {e}")))?;
    let (params, mut warnings) = params::from_value(req.params)?;
    let errors = params::validate(&params, ValidationMode::Permissive);
    if !errors.is_empty() {
        return Err(GateError::Invalid(errors).into());
    }
    warnings.extend(params::validate(&params, ValidationMode::Strict));
    let settings = req.settings.unwrap_or_default();
    if !(settings.tolerance > 0.0)
        || settings.max_iterations == 0
        || settings.history == 0
        || settings.starts == 0
    {
        return Err(ApiError::unprocessable(
            "settings need a positive tolerance, iteration budget, history and start count",
        ));
    }
    let mode = req.mode.unwrap_or(Mode::Deterministic);
    let job = state.registry().submit(params, mode, settings, warnings);
    tracing::info!(job = %job.id, mode = mode.as_str(), "job queued");
    let body = json!({ "job_id": job.id, "warnings": job.warnings });
    Ok((StatusCode::ACCEPTED, Json(body)).into_response())
}

async fn job_status(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<Value>> {
    let job = job(&state, &id)?;
    let summary = job.output().map(|o| o.manifest.summary.clone());
    Ok(Json(json!({
        "job_id": job.id,
        "mode": job.mode,
        "status": job.status(),
        "warnings": job.warnings,
        "summary": summary,
    })))
}

#[derive(Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn job_trajectory(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let job = job(&state, &id)?;
    let Some(out) = job.output() else {
        let what = match job.status() {
            JobStatus::Failed { reason } => format!("job failed: {reason}"),
            _ => "job has not finished".into(),
        };
        return Err(ApiError::new(StatusCode::CONFLICT, what));
    };
    match q.format.as_deref() {
        Some("csv") => Ok((
            [(header::CONTENT_TYPE, "text/csv")],
            io::trajectory_csv(&out.plan),
        )
            .into_response()),
        None | Some("json") => Ok(Json(json!({
            "job_id": job.id,
            "manifest": out.manifest,
            "trajectory": io::trajectory_table(&out.plan),
        }))
        .into_response()),
        Some(other) => Err(ApiError::unprocessable(format!("unknown format `{other}`"))),
    }
}

/// Streams the job's iteration records as NDJSON until it finishes.
async fn job_progress(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    let job = job(&state, &id)?;
    let rx = job.subscribe();
    let stream = futures::stream::unfold((job, rx, 0usize), |(job, mut rx, cursor)| async move {
        loop {
            rx.borrow_and_update();
            let (batch, finished) = job.records_since(cursor);
            if !batch.is_empty() {
                let mut lines = String::new();
                for r in &batch {
                    lines.push_str(&serde_json::to_string(r).expect("serialisable"));
                    lines.push('\n');
                }
                let next = cursor + batch.len();
                return Some((
                    Ok::<_, std::convert::Infallible>(Bytes::from(lines)),
                    (job, rx, next),
                ));
            }
            if finished || rx.changed().await.is_err() {
                return None;
            }
        }
    });
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        Body::from_stream(stream),
    )
        .into_response())
}

#[derive(Deserialize)]
struct SaveRequest {
    name: String,
    job_id: String,
}

async fn save_scenario(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: SaveRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::unprocessable(format!("malformed request: {e}")))?;
    if !valid_name(&req.name) {
        return Err(ApiError::unprocessable(
            "scenario names use 1-64 letters, digits, '-', '_' or '.', not starting with '.'",
        ));
    }
    let job = job(&state, &req.job_id)?;
    let out = job
        .output()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "job has not finished"))?;
    let inner = state.inner.clone();
    let name = req.name.clone();
    // Disk writes happen off the async workers; the lock makes check-and-insert atomic.
    let doc = tokio::task::spawn_blocking(move || -> ApiResult<Value> {
        let mut store = inner.store.lock().expect("store poisoned");
        if store.contains(&name) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("scenario `{name}` already exists"),
            ));
        }
        let s = store.save(&name, &out)?;
        Ok(json!({ "name": s.name, "run_id": s.manifest.run_id, "mode": s.manifest.mode }))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok((StatusCode::CREATED, Json(doc)).into_response())
}

async fn list_scenarios(State(state): State<AppState>) -> Json<Value> {
    let list = state.inner.store.lock().expect("store poisoned").list();
    Json(json!({ "scenarios": list }))
}

async fn get_scenario(
    State(state): State<AppState>,
    UrlPath(name): UrlPath<String>,
) -> ApiResult<Json<Value>> {
    let store = state.inner.store.lock().expect("store poisoned");
    let s = store
        .get(&name)
        .ok_or_else(|| ApiError::not_found("scenario", &name))?;
    Ok(Json(serde_json::to_value(s).expect("serialisable")))
}

#[derive(Deserialize)]
struct CompareQuery {
    names: String,
}

async fn compare(
    State(state): State<AppState>,
    Query(q): Query<CompareQuery>,
) -> ApiResult<Json<Value>> {
    let names: Vec<&str> = q
        .names
        .split(',')
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .collect();
    if names.len() < 2 {
        return Err(ApiError::unprocessable(
            "compare needs at least two scenario names",
        ));
    }
    let runs = {
        let store = state.inner.store.lock().expect("store poisoned");
        names
            .iter()
            .map(|n| {
                store
                    .get(n)
                    .map(|s| (n.to_string(), s.trajectories.clone()))
                    .ok_or_else(|| ApiError::not_found("scenario", n))
            })
            .collect::<ApiResult<Vec<_>>>()?
    };
    let cmp = io::compare(&runs)?;
    Ok(Json(serde_json::to_value(cmp).expect("serialisable")))
}
