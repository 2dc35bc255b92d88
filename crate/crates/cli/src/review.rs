//! HTTP+JSON service behind the annotation review timeline.
//!
//! The annotation file on disk is the only state: every mutation goes through
//! `apply_review_edits` under a per-episode lock and is written back by
//! atomic rename, so a restarted service reads exactly what was last accepted.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use teleop_core::annotate::{
    annotate_episode, apply_review_edits, extract_subtasks, max_pool, propose_breakpoints, AnnotateError,
    BreakpointProposal, ReviewEdit, ReviewStatus, SegmentationParams, SegmentationSignals, SubtaskAnnotation,
    TranscriptSegment,
};
use teleop_core::dataio::{annotations_path, episode_path, read_annotations, read_episode, write_annotations, write_episode, DatasetError, Episode};

pub const SUBTASK_DIR: &str = "subtasks";

#[derive(Debug, Clone)]
pub struct ReviewConfig {
    pub dir: PathBuf,
    pub params: SegmentationParams,
    /// Per-joint action bound used when re-chunking extracted subtasks.
    pub max_step: f64,
}

#[derive(Clone)]
struct AppState {
    cfg: Arc<ReviewConfig>,
    locks: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
}

impl AppState {
    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut map = self.locks.lock().expect("lock table poisoned");
        map.entry(id.to_string()).or_default().clone()
    }
}

/// Current review state of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSessionState {
    pub episode_id: String,
    pub annotations: Vec<SubtaskAnnotation>,
    /// Edited since proposal and not yet approved.
    pub dirty: bool,
    pub approved: bool,
}

impl ReviewSessionState {
    fn new(episode_id: &str, annotations: Vec<SubtaskAnnotation>) -> Self {
        let approved = annotations.iter().all(|a| a.review_status == ReviewStatus::Approved);
        let dirty = !approved && annotations.iter().any(|a| a.review_status == ReviewStatus::Edited);
        Self {
            episode_id: episode_id.to_string(),
            annotations,
            dirty,
            approved,
        }
    }
}

#[derive(Debug, Serialize)]
struct ApiError {
    code: String,
    message: String,
}

struct Failure(StatusCode, ApiError);

impl Failure {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self(
            status,
            ApiError {
                code: code.into(),
                message: message.into(),
            },
        )
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", format!("no episode {id:?}"))
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<AnnotateError> for Failure {
    fn from(e: AnnotateError) -> Self {
        let status = match e {
            AnnotateError::Immutable(_) => StatusCode::LOCKED,
            AnnotateError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::CONFLICT,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, Failure>;

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.starts_with('.') && !id.contains(['/', '\\'])
}

fn load_episode(cfg: &ReviewConfig, id: &str) -> Result<Episode, Failure> {
    let path = episode_path(&cfg.dir, id);
    if !valid_id(id) || !path.is_file() {
        return Err(Failure::not_found(id));
    }
    Ok(read_episode(&path)?)
}

/// Stored annotations, or fresh proposals when none were saved yet.
fn load_annotations(cfg: &ReviewConfig, id: &str, episode: Option<&Episode>) -> Result<Vec<SubtaskAnnotation>, Failure> {
    let path = annotations_path(&cfg.dir, id);
    if path.is_file() {
        return Ok(read_annotations(&path)?);
    }
    let owned;
    let ep = match episode {
        Some(e) => e,
        None => {
            owned = load_episode(cfg, id)?;
            &owned
        }
    };
    Ok(annotate_episode(ep, &cfg.params)?)
}

#[derive(Debug, Serialize)]
struct EpisodeListing {
    id: String,
    task: String,
    samples: usize,
    duration: f64,
    approved: bool,
    annotated: bool,
}

async fn list_episodes(State(st): State<AppState>) -> ApiResult<Vec<EpisodeListing>> {
    let dir = &st.cfg.dir;
    let entries = std::fs::read_dir(dir).map_err(|e| DatasetError::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "jsonl"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    ids.sort();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let ep = match read_episode(&episode_path(dir, &id)) {
            Ok(ep) => ep,
            Err(e) => {
                log::warn!("skipping {id}: {e}");
                continue;
            }
        };
        let ann_path = annotations_path(dir, &id);
        let approved = ann_path.is_file()
            && read_annotations(&ann_path)
                .map(|a| a.iter().all(|x| x.review_status == ReviewStatus::Approved))
                .unwrap_or(false);
        out.push(EpisodeListing {
            duration: ep.time_bounds().map_or(0.0, |(a, b)| b - a),
            samples: ep.len(),
            task: ep.task,
            id,
            approved,
            annotated: ann_path.is_file(),
        });
    }
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
struct SignalQuery {
    channels: Option<String>,
    decimate: Option<usize>,
}

#[derive(Debug, Default, Serialize)]
struct Signals {
    episode_id: String,
    decimate: usize,
    timestamps: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    velocity_norm: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left_gripper: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right_gripper: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    breakpoints: Option<Vec<BreakpointProposal>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<Vec<TranscriptSegment>>,
}

const CHANNELS: [&str; 4] = ["velocity", "gripper", "breakpoints", "transcript"];

async fn get_signals(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<SignalQuery>,
) -> ApiResult<Signals> {
    let ep = load_episode(&st.cfg, &id)?;
    let wanted: Vec<String> = match &q.channels {
        Some(c) => c.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => CHANNELS.iter().map(|s| s.to_string()).collect(),
    };
    if let Some(bad) = wanted.iter().find(|c| !CHANNELS.contains(&c.as_str())) {
        return Err(Failure::new(StatusCode::BAD_REQUEST, "invalid-input", format!("unknown channel {bad:?}")));
    }
    let has = |c: &str| wanted.iter().any(|w| w == c);
    let factor = q.decimate.unwrap_or(1).max(1);
    let sig = SegmentationSignals::from_episode(&ep, st.cfg.params.channels.as_deref())?;
    let stride = |v: &[f64]| v.iter().step_by(factor).copied().collect::<Vec<_>>();

    let mut out = Signals {
        episode_id: id,
        decimate: factor,
        timestamps: stride(&sig.timestamps),
        ..Default::default()
    };
    if has("velocity") {
        out.velocity_norm = Some(max_pool(&sig.velocity_norm, factor));
    }
    if has("gripper") {
        let left: Vec<f64> = ep.observations.iter().map(|o| o.gripper.left.aperture).collect();
        let right: Vec<f64> = ep.observations.iter().map(|o| o.gripper.right.aperture).collect();
        out.left_gripper = Some(stride(&left));
        out.right_gripper = Some(stride(&right));
    }
    if has("breakpoints") && ep.len() >= 2 {
        out.breakpoints = Some(propose_breakpoints(&ep, &st.cfg.params)?);
    }
    if has("transcript") {
        out.transcript = Some(ep.transcript.clone());
    }
    Ok(Json(out))
}

async fn get_annotations(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<ReviewSessionState> {
    if !valid_id(&id) || !episode_path(&st.cfg.dir, &id).is_file() {
        return Err(Failure::not_found(&id));
    }
    let anns = load_annotations(&st.cfg, &id, None)?;
    Ok(Json(ReviewSessionState::new(&id, anns)))
}

async fn put_annotations(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(edits): Json<Vec<ReviewEdit>>,
) -> ApiResult<ReviewSessionState> {
    if !valid_id(&id) || !episode_path(&st.cfg.dir, &id).is_file() {
        return Err(Failure::not_found(&id));
    }
    let lock = st.lock_for(&id);
    let _guard = lock.lock().await;
    let current = load_annotations(&st.cfg, &id, None)?;
    let updated = apply_review_edits(&current, &edits, &st.cfg.params)?;
    write_annotations(&updated, &annotations_path(&st.cfg.dir, &id))?;
    Ok(Json(ReviewSessionState::new(&id, updated)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ApproveResponse {
    pub episode_id: String,
    pub approved: bool,
    pub subtasks: Vec<String>,
}

async fn approve(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<ApproveResponse> {
    let ep = load_episode(&st.cfg, &id)?;
    let lock = st.lock_for(&id);
    let _guard = lock.lock().await;
    let current = load_annotations(&st.cfg, &id, Some(&ep))?;
    let approved = apply_review_edits(&current, &[ReviewEdit::ApproveAll], &st.cfg.params)?;
    write_annotations(&approved, &annotations_path(&st.cfg.dir, &id))?;

    let subs = extract_subtasks(&ep, &approved, st.cfg.max_step)?;
    let out_dir = st.cfg.dir.join(SUBTASK_DIR);
    std::fs::create_dir_all(&out_dir).map_err(|e| DatasetError::Io {
        path: out_dir.clone(),
        source: e,
    })?;
    for s in &subs {
        write_episode(s, &episode_path(&out_dir, &s.id))?;
    }
    Ok(Json(ApproveResponse {
        episode_id: id,
        approved: true,
        subtasks: subs.into_iter().map(|s| s.id).collect(),
    }))
}

/// Builds the API router; `ui_dir` is served at `/` when given.
pub fn router(cfg: ReviewConfig, ui_dir: Option<&Path>) -> Router {
    let state = AppState {
        cfg: Arc::new(cfg),
        locks: Arc::default(),
    };
    let api = Router::new()
        .route("/episodes", get(list_episodes))
        .route("/episodes/{id}/signals", get(get_signals))
        .route("/episodes/{id}/annotations", get(get_annotations).put(put_annotations))
        .route("/episodes/{id}/approve", post(approve))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(cfg: ReviewConfig, port: u16, ui_dir: Option<&Path>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    log::info!("review service on http://{}", listener.local_addr()?);
    axum::serve(listener, router(cfg, ui_dir)).await
}
