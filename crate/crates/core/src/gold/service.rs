//! Blinded REST service for working through an adjudication queue.
//!
//! Routes:
//!
//! | method | path | purpose |
//! |---|---|---|
//! | GET | `/queue/next` | first unresolved conflict, or `done: true` |
//! | GET | `/reports/{id}/text` | report text as `text/plain` |
//! | POST | `/resolutions` | record a decision (optimistic concurrency on `version`) |
//! | GET | `/progress` | resolved / remaining / total |
//! | POST | `/assist` | relay a question to the assistant model, if configured |
//!
//! Nothing served here says which annotator produced which candidate.

use super::{AdjudicationQueue, Conflict, Decision, GoldError, Resolution, ResolutionLog};
use crate::llm::{ChatClient, ChatMessage};
use crate::schema::{ExtractionSchema, FeatureSpec};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use tokio::sync::watch;

pub struct ServiceConfig {
    pub queue: AdjudicationQueue,
    /// Report id to the report text shown to the adjudicator.
    pub reports: HashMap<String, String>,
    pub schema: Option<ExtractionSchema>,
    pub log_path: Option<PathBuf>,
    pub assistant: Option<ChatClient>,
    pub ui_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(queue: AdjudicationQueue) -> Self {
        Self {
            queue,
            reports: HashMap::new(),
            schema: None,
            log_path: None,
            assistant: None,
            ui_dir: None,
        }
    }
}

struct Progress {
    versions: Vec<u64>,
    resolutions: Vec<Option<Resolution>>,
    log: Option<ResolutionLog>,
}

pub struct AdjudicationState {
    queue: AdjudicationQueue,
    index: HashMap<String, usize>,
    reports: HashMap<String, String>,
    schema: Option<ExtractionSchema>,
    assistant: Option<ChatClient>,
    ui_dir: Option<PathBuf>,
    progress: Mutex<Progress>,
    done: watch::Sender<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressView {
    pub resolved: usize,
    pub remaining: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureView {
    pub name: String,
    pub description: String,
    pub kind: Option<String>,
    pub unit: Option<String>,
    pub codes: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub label: String,
    pub value: Value,
}

/// What the adjudicator sees for one conflict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItemView {
    pub conflict_id: String,
    pub version: u64,
    pub queue_position: usize,
    pub report_id: String,
    pub feature: FeatureView,
    pub candidates: [CandidateView; 2],
    pub progress: ProgressView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextResponse {
    pub done: bool,
    pub item: Option<QueueItemView>,
    pub progress: ProgressView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRequest {
    pub conflict_id: String,
    pub version: u64,
    pub decision: Decision,
    #[serde(default)]
    pub ocr_error_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionAck {
    pub conflict_id: String,
    pub version: u64,
    pub progress: ProgressView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistRequest {
    pub conflict_id: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistReply {
    pub reply: String,
}

impl AdjudicationState {
    /// Builds the service state, replaying `log_path` if it already holds
    /// resolutions so an interrupted session resumes where it stopped.
    pub fn new(config: ServiceConfig) -> Result<Arc<Self>, GoldError> {
        let n = config.queue.conflicts.len();
        let index: HashMap<String, usize> = config
            .queue
            .conflicts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.conflict_id.clone(), i))
            .collect();
        let mut progress = Progress {
            versions: vec![0; n],
            resolutions: vec![None; n],
            log: None,
        };
        if let Some(path) = &config.log_path {
            let log = ResolutionLog::open(path)?;
            for r in log.replay()? {
                let i = *index
                    .get(&r.conflict_id)
                    .ok_or_else(|| GoldError::UnknownConflict(r.conflict_id.clone()))?;
                progress.versions[i] = 1;
                progress.resolutions[i] = Some(r);
            }
            progress.log = Some(log);
        }
        let all_done = progress.resolutions.iter().all(Option::is_some);
        let (done, _) = watch::channel(all_done);
        Ok(Arc::new(Self {
            queue: config.queue,
            index,
            reports: config.reports,
            schema: config.schema,
            assistant: config.assistant,
            ui_dir: config.ui_dir,
            progress: Mutex::new(progress),
            done,
        }))
    }

    /// Becomes `true` once every conflict has a resolution.
    pub fn subscribe_done(&self) -> watch::Receiver<bool> {
        self.done.subscribe()
    }

    /// The current resolution of every resolved conflict, in queue order.
    pub fn resolutions(&self) -> Vec<Resolution> {
        let p = self.progress.lock().expect("state lock");
        p.resolutions.iter().flatten().cloned().collect()
    }

    pub fn progress(&self) -> ProgressView {
        let p = self.progress.lock().expect("state lock");
        progress_view(&p)
    }

    fn feature_view(&self, name: &str) -> FeatureView {
        let spec: Option<&FeatureSpec> = self.schema.as_ref().and_then(|s| s.feature(name));
        FeatureView {
            name: name.to_string(),
            description: spec.map(|f| f.description.clone()).unwrap_or_default(),
            kind: spec.map(|f| {
                serde_json::to_value(f.kind)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default()
            }),
            unit: spec.and_then(|f| f.unit.clone()),
            codes: spec
                .map(|f| f.allowed_codes.iter().map(|c| c.code.clone()).collect())
                .unwrap_or_default(),
        }
    }

    fn view(&self, c: &Conflict, version: u64, progress: ProgressView) -> QueueItemView {
        QueueItemView {
            conflict_id: c.conflict_id.clone(),
            version,
            queue_position: c.queue_position,
            report_id: c.report_id.clone(),
            feature: self.feature_view(&c.feature),
            candidates: [
                CandidateView {
                    label: "A".into(),
                    value: c.candidate_a.clone(),
                },
                CandidateView {
                    label: "B".into(),
                    value: c.candidate_b.clone(),
                },
            ],
            progress,
        }
    }
}

fn progress_view(p: &Progress) -> ProgressView {
    let total = p.resolutions.len();
    let resolved = p.resolutions.iter().filter(|r| r.is_some()).count();
    ProgressView {
        resolved,
        remaining: total - resolved,
        total,
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn next_item(State(state): State<Arc<AdjudicationState>>) -> Json<NextResponse> {
    let p = state.progress.lock().expect("state lock");
    let progress = progress_view(&p);
    let item = p
        .resolutions
        .iter()
        .position(Option::is_none)
        .map(|i| state.view(&state.queue.conflicts[i], p.versions[i], progress));
    Json(NextResponse {
        done: item.is_none(),
        item,
        progress,
    })
}

async fn report_text(State(state): State<Arc<AdjudicationState>>, Path(id): Path<String>) -> Response {
    match state.reports.get(&id) {
        Some(text) => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text.clone()).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no report {id}")),
    }
}

async fn progress(State(state): State<Arc<AdjudicationState>>) -> Json<ProgressView> {
    Json(state.progress())
}

async fn resolve(State(state): State<Arc<AdjudicationState>>, Json(req): Json<ResolutionRequest>) -> Response {
    let Some(&i) = state.index.get(&req.conflict_id) else {
        return error(StatusCode::NOT_FOUND, format!("no conflict {}", req.conflict_id));
    };
    let conflict = &state.queue.conflicts[i];
    let resolution = Resolution::new(req.conflict_id.clone(), req.decision, req.ocr_error_flag);
    if let Err(e) = resolution.check(conflict) {
        return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string());
    }
    if let (Decision::Other(v), Some(spec)) = (
        &resolution.decision,
        state.schema.as_ref().and_then(|s| s.feature(&conflict.feature)),
    ) {
        let mut problems = Vec::new();
        crate::schema::validate::check_value(spec, v, &mut problems);
        if let Some(p) = problems.first() {
            return error(StatusCode::UNPROCESSABLE_ENTITY, p.to_string());
        }
    }

    let mut p = state.progress.lock().expect("state lock");
    if p.versions[i] != req.version {
        return error(
            StatusCode::CONFLICT,
            format!("stale version {} (current {})", req.version, p.versions[i]),
        );
    }
    if let Some(log) = p.log.as_mut() {
        if let Err(e) = log.append(&resolution) {
            return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
        }
    }
    p.versions[i] += 1;
    p.resolutions[i] = Some(resolution);
    let progress = progress_view(&p);
    let version = p.versions[i];
    drop(p);
    if progress.remaining == 0 {
        state.done.send_replace(true);
    }
    Json(ResolutionAck {
        conflict_id: req.conflict_id,
        version,
        progress,
    })
    .into_response()
}

/// The assistant gets the report, the feature, and the two blinded candidates.
fn assist_messages(state: &AdjudicationState, c: &Conflict, question: &str) -> Vec<ChatMessage> {
    let feature = state.feature_view(&c.feature);
    let report = state.reports.get(&c.report_id).map(String::as_str).unwrap_or("");
    let mut user = format!("Report:\n{report}\n\nFeature: {}", feature.name);
    if !feature.description.is_empty() {
        user.push_str(&format!(" ({})", feature.description));
    }
    user.push_str(&format!(
        "\nCandidate A: {}\nCandidate B: {}\n\nQuestion: {question}",
        c.candidate_a, c.candidate_b
    ));
    vec![
        ChatMessage::system(
            "You assist a physician who is choosing between two candidate values for one \
             feature of a pathology report. Answer from the report text only.",
        ),
        ChatMessage::user(user),
    ]
}

async fn assist(State(state): State<Arc<AdjudicationState>>, Json(req): Json<AssistRequest>) -> Response {
    let Some(client) = &state.assistant else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no assistant configured");
    };
    let Some(&i) = state.index.get(&req.conflict_id) else {
        return error(StatusCode::NOT_FOUND, format!("no conflict {}", req.conflict_id));
    };
    let messages = assist_messages(&state, &state.queue.conflicts[i], &req.question);
    match client.chat_text(&messages).await {
        Ok(out) => Json(AssistReply { reply: out.content }).into_response(),
        Err(e) => error(StatusCode::BAD_GATEWAY, e.to_string()),
    }
}

pub fn router(state: Arc<AdjudicationState>) -> Router {
    let ui_dir = state.ui_dir.clone();
    let app = Router::new()
        .route("/queue/next", get(next_item))
        .route("/reports/{id}/text", get(report_text))
        .route("/resolutions", post(resolve))
        .route("/progress", get(progress))
        .route("/assist", post(assist))
        .with_state(state);
    match ui_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}
