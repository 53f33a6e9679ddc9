//! A deterministic OpenAI-compatible server for end-to-end tests.
//!
//! It answers `chat/completions` requests built by [`crate::llm::build_prompt`]
//! from an answer book keyed by report fingerprint, falls back to a rule
//! (first allowed code, minimum of the range, empty string) for anything the
//! book lacks, and injects faults from a seeded stream. Every request lands
//! in a ledger so callers can reconcile token accounting exactly.
//!
//! Fault draws are keyed by the request body and the number of times that
//! exact body has been seen, so the outcome of a request does not depend on
//! how concurrent requests interleave.

use crate::llm::split_user_message;
use crate::llm::wire::{ChatCompletionRequest, Role};
use crate::record::TokenUsage;
use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// Answer truncated so it no longer parses.
    MalformedJson,
    /// First requested feature replaced by a value outside its schema.
    WrongEnum,
    /// HTTP 500 with no completion.
    Http500,
    /// Stall for `stall_ms`, then HTTP 504.
    Timeout,
}

/// Sample answers to a report, given by its text rather than fingerprint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportAnswers {
    pub text: String,
    pub values: IndexMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockBehavior {
    #[serde(default = "default_model")]
    pub model_id: String,
    /// Report fingerprint -> feature -> value.
    #[serde(default)]
    pub answer_book: BTreeMap<String, IndexMap<String, Value>>,
    /// Convenience form of `answer_book`, fingerprinted at startup.
    #[serde(default)]
    pub reports: Vec<ReportAnswers>,
    #[serde(default)]
    pub fault_rate: f64,
    #[serde(default)]
    pub fault_kinds: Vec<FaultKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default = "default_stall")]
    pub stall_ms: u64,
    /// When set, requests without this bearer token get HTTP 401.
    #[serde(default)]
    pub required_api_key: Option<String>,
}

fn default_model() -> String {
    "mock-extractor".into()
}

fn default_stall() -> u64 {
    2_000
}

impl Default for MockBehavior {
    fn default() -> Self {
        Self {
            model_id: default_model(),
            answer_book: BTreeMap::new(),
            reports: Vec::new(),
            fault_rate: 0.0,
            fault_kinds: Vec::new(),
            seed: 0,
            latency_ms: 0,
            stall_ms: default_stall(),
            required_api_key: None,
        }
    }
}

impl MockBehavior {
    pub fn add_report(&mut self, text: &str, values: IndexMap<String, Value>) {
        self.answer_book.entry(fingerprint(text)).or_default().extend(values);
    }

    fn normalized(mut self) -> Self {
        for r in std::mem::take(&mut self.reports) {
            self.add_report(&r.text, r.values);
        }
        self.fault_rate = self.fault_rate.clamp(0.0, 1.0);
        self
    }
}

/// Hex SHA-256 of the report text.
pub fn fingerprint(report_text: &str) -> String {
    hex::encode(Sha256::digest(report_text.as_bytes()))
}

/// Deterministic stand-in for a tokenizer: one token per started 4 bytes.
pub fn token_estimate(bytes: usize) -> u64 {
    bytes.div_ceil(4) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub route: String,
    pub status: u16,
    pub fingerprint: Option<String>,
    pub features: Vec<String>,
    pub fault: Option<FaultKind>,
    /// Usage reported in the response body; zero when no completion was sent.
    pub usage: TokenUsage,
    pub content: Option<String>,
}

struct MockState {
    behavior: MockBehavior,
    ledger: Mutex<Vec<LedgerEntry>>,
    seen: Mutex<HashMap<[u8; 32], u64>>,
}

impl MockState {
    fn record(&self, mut entry: LedgerEntry) {
        let mut ledger = self.ledger.lock().expect("ledger lock");
        entry.seq = ledger.len() as u64;
        ledger.push(entry);
    }

    fn draw_fault(&self, body: &[u8]) -> (Option<FaultKind>, String) {
        let digest: [u8; 32] = Sha256::digest(body).into();
        let occurrence = {
            let mut seen = self.seen.lock().expect("seen lock");
            let n = seen.entry(digest).or_insert(0);
            *n += 1;
            *n
        };
        let mut hasher = Sha256::new();
        hasher.update(self.behavior.seed.to_le_bytes());
        hasher.update(digest);
        hasher.update(occurrence.to_le_bytes());
        let seed: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        let id = format!("mock-{}-{occurrence}", &hex::encode(digest)[..12]);
        let b = &self.behavior;
        if b.fault_kinds.is_empty() || b.fault_rate <= 0.0 {
            return (None, id);
        }
        if rng.random::<f64>() < b.fault_rate {
            let kind = b.fault_kinds[rng.random_range(0..b.fault_kinds.len())];
            (Some(kind), id)
        } else {
            (None, id)
        }
    }

    fn authorized(&self, headers: &HeaderMap) -> bool {
        match &self.behavior.required_api_key {
            None => true,
            Some(key) => headers
                .get(axum::http::header::AUTHORIZATION)
                .and_then(|v| v.to_str().ok())
                .is_some_and(|v| v == format!("Bearer {key}")),
        }
    }
}

/// Handle to a running mock server. Dropping it stops the server.
pub struct MockServer {
    addr: SocketAddr,
    state: Arc<MockState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL to hand to an OpenAI-compatible client.
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn ledger(&self) -> Vec<LedgerEntry> {
        self.state.ledger.lock().expect("ledger lock").clone()
    }

    /// Sum of usage over every completion the server sent.
    pub fn billed_usage(&self) -> TokenUsage {
        self.ledger().iter().map(|e| e.usage).sum()
    }

    pub fn chat_requests(&self) -> usize {
        self.ledger().iter().filter(|e| e.route == "chat/completions").count()
    }

    /// Stops accepting connections and waits for the server task to end.
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

fn router(behavior: MockBehavior) -> (Router, Arc<MockState>) {
    let state = Arc::new(MockState {
        behavior: behavior.normalized(),
        ledger: Mutex::new(Vec::new()),
        seen: Mutex::new(HashMap::new()),
    });
    let api = Router::new()
        .route("/models", get(models))
        .route("/chat/completions", post(chat));
    let app = Router::new()
        .merge(api.clone())
        .nest("/v1", api)
        .with_state(state.clone());
    (app, state)
}

/// Binds `127.0.0.1:port` (0 picks a free port) and serves in the background
/// of the current tokio runtime.
pub async fn serve(behavior: MockBehavior, port: u16) -> std::io::Result<MockServer> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    let addr = listener.local_addr()?;
    let (app, state) = router(behavior);
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let _ = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
    });
    Ok(MockServer {
        addr,
        state,
        shutdown: Some(tx),
        task: Some(task),
    })
}

fn error_body(status: StatusCode, message: &str) -> Response {
    (
        status,
        Json(json!({"error": {"message": message, "type": "mock_error"}})),
    )
        .into_response()
}

async fn models(State(state): State<Arc<MockState>>, headers: HeaderMap) -> Response {
    let status = if state.authorized(&headers) {
        StatusCode::OK
    } else {
        StatusCode::UNAUTHORIZED
    };
    state.record(LedgerEntry {
        seq: 0,
        route: "models".into(),
        status: status.as_u16(),
        fingerprint: None,
        features: Vec::new(),
        fault: None,
        usage: TokenUsage::default(),
        content: None,
    });
    if status != StatusCode::OK {
        return error_body(status, "invalid API key");
    }
    Json(json!({
        "object": "list",
        "data": [{"id": state.behavior.model_id, "object": "model", "owned_by": "mock"}]
    }))
    .into_response()
}

async fn chat(State(state): State<Arc<MockState>>, headers: HeaderMap, body: axum::body::Bytes) -> Response {
    let mut entry = LedgerEntry {
        seq: 0,
        route: "chat/completions".into(),
        status: 200,
        fingerprint: None,
        features: Vec::new(),
        fault: None,
        usage: TokenUsage::default(),
        content: None,
    };
    if !state.authorized(&headers) {
        entry.status = 401;
        state.record(entry);
        return error_body(StatusCode::UNAUTHORIZED, "invalid API key");
    }
    let request: ChatCompletionRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            entry.status = 400;
            state.record(entry);
            return error_body(StatusCode::BAD_REQUEST, &format!("bad request: {e}"));
        }
    };

    let (fault, id) = state.draw_fault(&body);
    entry.fault = fault;
    if state.behavior.latency_ms > 0 {
        tokio::time::sleep(Duration::from_millis(state.behavior.latency_ms)).await;
    }

    let extraction = request
        .messages
        .iter()
        .filter(|m| m.role == Role::User)
        .find_map(|m| split_user_message(&m.content));

    let content = match fault {
        Some(FaultKind::Http500) => {
            entry.status = 500;
            state.record(entry);
            return error_body(StatusCode::INTERNAL_SERVER_ERROR, "injected fault");
        }
        Some(FaultKind::Timeout) => {
            tokio::time::sleep(Duration::from_millis(state.behavior.stall_ms)).await;
            entry.status = 504;
            state.record(entry);
            return error_body(StatusCode::GATEWAY_TIMEOUT, "injected stall");
        }
        _ => match extraction {
            Some((fragment, report)) => {
                let properties = match serde_json::from_str::<Value>(fragment) {
                    Ok(Value::Object(mut f)) => match f.remove("properties") {
                        Some(Value::Object(p)) => p,
                        _ => Map::new(),
                    },
                    _ => {
                        entry.status = 400;
                        state.record(entry);
                        return error_body(StatusCode::BAD_REQUEST, "unreadable schema fragment");
                    }
                };
                let fp = fingerprint(report);
                let book = state.behavior.answer_book.get(&fp);
                let mut answer = Map::new();
                for (name, prop) in &properties {
                    let value = book
                        .and_then(|b| b.get(name))
                        .cloned()
                        .unwrap_or_else(|| fallback_value(prop));
                    answer.insert(name.clone(), value);
                }
                entry.fingerprint = Some(fp);
                entry.features = properties.keys().cloned().collect();
                if fault == Some(FaultKind::WrongEnum) {
                    if let Some((name, prop)) = properties.iter().next() {
                        let bad = if prop.get("enum").is_some() || prop.get("oneOf").is_some() {
                            Value::from("__not_a_code__")
                        } else {
                            json!({"invalid": true})
                        };
                        answer.insert(name.clone(), bad);
                    }
                }
                let text = Value::Object(answer).to_string();
                if fault == Some(FaultKind::MalformedJson) {
                    text[..text.len() - 1].to_string()
                } else {
                    text
                }
            }
            None => {
                let last = request
                    .messages
                    .iter()
                    .rev()
                    .find(|m| m.role == Role::User)
                    .map(|m| m.content.as_str())
                    .unwrap_or_default();
                format!("echo: {last}")
            }
        },
    };

    let usage = TokenUsage::new(token_estimate(body.len()), token_estimate(content.len()));
    entry.usage = usage;
    entry.content = Some(content.clone());
    state.record(entry);
    Json(json!({
        "id": id,
        "object": "chat.completion",
        "model": state.behavior.model_id,
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": content},
            "finish_reason": "stop"
        }],
        "usage": {
            "prompt_tokens": usage.prompt_tokens,
            "completion_tokens": usage.completion_tokens,
            "total_tokens": usage.total()
        }
    }))
    .into_response()
}

/// A schema-conforming value chosen by rule.
fn fallback_value(prop: &Value) -> Value {
    if let Some(Value::Array(codes)) = prop.get("enum") {
        if let Some(c) = codes.iter().find(|c| !c.is_null()) {
            return c.clone();
        }
    }
    if let Some(Value::Array(options)) = prop.get("oneOf") {
        if let Some(c) = options.iter().filter_map(|o| o.get("const")).find(|c| !c.is_null()) {
            return c.clone();
        }
    }
    let ty = match prop.get("type") {
        Some(Value::String(t)) => t.as_str(),
        Some(Value::Array(ts)) => ts
            .iter()
            .filter_map(Value::as_str)
            .find(|t| *t != "null")
            .unwrap_or("null"),
        _ => "string",
    };
    let minimum = prop.get("minimum").and_then(Value::as_f64);
    match ty {
        "integer" => Value::from(minimum.map_or(0, |m| m.ceil() as i64)),
        "number" => minimum.map_or(Value::from(0), |m| json!(m)),
        "boolean" => Value::Bool(false),
        "null" => Value::Null,
        _ => Value::from(""),
    }
}
