//! HTTP API for live screening sessions.
//!
//! Sessions are kept in memory behind a per-session mutex and journaled to
//! disk so a restarted service can pick them up again. Requests for
//! different sessions run concurrently; mutations of one session are
//! serialized, so of two racing submissions with the same batch token one
//! wins and the other gets `409`.

mod error;
pub mod journal;

use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use screenprio_core::datastore::{Dataset, DocumentRecord};
use screenprio_core::dense::RocchioWeights;
use screenprio_core::session::{
    Batch, BatchDoc, CurvePoint, FeedbackScope, Judgment, SessionConfig, SessionState,
    SessionSummary, Strategy,
};
use screenprio_core::sparse::{Bm25Params, Rm3Params};
use screenprio_core::tar::{LogisticParams, SeedConfig};

pub use error::ApiError;
use journal::{Event, Journal};
pub use journal::{recover_sessions, Quarantined};

pub struct SessionHandle {
    pub session_id: String,
    pub created_at: String,
    pub state: SessionState,
    journal: Option<Journal>,
}

type Shared = Arc<Mutex<SessionHandle>>;

/// Shared service state. The dataset is immutable and read without locks.
#[derive(Clone)]
pub struct AppState {
    dataset: Arc<Dataset>,
    sessions: Arc<RwLock<HashMap<String, Shared>>>,
    journal_dir: Option<PathBuf>,
}

impl AppState {
    /// In-memory only; sessions are lost on restart.
    pub fn new(dataset: Arc<Dataset>) -> Self {
        Self {
            dataset,
            sessions: Arc::default(),
            journal_dir: None,
        }
    }

    /// Journals to `dir` and restores any sessions already journaled there.
    pub fn with_journal(
        dataset: Arc<Dataset>,
        dir: impl Into<PathBuf>,
    ) -> std::io::Result<(Self, Vec<Quarantined>)> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let (restored, quarantined) = recover_sessions(&dir, &dataset)?;
        let mut sessions = HashMap::new();
        for r in restored {
            tracing::info!(session = %r.session_id, iteration = r.state.iteration(), "restored session");
            let handle = SessionHandle {
                session_id: r.session_id.clone(),
                created_at: r.created_at,
                state: r.state,
                journal: Some(r.journal),
            };
            sessions.insert(r.session_id, Arc::new(Mutex::new(handle)));
        }
        Ok((
            Self {
                dataset,
                sessions: Arc::new(RwLock::new(sessions)),
                journal_dir: Some(dir),
            },
            quarantined,
        ))
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session map").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Clone of a session's state, for inspection.
    pub fn session_state(&self, id: &str) -> Option<SessionState> {
        let handle = self.sessions.read().expect("session map").get(id).cloned()?;
        let state = handle.lock().expect("session lock").state.clone();
        Some(state)
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/topics", get(list_topics))
        .route("/api/documents/{doc_id}", get(get_document))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/judgments", post(submit_judgments))
        .with_state(state)
}

/// Serves until `shutdown` resolves. Journals are synced on every write, so
/// nothing is pending at shutdown.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(format!("bad request body: {e}")))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct TopicInfo<'a> {
    topic_id: &'a str,
    title_query: &'a str,
    pool_size: usize,
}

async fn list_topics(State(app): State<AppState>) -> Json<Value> {
    let topics: Vec<TopicInfo> = app
        .dataset
        .topics()
        .iter()
        .map(|t| TopicInfo {
            topic_id: &t.topic_id,
            title_query: &t.title_query,
            pool_size: t.pool.len(),
        })
        .collect();
    Json(json!(topics))
}

async fn get_document(
    State(app): State<AppState>,
    Path(doc_id): Path<String>,
) -> Result<Json<DocumentRecord>, ApiError> {
    app.dataset
        .corpus()
        .get(&doc_id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("unknown document `{doc_id}`")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    topic_id: String,
    #[serde(default = "default_strategy")]
    strategy: Strategy,
    #[serde(default)]
    weights: Option<RocchioWeights>,
    k: usize,
    #[serde(default)]
    feedback_scope: FeedbackScope,
    #[serde(default)]
    seed: Option<SeedConfig>,
    #[serde(default)]
    max_iterations: Option<usize>,
    #[serde(default)]
    normalize: bool,
    #[serde(default)]
    bm25: Option<Bm25Params>,
    #[serde(default)]
    rm3: Option<Rm3Params>,
    #[serde(default)]
    logistic: Option<LogisticParams>,
}

fn default_strategy() -> Strategy {
    Strategy::DenseRocchio
}

impl CreateRequest {
    fn into_config(self) -> SessionConfig {
        let weights = match (self.strategy, self.weights) {
            (Strategy::DenseRocchio, None) => Some(RocchioWeights::default()),
            (_, w) => w,
        };
        let seed = match (self.strategy, self.seed) {
            (Strategy::TarLogistic, None) => Some(SeedConfig::title()),
            (_, s) => s,
        };
        SessionConfig {
            topic_id: self.topic_id,
            strategy: self.strategy,
            k: self.k,
            weights,
            feedback_scope: self.feedback_scope,
            seed,
            max_iterations: self.max_iterations,
            normalize: self.normalize,
            bm25: self.bm25.unwrap_or_default(),
            rm3: self.rm3.unwrap_or_default(),
            logistic: self.logistic.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Progress {
    iteration: usize,
    screened: usize,
    relevant_found: usize,
    total: usize,
    recall_curve: Vec<CurvePoint>,
}

fn progress(state: &SessionState) -> Progress {
    let curve = state.recall_curve();
    let (screened, relevant_found) = curve.last().map_or((0, 0), |p| (p.screened, p.relevant_found));
    Progress {
        iteration: state.iteration(),
        screened,
        relevant_found,
        total: state.pool_size(),
        recall_curve: curve,
    }
}

#[derive(Debug, Serialize)]
struct BatchResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    session_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch_token: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch: Option<Vec<BatchDoc>>,
    progress: Progress,
    finished: bool,
}

fn batch_response(session_id: Option<String>, batch: Option<Batch>, state: &SessionState) -> BatchResponse {
    let (batch_token, batch) = match batch {
        Some(b) => (Some(b.token), Some(b.docs)),
        None => (None, None),
    };
    BatchResponse {
        session_id,
        batch_token,
        batch,
        progress: progress(state),
        finished: state.is_finished(),
    }
}

fn journal_err(e: std::io::Error) -> ApiError {
    tracing::error!(error = %e, "journal write failed");
    ApiError::internal(format!("journal write failed: {e}"))
}

async fn create_session(
    State(app): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<BatchResponse>), ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let config = req.into_config();
    let mut state = SessionState::start(config.clone(), &app.dataset)?;
    let batch = state.next_batch(&app.dataset)?;

    let session_id = uuid::Uuid::new_v4().simple().to_string();
    let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let journal = match &app.journal_dir {
        Some(dir) => {
            let mut j = Journal::create(dir, &session_id).map_err(journal_err)?;
            j.append(vec![
                Event::Created {
                    created_at: created_at.clone(),
                    config,
                },
                Event::BatchIssued {
                    batch_token: batch.token.clone(),
                },
            ])
            .map_err(journal_err)?;
            Some(j)
        }
        None => None,
    };

    let response = batch_response(Some(session_id.clone()), Some(batch), &state);
    let handle = SessionHandle {
        session_id: session_id.clone(),
        created_at,
        state,
        journal,
    };
    app.sessions
        .write()
        .expect("session map")
        .insert(session_id.clone(), Arc::new(Mutex::new(handle)));
    tracing::info!(session = %session_id, "session created");
    Ok((StatusCode::CREATED, Json(response)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgmentRequest {
    batch_token: String,
    judgments: Vec<Judgment>,
}

async fn submit_judgments(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<BatchResponse>, ApiError> {
    let req: JudgmentRequest = parse_body(&body)?;
    let shared = app.session(&id)?;
    let mut handle = shared.lock().expect("session lock");

    // Work on a copy so a failure at any step leaves the session untouched.
    let mut next = handle.state.clone();
    next.submit_feedback(&app.dataset, &req.batch_token, &req.judgments)?;
    let batch = if next.is_finished() {
        None
    } else {
        Some(next.next_batch(&app.dataset)?)
    };

    if let Some(journal) = handle.journal.as_mut() {
        let mut events = vec![Event::JudgmentsApplied {
            batch_token: req.batch_token,
            judgments: req.judgments,
        }];
        if let Some(b) = &batch {
            events.push(Event::BatchIssued {
                batch_token: b.token.clone(),
            });
        }
        journal.append(events).map_err(journal_err)?;
    }
    handle.state = next;
    Ok(Json(batch_response(None, batch, &handle.state)))
}

#[derive(Debug, Serialize)]
struct SessionView {
    session_id: String,
    created_at: String,
    #[serde(flatten)]
    summary: SessionSummary,
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let shared = app.session(&id)?;
    let handle = shared.lock().expect("session lock");
    Ok(Json(SessionView {
        session_id: handle.session_id.clone(),
        created_at: handle.created_at.clone(),
        summary: handle.state.summary(&app.dataset),
    }))
}
