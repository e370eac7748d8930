use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use nidsx_core::pipeline::MetricsArtifact;
use nidsx_core::survey::{
    alpha_report, export_csv, likert_summary, trait_distributions, AlphaReport, InstrumentSet, ItemDistribution, SurveyError,
    SurveyResponse, TraitDistribution,
};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use tower_http::services::{ServeDir, ServeFile};

use crate::artifacts::{Artifacts, ExplanationIndex, InstancePayload, Scenario};
use crate::store::{SessionRecord, Store, StoreEvent};
use crate::{ServiceConfig, ServiceError};

struct Inner {
    artifacts: Result<Arc<Artifacts>, String>,
    instruments: InstrumentSet,
    store: Mutex<Store>,
    admin_token: Option<String>,
}

/// Shared handler state: immutable artifacts plus the single-writer store.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(artifacts: Option<Artifacts>, instruments: InstrumentSet, store: Store, admin_token: Option<String>) -> Self {
        let artifacts = artifacts.map(Arc::new).ok_or_else(|| "no explanation bundle found; run the explain stage".to_string());
        Self(Arc::new(Inner { artifacts, instruments, store: Mutex::new(store), admin_token }))
    }

    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let artifacts = Artifacts::load(&config.artifacts_dir)?;
        if artifacts.is_none() {
            log::warn!("no artifacts under {}; explanation endpoints will answer 503", config.artifacts_dir.display());
        }
        let instruments = match &config.instruments_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?;
                InstrumentSet::from_json(&text)?
            }
            None => InstrumentSet::default(),
        };
        let store = Store::open(&config.store_path)?;
        Ok(Self::new(artifacts, instruments, store, config.admin_token.clone()))
    }

    fn artifacts(&self) -> Result<&Artifacts, ServiceError> {
        self.0.artifacts.as_deref().map_err(|reason| ServiceError::Unavailable(reason.clone()))
    }

    fn check_admin(&self, headers: &HeaderMap) -> Result<(), ServiceError> {
        let Some(expected) = &self.0.admin_token else { return Ok(()) };
        let bearer = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        let direct = headers.get("x-admin-token").and_then(|v| v.to_str().ok());
        if bearer == Some(expected.as_str()) || direct == Some(expected.as_str()) {
            Ok(())
        } else {
            Err(ServiceError::Forbidden)
        }
    }

    /// Runs `f` on the store off the async executor; appends fsync.
    async fn with_store<T: Send + 'static>(
        &self,
        f: impl FnOnce(&mut Store, &InstrumentSet) -> Result<T, ServiceError> + Send + 'static,
    ) -> Result<T, ServiceError> {
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let mut store = state.0.store.lock().map_err(|_| ServiceError::Store("store lock poisoned".into()))?;
            f(&mut store, &state.0.instruments)
        })
        .await
        .map_err(|e| ServiceError::Store(e.to_string()))?
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Builds the API router; `static_dir`, when it exists, is served at `/`.
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/scenarios", get(scenarios))
        .route("/api/explanations", get(explanation_index))
        .route("/api/explanations/{instance}", get(explanation))
        .route("/api/metrics", get(metrics))
        .route("/api/instruments", get(instruments))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/responses", post(post_responses))
        .route("/api/sessions/{id}/complete", post(complete_session))
        .route("/api/analytics", get(analytics))
        .route("/api/export.csv", get(export))
        .with_state(state)
        .layer(CorsLayer::permissive());
    match static_dir.filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(dir.join("index.html")))),
        None => api,
    }
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    artifacts_loaded: bool,
    config_hash: Option<String>,
    sessions: usize,
}

async fn health(State(state): State<AppState>) -> Result<Json<Health>, ServiceError> {
    let sessions = state.with_store(|s, _| Ok(s.len())).await?;
    let artifacts = state.artifacts().ok();
    Ok(Json(Health {
        status: "ok",
        artifacts_loaded: artifacts.is_some(),
        config_hash: artifacts.map(|a| a.config_hash.clone()),
        sessions,
    }))
}

async fn scenarios(State(state): State<AppState>) -> Result<Json<Vec<Scenario>>, ServiceError> {
    Ok(Json(state.artifacts()?.scenarios.clone()))
}

#[derive(Debug, Deserialize)]
struct ModelQuery {
    model: Option<String>,
}

async fn explanation_index(
    State(state): State<AppState>,
    Query(q): Query<ModelQuery>,
) -> Result<Json<ExplanationIndex>, ServiceError> {
    Ok(Json(state.artifacts()?.index(q.model.as_deref())?))
}

async fn explanation(
    State(state): State<AppState>,
    UrlPath(instance): UrlPath<String>,
    Query(q): Query<ModelQuery>,
) -> Result<Json<InstancePayload>, ServiceError> {
    let artifacts = state.artifacts()?;
    let id: usize = instance.parse().map_err(|_| ServiceError::NotFound(format!("instance {instance}")))?;
    Ok(Json(artifacts.instance(q.model.as_deref(), id)?))
}

async fn metrics(State(state): State<AppState>) -> Result<Json<Vec<MetricsArtifact>>, ServiceError> {
    Ok(Json(state.artifacts()?.metrics.clone()))
}

async fn instruments(State(state): State<AppState>) -> Json<InstrumentSet> {
    Json(state.0.instruments.clone())
}

/// Body of `POST /api/sessions`; both fields are optional.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CreateSession {
    pub scenario_id: Option<String>,
}

/// Session state plus where the participant should resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session: SessionRecord,
    /// demographics | personality | scenario | survey | done
    pub stage: String,
    pub missing_items: Vec<String>,
    pub scenario: Option<Scenario>,
}

fn personality_items(set: &InstrumentSet) -> Vec<String> {
    set.items().filter(|i| i.construct.is_trait()).map(|i| i.id.clone()).collect()
}

fn missing(record: &SessionRecord, set: &InstrumentSet) -> Vec<String> {
    let mut out: Vec<String> =
        set.demographics.iter().filter(|f| !record.demographics.contains_key(&f.id)).map(|f| f.id.clone()).collect();
    out.extend(set.items().filter(|i| !record.answers.contains_key(&i.id)).map(|i| i.id.clone()));
    out
}

fn stage(record: &SessionRecord, set: &InstrumentSet) -> &'static str {
    if record.is_completed() {
        return "done";
    }
    if set.demographics.iter().any(|f| !record.demographics.contains_key(&f.id)) {
        return "demographics";
    }
    if personality_items(set).iter().any(|id| !record.answers.contains_key(id)) {
        return "personality";
    }
    let survey: Vec<&str> = set.items().filter(|i| !i.construct.is_trait()).map(|i| i.id.as_str()).collect();
    if survey.iter().all(|id| !record.answers.contains_key(*id)) {
        "scenario"
    } else {
        "survey"
    }
}

impl AppState {
    fn view(&self, record: SessionRecord) -> SessionView {
        let set = &self.0.instruments;
        let scenario = record
            .scenario_id
            .as_ref()
            .and_then(|id| self.artifacts().ok()?.scenarios.iter().find(|s| &s.id == id).cloned());
        SessionView { stage: stage(&record, set).to_string(), missing_items: missing(&record, set), scenario, session: record }
    }
}

async fn create_session(
    State(state): State<AppState>,
    body: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    let request = body.map(|Json(b)| b).unwrap_or_default();
    let scenarios: Vec<String> = state.artifacts().map(|a| a.scenarios.iter().map(|s| s.id.clone()).collect()).unwrap_or_default();
    if let Some(id) = &request.scenario_id {
        if !scenarios.contains(id) {
            return Err(ServiceError::NotFound(format!("scenario {id}")));
        }
    }
    let record = state
        .with_store(move |store, _| {
            let session_id = uuid::Uuid::new_v4().to_string();
            // Rotate through scenarios so participants see different cases.
            let scenario_id = request.scenario_id.or_else(|| (!scenarios.is_empty()).then(|| scenarios[store.len() % scenarios.len()].clone()));
            store.append(StoreEvent::Created { session_id: session_id.clone(), scenario_id, at: now() })?;
            Ok(store.session(&session_id).cloned().expect("just created"))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(state.view(record))))
}

fn lookup<'a>(store: &'a Store, id: &str) -> Result<&'a SessionRecord, ServiceError> {
    store.session(id).ok_or_else(|| ServiceError::NotFound(format!("session {id}")))
}

async fn get_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ServiceError> {
    let record = state.with_store(move |store, _| lookup(store, &id).cloned()).await?;
    Ok(Json(state.view(record)))
}

/// Body of `POST /api/sessions/{id}/responses`: any mix of item answers and
/// demographic fields. The whole batch is validated before anything is stored.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseBatch {
    pub answers: BTreeMap<String, i64>,
    pub demographics: BTreeMap<String, String>,
}

async fn post_responses(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(batch): Json<ResponseBatch>,
) -> Result<StatusCode, ServiceError> {
    state
        .with_store(move |store, set| {
            let record = lookup(store, &id)?;
            if record.is_completed() {
                return Err(ServiceError::Conflict(format!("session {id} is already completed")));
            }
            for (item, &value) in &batch.answers {
                set.validate_answer(item, value)?;
            }
            for (field, value) in &batch.demographics {
                set.validate_demographic(field, value)?;
            }
            if !batch.demographics.is_empty() {
                store.append(StoreEvent::Demographics { session_id: id.clone(), values: batch.demographics, at: now() })?;
            }
            if !batch.answers.is_empty() {
                let values = batch.answers.into_iter().map(|(k, v)| (k, v as u8)).collect();
                store.append(StoreEvent::Answers { session_id: id, values, at: now() })?;
            }
            Ok(())
        })
        .await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn complete_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ServiceError> {
    let record = state
        .with_store(move |store, set| {
            let record = lookup(store, &id)?;
            if record.is_completed() {
                return Err(ServiceError::Conflict(format!("session {id} is already completed")));
            }
            let missing = missing(record, set);
            if !missing.is_empty() {
                return Err(ServiceError::Survey(SurveyError::IncompleteResponse(missing)));
            }
            store.append(StoreEvent::Completed { session_id: id.clone(), at: now() })?;
            Ok(store.session(&id).cloned().expect("exists"))
        })
        .await?;
    Ok(Json(state.view(record)))
}

/// Body of `GET /api/analytics`, computed over completed sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analytics {
    pub total_sessions: usize,
    pub completed_sessions: usize,
    pub alpha: AlphaReport,
    pub likert: Vec<ItemDistribution>,
    pub traits: Vec<TraitDistribution>,
    /// Why parts of the payload are empty, when they are.
    pub notes: Vec<String>,
}

async fn completed_responses(state: &AppState) -> Result<(usize, Vec<SurveyResponse>), ServiceError> {
    state
        .with_store(|store, _| {
            let completed = store.sessions().filter(|s| s.is_completed()).map(SessionRecord::to_response).collect();
            Ok((store.len(), completed))
        })
        .await
}

async fn analytics(State(state): State<AppState>, headers: HeaderMap) -> Result<Json<Analytics>, ServiceError> {
    state.check_admin(&headers)?;
    let (total, responses) = completed_responses(&state).await?;
    let set = &state.0.instruments;
    let alpha = alpha_report(&responses, set)?;
    let mut notes = Vec::new();
    if responses.is_empty() {
        notes.push("no completed sessions yet".to_string());
    }
    for c in &alpha.constructs {
        if let Some(reason) = &c.omitted {
            notes.push(format!("alpha for {} omitted: {reason}", c.label));
        }
    }
    let likert = if responses.is_empty() { Vec::new() } else { likert_summary(&responses, set) };
    let traits = trait_distributions(&responses, set)?;
    Ok(Json(Analytics { total_sessions: total, completed_sessions: responses.len(), alpha, likert, traits, notes }))
}

async fn export(State(state): State<AppState>, headers: HeaderMap) -> Result<impl IntoResponse, ServiceError> {
    state.check_admin(&headers)?;
    let (_, responses) = completed_responses(&state).await?;
    let csv = export_csv(&responses, &state.0.instruments)?;
    Ok((
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8"), (header::CONTENT_DISPOSITION, "attachment; filename=\"responses.csv\"")],
        csv,
    ))
}
