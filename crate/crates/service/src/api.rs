use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use hyperadapt_core::assessment::{self, Answers, TestResult};
use hyperadapt_core::content::{CourseGraph, CoursePackage};
use hyperadapt_core::generator::{self, CoursePage};
use hyperadapt_core::ils::{Answer, Instrument, ResponseSheet, StyleProfile};
use hyperadapt_core::learner::{self, learner_id_for, LearnerRecord, LoginLookup, Registration};
use hyperadapt_core::psychometrics::{InstrumentKind, ReliabilityReport, StyleReport};
use hyperadapt_core::{EngineConfig, Timestamp};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex as AsyncMutex, OwnedMutexGuard};

use crate::auth::{Clock, TokenTable};
use crate::cohort;
use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::store::Store;

type ApiResult<T> = Result<T, ApiError>;

struct Inner {
    store: Store,
    instrument: Instrument,
    engine: EngineConfig,
    clock: Arc<dyn Clock>,
    tokens: TokenTable,
    token_ttl_secs: u64,
    author_token: Option<String>,
    locks: std::sync::Mutex<HashMap<String, Arc<AsyncMutex<()>>>>,
}

/// Shared handler state; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Registers `instrument` in the store so courses can reference it.
    /// Tokens live for an hour and course uploads are open.
    pub fn new(store: Store, instrument: Instrument, engine: EngineConfig, clock: Arc<dyn Clock>) -> Result<Self, crate::StoreError> {
        Self::build(store, instrument, engine, clock, 3600, None)
    }

    pub fn from_config(config: &ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let store = Store::open(&config.store_dir)?;
        let state = Self::build(
            store,
            config.instrument()?,
            config.engine,
            clock,
            config.token_ttl_secs,
            config.author_token.clone(),
        )?;
        Ok(state)
    }

    fn build(
        store: Store,
        instrument: Instrument,
        engine: EngineConfig,
        clock: Arc<dyn Clock>,
        token_ttl_secs: u64,
        author_token: Option<String>,
    ) -> Result<Self, crate::StoreError> {
        store.put_instrument(&instrument)?;
        Ok(AppState(Arc::new(Inner {
            store,
            instrument,
            engine,
            clock,
            tokens: TokenTable::default(),
            token_ttl_secs,
            author_token,
            locks: Default::default(),
        })))
    }

    pub fn store(&self) -> &Store {
        &self.0.store
    }

    pub fn instrument(&self) -> &Instrument {
        &self.0.instrument
    }

    pub fn engine(&self) -> &EngineConfig {
        &self.0.engine
    }

    fn now(&self) -> Timestamp {
        self.0.clock.now()
    }

    /// Serializes all writers of one learner.
    async fn lock(&self, learner_id: &str) -> OwnedMutexGuard<()> {
        let lock = {
            let mut locks = self.0.locks.lock().expect("lock table poisoned");
            locks.entry(learner_id.to_string()).or_default().clone()
        };
        lock.lock_owned().await
    }

    fn authorize(&self, headers: &HeaderMap, learner_id: &str) -> ApiResult<()> {
        let token = bearer(headers).ok_or_else(|| ApiError::unauthorized("missing bearer token"))?;
        let session = self
            .0
            .tokens
            .resolve(token, self.now())
            .ok_or_else(|| ApiError::unauthorized("unknown or expired token"))?;
        if session.learner_id != learner_id {
            return Err(ApiError::new(StatusCode::FORBIDDEN, "Forbidden", "token belongs to another learner"));
        }
        Ok(())
    }

    fn issue(&self, learner_id: &str) -> SessionResponse {
        let (token, session) = self.0.tokens.issue(learner_id, self.now(), self.0.token_ttl_secs);
        SessionResponse {
            learner_id: learner_id.to_string(),
            token,
            expires_at: session.expiry,
        }
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

struct StoredLogins<'s>(&'s Store);

impl LoginLookup for StoredLogins<'_> {
    fn login_taken(&self, login: &str) -> bool {
        self.0.learner_exists(&learner_id_for(login))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/learners", post(register))
        .route("/sessions", post(login))
        .route("/learners/{id}", get(profile))
        .route("/learners/{id}/questionnaire", post(questionnaire))
        .route("/learners/{id}/default-style", post(default_style))
        .route("/learners/{id}/courses/{course}/pretest", post(pretest))
        .route("/learners/{id}/courses/{course}/concepts/{concept}/posttest", post(posttest))
        .route("/learners/{id}/courses/{course}/concepts/{concept}/page", get(page))
        .route("/cohort/style-distribution", get(style_distribution))
        .route("/cohort/alpha", get(alpha))
        .route("/courses", put(put_course).get(list_courses))
        .route("/courses/{id}", get(get_course))
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionResponse {
    pub learner_id: String,
    pub token: String,
    pub expires_at: Timestamp,
}

async fn register(
    State(state): State<AppState>,
    body: Result<Json<Registration>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionResponse>)> {
    let Json(registration) = body?;
    let learner_id = learner_id_for(&registration.identity.login);
    let _guard = state.lock(&learner_id).await;
    for course in &registration.courses {
        if state.store().get_course(course).is_err() {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "IntegrityViolation",
                format!("cannot enroll in unknown course {course:?}"),
            ));
        }
    }
    let mut salt = [0u8; 16];
    rand::rng().fill_bytes(&mut salt);
    let record = learner::register_learner(registration, &salt, StoredLogins(state.store()), state.now())?;
    state.store().put_learner(&record)?;
    Ok((StatusCode::CREATED, Json(state.issue(&record.learner_id))))
}

#[derive(Debug, Deserialize)]
struct Credentials {
    login: String,
    password: String,
}

async fn login(
    State(state): State<AppState>,
    body: Result<Json<Credentials>, JsonRejection>,
) -> ApiResult<Json<SessionResponse>> {
    let Json(creds) = body?;
    let denied = || ApiError::new(StatusCode::UNAUTHORIZED, "InvalidCredentials", "login or password is wrong");
    let record = state.store().get_learner(&learner_id_for(&creds.login)).map_err(|_| denied())?;
    if record.identity.login != creds.login || !record.credential_hash.verify(&creds.password) {
        return Err(denied());
    }
    Ok(Json(state.issue(&record.learner_id)))
}

/// The learner record without its credential hash.
async fn profile(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Json<serde_json::Value>> {
    state.authorize(&headers, &id)?;
    let record = state.store().get_learner(&id)?;
    let mut value = serde_json::to_value(&record).expect("record serializes");
    value.as_object_mut().expect("record is an object").remove("credential_hash");
    Ok(Json(value))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuestionnaireBody {
    /// Defaults to the service's instrument.
    #[serde(default)]
    pub instrument_id: Option<String>,
    pub answers: BTreeMap<String, Answer>,
}

async fn questionnaire(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<QuestionnaireBody>, JsonRejection>,
) -> ApiResult<Json<StyleProfile>> {
    state.authorize(&headers, &id)?;
    let Json(body) = body?;
    let sheet = ResponseSheet {
        instrument_id: body.instrument_id.unwrap_or_else(|| state.instrument().instrument_id.clone()),
        answers: body.answers,
    };
    let profile = {
        let _guard = state.lock(&id).await;
        let mut record = state.store().get_learner(&id)?;
        let profile = record.set_style_from_questionnaire(&sheet, state.instrument(), state.now())?.clone();
        state.store().put_learner(&record)?;
        profile
    };
    cohort::refresh_style_report(state.store())?;
    Ok(Json(profile))
}

async fn default_style(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Json<StyleProfile>> {
    state.authorize(&headers, &id)?;
    let cohort = cohort::style_histogram(&state.store().learners()?);
    let _guard = state.lock(&id).await;
    let mut record = state.store().get_learner(&id)?;
    let profile = record.assign_default_style(&cohort, state.now())?.clone();
    state.store().put_learner(&record)?;
    Ok(Json(profile))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswersBody {
    pub answers: Answers,
}

/// Loads, mutates and stores one learner under its lock.
async fn with_learner<T>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut LearnerRecord, Timestamp) -> ApiResult<T>,
) -> ApiResult<T> {
    let _guard = state.lock(id).await;
    let mut record = state.store().get_learner(id)?;
    let out = f(&mut record, state.now())?;
    state.store().put_learner(&record)?;
    Ok(out)
}

async fn pretest(
    State(state): State<AppState>,
    Path((id, course_id)): Path<(String, String)>,
    headers: HeaderMap,
    body: Result<Json<AnswersBody>, JsonRejection>,
) -> ApiResult<Json<TestResult>> {
    state.authorize(&headers, &id)?;
    let Json(body) = body?;
    let course = state.store().get_course(&course_id)?;
    let test = course
        .pretest()
        .ok_or_else(|| ApiError::not_found("NoSuchTest", format!("course {course_id:?} has no pre-test")))?;
    let engine = *state.engine();
    let result = with_learner(&state, &id, |r, now| Ok(assessment::grade_pretest(r, test, &body.answers, &engine, now)?)).await?;
    Ok(Json(result))
}

fn posttest_of<'c>(course: &'c CourseGraph, concept: &str) -> ApiResult<&'c assessment::TestDefinition> {
    if !course.contains(concept) {
        return Err(ApiError::not_found("UnknownConcept", format!("unknown concept {concept:?}")));
    }
    course
        .posttest_for(concept)
        .ok_or_else(|| ApiError::not_found("NoSuchTest", format!("concept {concept:?} has no post-test")))
}

async fn posttest(
    State(state): State<AppState>,
    Path((id, course_id, concept)): Path<(String, String, String)>,
    headers: HeaderMap,
    body: Result<Json<AnswersBody>, JsonRejection>,
) -> ApiResult<Json<TestResult>> {
    state.authorize(&headers, &id)?;
    let Json(body) = body?;
    let course = state.store().get_course(&course_id)?;
    let test = posttest_of(&course, &concept)?;
    let engine = *state.engine();
    let result = with_learner(&state, &id, |r, now| {
        Ok(assessment::grade_posttest(r, &course, test, &body.answers, &engine, now)?)
    })
    .await?;
    Ok(Json(result))
}

#[derive(Debug, Deserialize)]
pub struct PageQuery {
    /// Concept the learner navigated from; recorded as a followed link.
    pub from: Option<String>,
}

async fn page(
    State(state): State<AppState>,
    Path((id, course_id, concept)): Path<(String, String, String)>,
    headers: HeaderMap,
    query: Result<Query<PageQuery>, QueryRejection>,
) -> ApiResult<Json<CoursePage>> {
    state.authorize(&headers, &id)?;
    let Query(query) = query?;
    let course = state.store().get_course(&course_id)?;
    if let Some(from) = &query.from {
        if !course.contains(from) {
            return Err(ApiError::not_found("UnknownConcept", format!("unknown concept {from:?}")));
        }
    }
    let engine = *state.engine();
    let page = with_learner(&state, &id, |r, now| {
        // Validate before recording the navigation.
        generator::build_page(r, &course, &concept, &engine, now)?;
        if let Some(from) = &query.from {
            r.follow_link(course.course_id(), from, &concept, now);
        }
        Ok(generator::generate_page(r, &course, &concept, &engine, now)?)
    })
    .await?;
    Ok(Json(page))
}

async fn style_distribution(State(state): State<AppState>) -> ApiResult<Json<StyleReport>> {
    Ok(Json(cohort::refresh_style_report(state.store())?))
}

#[derive(Debug, Deserialize)]
pub struct AlphaQuery {
    pub kind: Option<String>,
}

async fn alpha(
    State(state): State<AppState>,
    query: Result<Query<AlphaQuery>, QueryRejection>,
) -> ApiResult<Json<ReliabilityReport>> {
    let Query(query) = query?;
    let kind = match query.kind.as_deref() {
        None => InstrumentKind::Preference,
        Some(raw) => raw
            .parse()
            .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "InvalidKind", format!("unknown instrument kind {raw:?}")))?,
    };
    Ok(Json(cohort::alpha_report(state.store(), state.instrument(), kind)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourseSummary {
    pub course_id: String,
    pub concepts: usize,
    pub fragments: usize,
}

async fn put_course(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Result<Json<CoursePackage>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CourseSummary>)> {
    if let Some(expected) = &state.0.author_token {
        if bearer(&headers) != Some(expected.as_str()) {
            return Err(ApiError::unauthorized("course upload needs the author token"));
        }
    }
    let Json(package) = body?;
    let course = CourseGraph::from_package(package)?;
    state.store().put_course(&course)?;
    Ok((
        StatusCode::CREATED,
        Json(CourseSummary {
            course_id: course.course_id().to_string(),
            concepts: course.concepts().len(),
            fragments: course.fragments().len(),
        }),
    ))
}

async fn list_courses(State(state): State<AppState>) -> ApiResult<Json<Vec<String>>> {
    Ok(Json(state.store().course_ids()?))
}

async fn get_course(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<CoursePackage>> {
    Ok(Json(state.store().get_course(&id)?.package().clone()))
}
