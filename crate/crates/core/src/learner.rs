//! The learner model: identification facet, goal, style profile, overlay
//! knowledge map, per-course cognitive status and the trace log.
//!
//! Every state-changing method validates before touching the record, so a
//! failed call leaves it unchanged, and appends exactly one trace event on
//! success.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::content::Level;
use crate::ils::{self, IlsError, Instrument, ResponseSheet, StyleId, StyleProfile};
use crate::psychometrics::{modal_style, StyleHistogram};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("login {0:?} is already registered")]
    DuplicateLogin(String),
    #[error("missing required field {0:?}")]
    MissingField(&'static str),
    #[error(transparent)]
    Ils(#[from] IlsError),
    #[error("style already set from the questionnaire")]
    StyleAlreadySet,
    #[error("test fraction {0} outside [0, 1]")]
    OutOfRange(f64),
}

impl LearnerError {
    pub fn code(&self) -> &'static str {
        match self {
            LearnerError::DuplicateLogin(_) => "DuplicateLogin",
            LearnerError::MissingField(_) => "MissingField",
            LearnerError::Ils(e) => e.code(),
            LearnerError::StyleAlreadySet => "StyleAlreadySet",
            LearnerError::OutOfRange(_) => "OutOfRange",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    #[default]
    General,
    InDepth,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Identity {
    #[serde(default)]
    pub login: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub first_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default)]
    pub email: String,
}

impl Identity {
    fn check(&self) -> Result<(), LearnerError> {
        let required = [
            ("login", &self.login),
            ("name", &self.name),
            ("first_name", &self.first_name),
            ("email", &self.email),
        ];
        match required.into_iter().find(|(_, v)| v.trim().is_empty()) {
            Some((field, _)) => Err(LearnerError::MissingField(field)),
            None => Ok(()),
        }
    }
}

/// Salted SHA-256 of the password; both parts hex-encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialHash {
    pub salt: String,
    pub digest: String,
}

impl CredentialHash {
    pub fn new(password: &str, salt: &[u8]) -> Self {
        CredentialHash {
            salt: hex::encode(salt),
            digest: digest(salt, password),
        }
    }

    pub fn verify(&self, password: &str) -> bool {
        hex::decode(&self.salt).is_ok_and(|salt| digest(&salt, password) == self.digest)
    }
}

fn digest(salt: &[u8], password: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(salt);
    hasher.update(password.as_bytes());
    hex::encode(hasher.finalize())
}

/// What a new learner submits on first contact.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Registration {
    #[serde(flatten)]
    pub identity: Identity,
    #[serde(default)]
    pub password: String,
    #[serde(default)]
    pub goal: Goal,
    /// Courses the learner enrols in.
    #[serde(default)]
    pub courses: Vec<String>,
}

/// Lets registration check login uniqueness against whatever holds the records.
pub trait LoginLookup {
    fn login_taken(&self, login: &str) -> bool;
}

impl LoginLookup for HashSet<String> {
    fn login_taken(&self, login: &str) -> bool {
        self.contains(login)
    }
}

impl<T: LoginLookup + ?Sized> LoginLookup for &T {
    fn login_taken(&self, login: &str) -> bool {
        (**self).login_taken(login)
    }
}

/// Stable id derived from the login.
pub fn learner_id_for(login: &str) -> String {
    let hash = Sha256::digest(login.as_bytes());
    format!("L{}", &hex::encode(hash)[..16])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleSource {
    Questionnaire,
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Registered,
    QuestionnaireSubmitted,
    DefaultStyleAssigned,
    Pretest,
    Posttest,
    PageVisited,
    LinkFollowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum TraceDetail {
    Registered { login: String },
    QuestionnaireSubmitted { style_id: StyleId },
    DefaultStyleAssigned { style_id: StyleId },
    Pretest { course_id: String, fraction: f64, level: Level },
    Posttest {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        course_id: Option<String>,
        concept_id: String,
        fraction: f64,
        score: f64,
    },
    PageVisited { course_id: String, concept_id: String },
    LinkFollowed { course_id: String, from: String, to: String },
}

impl TraceDetail {
    pub fn kind(&self) -> TraceKind {
        match self {
            TraceDetail::Registered { .. } => TraceKind::Registered,
            TraceDetail::QuestionnaireSubmitted { .. } => TraceKind::QuestionnaireSubmitted,
            TraceDetail::DefaultStyleAssigned { .. } => TraceKind::DefaultStyleAssigned,
            TraceDetail::Pretest { .. } => TraceKind::Pretest,
            TraceDetail::Posttest { .. } => TraceKind::Posttest,
            TraceDetail::PageVisited { .. } => TraceKind::PageVisited,
            TraceDetail::LinkFollowed { .. } => TraceKind::LinkFollowed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub timestamp: Timestamp,
    #[serde(flatten)]
    pub detail: TraceDetail,
}

/// Recency-weighted overlay update: `prior_weight·old + test_weight·fraction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlayRule {
    pub prior_weight: f64,
    pub test_weight: f64,
}

impl Default for OverlayRule {
    fn default() -> Self {
        OverlayRule {
            prior_weight: 0.3,
            test_weight: 0.7,
        }
    }
}

impl OverlayRule {
    pub fn is_valid(&self) -> bool {
        self.prior_weight >= 0.0 && self.test_weight >= 0.0 && (self.prior_weight + self.test_weight - 1.0).abs() < 1e-9
    }

    pub fn apply(&self, old: f64, fraction: f64) -> f64 {
        (self.prior_weight * old + self.test_weight * fraction).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerRecord {
    pub learner_id: String,
    pub identity: Identity,
    pub credential_hash: CredentialHash,
    pub goal: Goal,
    #[serde(default)]
    pub courses: Vec<String>,
    #[serde(default)]
    pub style: Option<StyleProfile>,
    #[serde(default)]
    pub style_source: Option<StyleSource>,
    /// Last submitted questionnaire, kept for cohort reliability analysis.
    #[serde(default)]
    pub questionnaire: Option<ResponseSheet>,
    /// Overlay knowledge: concept id → score in [0, 1].
    #[serde(default)]
    pub overlay: BTreeMap<String, f64>,
    /// Cognitive status per course.
    #[serde(default)]
    pub status: BTreeMap<String, Level>,
    #[serde(default)]
    pub traces: Vec<TraceEvent>,
}

/// Builds the record for a first-time learner.
pub fn register_learner(
    registration: Registration,
    salt: &[u8],
    logins: impl LoginLookup,
    at: Timestamp,
) -> Result<LearnerRecord, LearnerError> {
    registration.identity.check()?;
    if registration.password.is_empty() {
        return Err(LearnerError::MissingField("password"));
    }
    let login = registration.identity.login.clone();
    if logins.login_taken(&login) {
        return Err(LearnerError::DuplicateLogin(login));
    }
    let mut courses: Vec<String> = Vec::new();
    for course in registration.courses {
        if !courses.contains(&course) {
            courses.push(course);
        }
    }
    let mut record = LearnerRecord {
        learner_id: learner_id_for(&login),
        credential_hash: CredentialHash::new(&registration.password, salt),
        identity: registration.identity,
        goal: registration.goal,
        courses,
        style: None,
        style_source: None,
        questionnaire: None,
        overlay: BTreeMap::new(),
        status: BTreeMap::new(),
        traces: Vec::new(),
    };
    record.push_trace(at, TraceDetail::Registered { login });
    Ok(record)
}

impl LearnerRecord {
    pub fn is_enrolled(&self, course_id: &str) -> bool {
        self.courses.iter().any(|c| c == course_id)
    }

    /// Appends an event, nudging the timestamp forward if needed so traces
    /// stay strictly increasing.
    pub fn push_trace(&mut self, at: Timestamp, detail: TraceDetail) {
        let timestamp = match self.traces.last() {
            Some(last) if last.timestamp >= at => last.timestamp.plus_millis(1),
            _ => at,
        };
        self.traces.push(TraceEvent { timestamp, detail });
    }

    /// Scores the questionnaire and replaces whatever style was there.
    pub fn set_style_from_questionnaire(
        &mut self,
        sheet: &ResponseSheet,
        instrument: &Instrument,
        at: Timestamp,
    ) -> Result<&StyleProfile, LearnerError> {
        let profile = ils::score_sheet(sheet, instrument)?;
        let style_id = profile.style_id;
        self.style = Some(profile);
        self.style_source = Some(StyleSource::Questionnaire);
        self.questionnaire = Some(sheet.clone());
        self.push_trace(at, TraceDetail::QuestionnaireSubmitted { style_id });
        Ok(self.style.as_ref().expect("just set"))
    }

    /// Gives a learner who skipped the questionnaire the cohort's modal style,
    /// at the weakest confidence on every dimension.
    pub fn assign_default_style(
        &mut self,
        cohort: &StyleHistogram,
        at: Timestamp,
    ) -> Result<&StyleProfile, LearnerError> {
        if self.style_source == Some(StyleSource::Questionnaire) {
            return Err(LearnerError::StyleAlreadySet);
        }
        let style_id = modal_style(cohort);
        self.style = Some(StyleProfile::weakest(style_id));
        self.style_source = Some(StyleSource::Default);
        self.push_trace(at, TraceDetail::DefaultStyleAssigned { style_id });
        Ok(self.style.as_ref().expect("just set"))
    }

    /// Overlay score; 0 for concepts never assessed.
    pub fn concept_score(&self, concept_id: &str) -> f64 {
        self.overlay.get(concept_id).copied().unwrap_or(0.0)
    }

    /// Folds a post-test fraction into the overlay and records it.
    pub fn update_concept_score(
        &mut self,
        concept_id: &str,
        test_fraction: f64,
        rule: &OverlayRule,
        at: Timestamp,
    ) -> Result<f64, LearnerError> {
        let score = self.blend_concept_score(concept_id, test_fraction, rule)?;
        self.push_trace(
            at,
            TraceDetail::Posttest {
                course_id: None,
                concept_id: concept_id.to_string(),
                fraction: test_fraction,
                score,
            },
        );
        Ok(score)
    }

    /// The overlay update without a trace; callers record their own event.
    pub(crate) fn blend_concept_score(
        &mut self,
        concept_id: &str,
        test_fraction: f64,
        rule: &OverlayRule,
    ) -> Result<f64, LearnerError> {
        if !(0.0..=1.0).contains(&test_fraction) {
            return Err(LearnerError::OutOfRange(test_fraction));
        }
        let score = rule.apply(self.concept_score(concept_id), test_fraction);
        self.overlay.insert(concept_id.to_string(), score);
        Ok(score)
    }

    pub fn follow_link(&mut self, course_id: &str, from: &str, to: &str, at: Timestamp) {
        self.push_trace(
            at,
            TraceDetail::LinkFollowed {
                course_id: course_id.to_string(),
                from: from.to_string(),
                to: to.to_string(),
            },
        );
    }
}
