//! Knowledge tests: a one-time course pre-test that sets the learner's level
//! and seeds the overlay, and repeatable per-concept post-tests that update it.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::content::{CourseGraph, Level};
use crate::learner::{LearnerRecord, TraceDetail};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssessmentError {
    #[error("fraction {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("pre-test for course {0:?} already taken")]
    AlreadyTaken(String),
    #[error("expected {expected} answers, got {got}")]
    AnswerCountMismatch { expected: usize, got: usize },
    #[error("answer for unknown item {0:?}")]
    UnknownItem(String),
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("learner is not enrolled in course {0:?}")]
    NotEnrolled(String),
    #[error("test {0:?} is not the right kind for this submission")]
    WrongTestKind(String),
    #[error("course {0:?} has no such test")]
    NoSuchTest(String),
}

impl AssessmentError {
    pub fn code(&self) -> &'static str {
        match self {
            AssessmentError::OutOfRange(_) => "OutOfRange",
            AssessmentError::AlreadyTaken(_) => "AlreadyTaken",
            AssessmentError::AnswerCountMismatch { .. } => "AnswerCountMismatch",
            AssessmentError::UnknownItem(_) => "UnknownItem",
            AssessmentError::UnknownConcept(_) => "UnknownConcept",
            AssessmentError::NotEnrolled(_) => "NotEnrolled",
            AssessmentError::WrongTestKind(_) => "WrongTestKind",
            AssessmentError::NoSuchTest(_) => "NoSuchTest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestItem {
    pub item_id: String,
    #[serde(default)]
    pub prompt: String,
    pub options: Vec<String>,
    /// Index into `options`.
    pub correct_option: usize,
    /// Concept this item probes; pre-test items with a concept seed its overlay score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestDefinition {
    pub test_id: String,
    pub course_id: String,
    /// Absent for the course pre-test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_id: Option<String>,
    pub items: Vec<TestItem>,
}

impl TestDefinition {
    pub fn validate(&self) -> Result<(), String> {
        if self.items.is_empty() {
            return Err("no items".into());
        }
        let mut seen = HashSet::new();
        for item in &self.items {
            if !seen.insert(item.item_id.as_str()) {
                return Err(format!("duplicate item id {:?}", item.item_id));
            }
            if item.correct_option >= item.options.len() {
                return Err(format!("item {:?}: correct option is not among the options", item.item_id));
            }
        }
        Ok(())
    }

    /// The answer sheet that gets every item right.
    pub fn answer_key(&self) -> Answers {
        self.items.iter().map(|i| (i.item_id.clone(), i.correct_option)).collect()
    }
}

/// Submitted answers: item id → chosen option index.
pub type Answers = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grade {
    pub correct: usize,
    pub total: usize,
    /// Per concept: (correct, total) over the items bound to it.
    pub per_concept: BTreeMap<String, (usize, usize)>,
}

impl Grade {
    pub fn fraction(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Marks a submission. An out-of-range option index counts as wrong.
pub fn grade(test: &TestDefinition, answers: &Answers) -> Result<Grade, AssessmentError> {
    if answers.len() != test.items.len() {
        return Err(AssessmentError::AnswerCountMismatch {
            expected: test.items.len(),
            got: answers.len(),
        });
    }
    let mut result = Grade {
        total: test.items.len(),
        ..Grade::default()
    };
    for item in &test.items {
        let chosen = answers
            .get(&item.item_id)
            .ok_or_else(|| AssessmentError::UnknownItem(unknown_key(test, answers)))?;
        let right = *chosen == item.correct_option;
        result.correct += usize::from(right);
        if let Some(c) = &item.concept_id {
            let slot = result.per_concept.entry(c.clone()).or_default();
            slot.0 += usize::from(right);
            slot.1 += 1;
        }
    }
    Ok(result)
}

fn unknown_key(test: &TestDefinition, answers: &Answers) -> String {
    let known: HashSet<&str> = test.items.iter().map(|i| i.item_id.as_str()).collect();
    answers
        .keys()
        .find(|k| !known.contains(k.as_str()))
        .cloned()
        .unwrap_or_default()
}

/// Cut points from a test fraction to a knowledge level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelThresholds {
    /// Fractions at or above this are at least Intermediate.
    pub intermediate_from: f64,
    /// Fractions strictly above this are Expert.
    pub expert_above: f64,
}

impl Default for LevelThresholds {
    fn default() -> Self {
        LevelThresholds {
            intermediate_from: 0.4,
            expert_above: 0.75,
        }
    }
}

impl LevelThresholds {
    pub fn level(&self, fraction: f64) -> Result<Level, AssessmentError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(AssessmentError::OutOfRange(fraction));
        }
        Ok(if fraction > self.expert_above {
            Level::Expert
        } else if fraction >= self.intermediate_from {
            Level::Intermediate
        } else {
            Level::Beginner
        })
    }
}

/// `< 0.4` Beginner, `0.4..=0.75` Intermediate, `> 0.75` Expert.
pub fn level_from_fraction(fraction: f64) -> Result<Level, AssessmentError> {
    LevelThresholds::default().level(fraction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_id: String,
    pub learner_id: String,
    pub fraction: f64,
    pub level: Option<Level>,
    /// Overlay score after a post-test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_score: Option<f64>,
    pub timestamp: Timestamp,
}

/// Grades the course pre-test, sets the course level and seeds the overlay
/// for every concept the test probes.
pub fn grade_pretest(
    record: &mut LearnerRecord,
    test: &TestDefinition,
    answers: &Answers,
    config: &EngineConfig,
    at: Timestamp,
) -> Result<TestResult, AssessmentError> {
    if test.concept_id.is_some() {
        return Err(AssessmentError::WrongTestKind(test.test_id.clone()));
    }
    let course = &test.course_id;
    if !record.is_enrolled(course) {
        return Err(AssessmentError::NotEnrolled(course.clone()));
    }
    if record.status.contains_key(course) {
        return Err(AssessmentError::AlreadyTaken(course.clone()));
    }
    let grade = grade(test, answers)?;
    let fraction = grade.fraction();
    let level = config.levels.level(fraction)?;

    record.status.insert(course.clone(), level);
    for (concept, (correct, total)) in &grade.per_concept {
        record.overlay.insert(concept.clone(), *correct as f64 / *total as f64);
    }
    record.push_trace(
        at,
        TraceDetail::Pretest {
            course_id: course.clone(),
            fraction,
            level,
        },
    );
    Ok(TestResult {
        test_id: test.test_id.clone(),
        learner_id: record.learner_id.clone(),
        fraction,
        level: Some(level),
        concept_score: None,
        timestamp: record.traces.last().expect("just pushed").timestamp,
    })
}

/// Grades a concept post-test, folds it into the overlay, and recomputes the
/// course level from the mean overlay score across the course's concepts.
pub fn grade_posttest(
    record: &mut LearnerRecord,
    course: &CourseGraph,
    test: &TestDefinition,
    answers: &Answers,
    config: &EngineConfig,
    at: Timestamp,
) -> Result<TestResult, AssessmentError> {
    let concept = test
        .concept_id
        .as_ref()
        .ok_or_else(|| AssessmentError::WrongTestKind(test.test_id.clone()))?;
    if !course.contains(concept) {
        return Err(AssessmentError::UnknownConcept(concept.clone()));
    }
    if test.course_id != course.course_id() {
        return Err(AssessmentError::NoSuchTest(test.test_id.clone()));
    }
    if !record.is_enrolled(course.course_id()) {
        return Err(AssessmentError::NotEnrolled(course.course_id().to_string()));
    }
    let fraction = grade(test, answers)?.fraction();

    let mut next = record.clone();
    let score = next
        .blend_concept_score(concept, fraction, &config.overlay)
        .map_err(|_| AssessmentError::OutOfRange(fraction))?;
    let mean = course.concepts().iter().map(|c| next.concept_score(&c.concept_id)).sum::<f64>()
        / course.concepts().len() as f64;
    let level = config.levels.level(mean.clamp(0.0, 1.0))?;
    next.status.insert(course.course_id().to_string(), level);
    next.push_trace(
        at,
        TraceDetail::Posttest {
            course_id: Some(course.course_id().to_string()),
            concept_id: concept.clone(),
            fraction,
            score,
        },
    );
    *record = next;
    Ok(TestResult {
        test_id: test.test_id.clone(),
        learner_id: record.learner_id.clone(),
        fraction,
        level: Some(level),
        concept_score: Some(score),
        timestamp: record.traces.last().expect("just pushed").timestamp,
    })
}
