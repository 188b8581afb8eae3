//! The course generator: assembles one page for (learner, course, concept).
//!
//! Fragments go through four stages in a fixed order:
//!
//! 1. course filter: the concept's own fragments, authored order
//! 2. style filter: strict dimensions drop fragments tagged only with the
//!    opposite pole
//! 3. level filter: drop fragments above the learner's course level
//! 4. ordering by the reasoning pole's role rank
//!
//! Neither filter may empty a non-empty set. When one would, that filter is
//! skipped and a warning recorded on the page instead.
//!
//! Links cover the concept's prerequisite neighbourhood plus the predicted next
//! concept, annotated by readiness and hidden for sequential learners when not
//! ready.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::content::{self, ContentError, CourseGraph, Fragment, Level};
use crate::ils::{Dimension, Pole};
use crate::learner::{Goal, LearnerRecord, TraceDetail};
use crate::pedagogy::{self, adaptation_params, order_fragments, AdaptationParams, Strength, Thresholds};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("learner is not enrolled in course {0:?}")]
    NotEnrolled(String),
    #[error("pre-test for course {0:?} not taken")]
    PretestMissing(String),
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
}

impl GeneratorError {
    pub fn code(&self) -> &'static str {
        match self {
            GeneratorError::NotEnrolled(_) => "NotEnrolled",
            GeneratorError::PretestMissing(_) => "PretestMissing",
            GeneratorError::UnknownConcept(_) => "UnknownConcept",
        }
    }
}

impl From<ContentError> for GeneratorError {
    fn from(e: ContentError) -> Self {
        match e {
            ContentError::UnknownConcept(c) => GeneratorError::UnknownConcept(c),
            other => GeneratorError::UnknownConcept(other.to_string()),
        }
    }
}

/// A filter that was skipped to keep the page non-empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code")]
pub enum Warning {
    StyleFilterRelaxed { dimension: Dimension, pole: Pole },
    LevelFilterRelaxed { level: Level },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered<'f> {
    pub fragments: Vec<&'f Fragment>,
    pub warnings: Vec<Warning>,
}

/// Second filter. Soft and off dimensions never remove anything; a strict
/// dimension removes fragments exclusively tagged with the opposite pole.
pub fn filter_by_style<'f>(fragments: Vec<&'f Fragment>, params: &AdaptationParams) -> Filtered<'f> {
    let mut current = fragments;
    let mut warnings = Vec::new();
    for dimension in Dimension::ALL {
        let p = params.get(dimension);
        if p.strength != Strength::Strict {
            continue;
        }
        let kept: Vec<&Fragment> = current
            .iter()
            .copied()
            .filter(|f| !f.exclusively_opposes(p.preferred_pole))
            .collect();
        if kept.is_empty() && !current.is_empty() {
            warnings.push(Warning::StyleFilterRelaxed {
                dimension,
                pole: p.preferred_pole,
            });
        } else {
            current = kept;
        }
    }
    Filtered {
        fragments: current,
        warnings,
    }
}

/// Highest fragment level a learner is shown: their course level, capped at
/// Intermediate when the goal is a general overview.
pub fn level_cap(course_level: Level, goal: Goal) -> Level {
    match goal {
        Goal::General => course_level.min(Level::Intermediate),
        Goal::InDepth => course_level,
    }
}

/// Third filter: keep fragments at or below the learner's level.
pub fn filter_by_level<'f>(fragments: Vec<&'f Fragment>, course_level: Level, goal: Goal) -> Filtered<'f> {
    let cap = level_cap(course_level, goal);
    let kept: Vec<&Fragment> = fragments.iter().copied().filter(|f| f.required_level <= cap).collect();
    if kept.is_empty() && !fragments.is_empty() {
        Filtered {
            fragments,
            warnings: vec![Warning::LevelFilterRelaxed { level: cap }],
        }
    } else {
        Filtered {
            fragments: kept,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    Recommended,
    Neutral,
    NotReady,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavLink {
    pub target_concept_id: String,
    pub annotation: Annotation,
    pub visible: bool,
}

/// Outgoing links from `concept_id`, in the course's topological order.
pub fn build_links(
    course: &CourseGraph,
    concept_id: &str,
    record: &LearnerRecord,
    params: &AdaptationParams,
    thresholds: &Thresholds,
) -> Result<Vec<NavLink>, GeneratorError> {
    if !course.contains(concept_id) {
        return Err(GeneratorError::UnknownConcept(concept_id.to_string()));
    }
    let predicted = pedagogy::predict_next_concept(course, record, thresholds)
        .ok()
        .flatten()
        .filter(|p| p != concept_id);

    let mut candidates = course.neighbourhood(concept_id);
    if let Some(p) = &predicted {
        candidates.insert(p.as_str());
    }

    let progress = params.get(Dimension::Progress);
    let hide_unready = progress.preferred_pole == Pole::Sequential && progress.strength != Strength::Off;

    let position: HashMap<&str, usize> = course
        .topological_order()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut targets: Vec<&str> = candidates.into_iter().collect();
    targets.sort_by_key(|t| position[t]);

    Ok(targets
        .into_iter()
        .map(|target| {
            let annotation = if !pedagogy::prerequisites_met(course, record, target, thresholds) {
                Annotation::NotReady
            } else if predicted.as_deref() == Some(target) {
                Annotation::Recommended
            } else {
                Annotation::Neutral
            };
            NavLink {
                target_concept_id: target.to_string(),
                annotation,
                visible: !(hide_unready && annotation == Annotation::NotReady),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub concept_score: f64,
    pub course_level: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoursePage {
    pub course_id: String,
    pub concept_id: String,
    pub learner_id: String,
    /// Fragment ids in presentation order.
    pub fragments: Vec<String>,
    pub links: Vec<NavLink>,
    pub progress: Progress,
    pub warnings: Vec<Warning>,
    pub generated_at: Timestamp,
}

/// Adaptation parameters for a record; neutral until a style is set.
pub fn params_for(record: &LearnerRecord) -> AdaptationParams {
    record.style.as_ref().map_or_else(AdaptationParams::neutral, adaptation_params)
}

/// Builds the page without touching the record.
pub fn build_page(
    record: &LearnerRecord,
    course: &CourseGraph,
    concept_id: &str,
    config: &EngineConfig,
    at: Timestamp,
) -> Result<CoursePage, GeneratorError> {
    let course_id = course.course_id();
    if !record.is_enrolled(course_id) {
        return Err(GeneratorError::NotEnrolled(course_id.to_string()));
    }
    let level = *record
        .status
        .get(course_id)
        .ok_or_else(|| GeneratorError::PretestMissing(course_id.to_string()))?;

    let params = params_for(record);
    let by_course = content::fragments_for_concept(course, concept_id)?;
    let by_style = filter_by_style(by_course, &params);
    let by_level = filter_by_level(by_style.fragments, level, record.goal);
    let ordered = order_fragments(by_level.fragments, &params);
    let links = build_links(course, concept_id, record, &params, &config.thresholds)?;

    let mut warnings = by_style.warnings;
    warnings.extend(by_level.warnings);

    Ok(CoursePage {
        course_id: course_id.to_string(),
        concept_id: concept_id.to_string(),
        learner_id: record.learner_id.clone(),
        fragments: ordered.iter().map(|f| f.fragment_id.clone()).collect(),
        links,
        progress: Progress {
            concept_score: record.concept_score(concept_id),
            course_level: level,
        },
        warnings,
        generated_at: at,
    })
}

/// Builds the page and records the visit.
pub fn generate_page(
    record: &mut LearnerRecord,
    course: &CourseGraph,
    concept_id: &str,
    config: &EngineConfig,
    at: Timestamp,
) -> Result<CoursePage, GeneratorError> {
    let mut page = build_page(record, course, concept_id, config, at)?;
    record.push_trace(
        at,
        TraceDetail::PageVisited {
            course_id: course.course_id().to_string(),
            concept_id: concept_id.to_string(),
        },
    );
    page.generated_at = record.traces.last().expect("just pushed").timestamp;
    Ok(page)
}
