//! The pedagogical model: adaptation parameters derived from a style profile,
//! role-based fragment ordering, and next-concept prediction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{CourseGraph, Fragment, Role};
use crate::ils::{Confidence, Dimension, Pole, StyleProfile};
use crate::learner::LearnerRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PedagogyError {
    #[error("learner is not enrolled in course {0:?}")]
    UnknownCourse(String),
}

impl PedagogyError {
    pub fn code(&self) -> &'static str {
        match self {
            PedagogyError::UnknownCourse(_) => "UnknownCourse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    Off,
    Soft,
    Strict,
}

impl From<Confidence> for Strength {
    fn from(c: Confidence) -> Self {
        match c {
            Confidence::Uncertain => Strength::Off,
            Confidence::Moderate => Strength::Soft,
            Confidence::Strong => Strength::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionParams {
    pub preferred_pole: Pole,
    pub strength: Strength,
}

/// Per-dimension preferred pole and how hard to push it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptationParams {
    /// Indexed by dimension order.
    pub dimensions: [DimensionParams; 4],
}

impl AdaptationParams {
    pub fn get(&self, dimension: Dimension) -> DimensionParams {
        self.dimensions[dimension.index()]
    }

    /// Every dimension off; the pipeline becomes the identity.
    pub fn neutral() -> Self {
        AdaptationParams {
            dimensions: Dimension::ALL.map(|d| DimensionParams {
                preferred_pole: d.poles().0,
                strength: Strength::Off,
            }),
        }
    }

    pub fn with(mut self, pole: Pole, strength: Strength) -> Self {
        self.dimensions[pole.dimension().index()] = DimensionParams {
            preferred_pole: pole,
            strength,
        };
        self
    }
}

/// Uncertain → off, moderate → soft, strong → strict.
pub fn adaptation_params(style: &StyleProfile) -> AdaptationParams {
    AdaptationParams {
        dimensions: Dimension::ALL.map(|d| {
            let score = style.score(d);
            DimensionParams {
                preferred_pole: score.pole,
                strength: score.confidence.into(),
            }
        }),
    }
}

const INDUCTIVE_RANK: [Role; 8] = [
    Role::Example,
    Role::Fact,
    Role::Activity,
    Role::Practice,
    Role::Theory,
    Role::Definition,
    Role::Demonstration,
    Role::Discussion,
];

const DEDUCTIVE_RANK: [Role; 8] = [
    Role::Definition,
    Role::Theory,
    Role::Demonstration,
    Role::Example,
    Role::Fact,
    Role::Practice,
    Role::Activity,
    Role::Discussion,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderingPolicy {
    pub role_rank: &'static [Role; 8],
}

impl OrderingPolicy {
    /// Inductive learners start from examples and facts; deductive ones from
    /// definitions and theory.
    pub fn for_reasoning(pole: Pole) -> OrderingPolicy {
        match pole {
            Pole::Deductive => OrderingPolicy { role_rank: &DEDUCTIVE_RANK },
            _ => OrderingPolicy { role_rank: &INDUCTIVE_RANK },
        }
    }

    pub fn rank(&self, role: Role) -> usize {
        self.role_rank.iter().position(|&r| r == role).expect("every role is ranked")
    }
}

/// Stable sort by the reasoning pole's role rank; untouched when reasoning is off.
pub fn order_fragments<'f>(mut fragments: Vec<&'f Fragment>, params: &AdaptationParams) -> Vec<&'f Fragment> {
    let reasoning = params.get(Dimension::Reasoning);
    if reasoning.strength != Strength::Off {
        let policy = OrderingPolicy::for_reasoning(reasoning.preferred_pole);
        fragments.sort_by_key(|f| policy.rank(f.role));
    }
    fragments
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// A concept counts as mastered at or above this overlay score.
    pub mastery_bound: f64,
    /// A prerequisite counts as satisfied at or above this overlay score.
    pub readiness_bound: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            mastery_bound: 0.75,
            readiness_bound: 0.6,
        }
    }
}

/// True when every prerequisite of `concept_id` meets the readiness bound.
pub fn prerequisites_met(course: &CourseGraph, record: &LearnerRecord, concept_id: &str, thresholds: &Thresholds) -> bool {
    course.concept(concept_id).is_some_and(|c| {
        c.prerequisite_ids
            .iter()
            .all(|p| record.concept_score(p) >= thresholds.readiness_bound)
    })
}

/// First unmastered concept, in topological order, whose prerequisites are
/// all ready. `None` once everything is mastered.
pub fn predict_next_concept(
    course: &CourseGraph,
    record: &LearnerRecord,
    thresholds: &Thresholds,
) -> Result<Option<String>, PedagogyError> {
    if !record.is_enrolled(course.course_id()) {
        return Err(PedagogyError::UnknownCourse(course.course_id().to_string()));
    }
    Ok(course
        .topological_order()
        .iter()
        .find(|id| {
            record.concept_score(id) < thresholds.mastery_bound && prerequisites_met(course, record, id, thresholds)
        })
        .cloned())
}
