//! Domain model and multimedia base: concepts, prerequisites, objectives and
//! the metadata-tagged fragments the generator filters.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::TestDefinition;
use crate::ils::{Dimension, Pole};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContentError {
    #[error("malformed course package: {0}")]
    MalformedDocument(String),
    #[error("prerequisite cycle: {}", .0.join(" -> "))]
    CyclicPrerequisites(Vec<String>),
    #[error("{kind} {from:?} references unknown {target_kind} {target:?}")]
    DanglingReference {
        kind: &'static str,
        from: String,
        target_kind: &'static str,
        target: String,
    },
    #[error("course has no concepts")]
    EmptyCourse,
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("concept {0:?} is not reachable from any objective")]
    UnreachableConcept(String),
    #[error("invalid test {test_id:?}: {reason}")]
    InvalidTest { test_id: String, reason: String },
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
}

impl ContentError {
    pub fn code(&self) -> &'static str {
        match self {
            ContentError::MalformedDocument(_) => "MalformedDocument",
            ContentError::CyclicPrerequisites(_) => "CyclicPrerequisites",
            ContentError::DanglingReference { .. } => "DanglingReference",
            ContentError::EmptyCourse => "EmptyCourse",
            ContentError::DuplicateId { .. } => "DuplicateId",
            ContentError::UnreachableConcept(_) => "UnreachableConcept",
            ContentError::InvalidTest { .. } => "InvalidTest",
            ContentError::UnknownConcept(_) => "UnknownConcept",
        }
    }
}

/// Knowledge level, used both as a learner's course status and as a
/// fragment's entry requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Beginner,
    Intermediate,
    Expert,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Media {
    Text,
    Audio,
    Image,
    Chart,
    Animation,
    Video,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Example,
    Fact,
    Activity,
    Practice,
    Theory,
    Definition,
    Demonstration,
    Discussion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub objective_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub concept_id: String,
    pub title: String,
    #[serde(default)]
    pub objective_ids: Vec<String>,
    #[serde(default)]
    pub prerequisite_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub fragment_id: String,
    pub concept_id: String,
    pub media: Media,
    pub role: Role,
    /// Poles this fragment suits. A fragment may list both poles of a
    /// dimension; listing neither leaves it neutral on that dimension.
    #[serde(default)]
    pub pole_tags: BTreeSet<Pole>,
    pub required_level: Level,
    pub body_ref: String,
}

impl Fragment {
    /// True when the fragment is tagged with `pole`'s opposite and not with `pole`.
    pub fn exclusively_opposes(&self, pole: Pole) -> bool {
        self.pole_tags.contains(&pole.opposite()) && !self.pole_tags.contains(&pole)
    }

    pub fn tags_on(&self, dimension: Dimension) -> impl Iterator<Item = Pole> + '_ {
        self.pole_tags.iter().copied().filter(move |p| p.dimension() == dimension)
    }
}

/// Course package document as authored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoursePackage {
    pub course_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument_id: Option<String>,
    #[serde(default)]
    pub objectives: Vec<Objective>,
    #[serde(default)]
    pub concepts: Vec<Concept>,
    #[serde(default)]
    pub fragments: Vec<Fragment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretest: Option<TestDefinition>,
    #[serde(default)]
    pub posttests: Vec<TestDefinition>,
}

/// A validated course: acyclic prerequisites, no dangling ids, every concept
/// reachable from an objective. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CoursePackage", try_from = "CoursePackage")]
pub struct CourseGraph {
    package: CoursePackage,
    concept_index: HashMap<String, usize>,
    fragments_by_concept: HashMap<String, Vec<usize>>,
    dependents: HashMap<String, Vec<String>>,
    topo_order: Vec<String>,
}

impl From<CourseGraph> for CoursePackage {
    fn from(graph: CourseGraph) -> Self {
        graph.package
    }
}

impl TryFrom<CoursePackage> for CourseGraph {
    type Error = ContentError;

    fn try_from(package: CoursePackage) -> Result<Self, Self::Error> {
        CourseGraph::from_package(package)
    }
}

/// Parses and validates a course package.
pub fn ingest_course(document: &str) -> Result<CourseGraph, ContentError> {
    let package: CoursePackage =
        serde_json::from_str(document).map_err(|e| ContentError::MalformedDocument(e.to_string()))?;
    CourseGraph::from_package(package)
}

fn unique<'a>(kind: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<HashSet<&'a str>, ContentError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ContentError::DuplicateId { kind, id: id.to_string() });
        }
    }
    Ok(seen)
}

fn dangling(kind: &'static str, from: &str, target_kind: &'static str, target: &str) -> ContentError {
    ContentError::DanglingReference {
        kind,
        from: from.to_string(),
        target_kind,
        target: target.to_string(),
    }
}

impl CourseGraph {
    pub fn from_package(package: CoursePackage) -> Result<Self, ContentError> {
        if package.concepts.is_empty() {
            return Err(ContentError::EmptyCourse);
        }
        let concept_ids = unique("concept", package.concepts.iter().map(|c| c.concept_id.as_str()))?;
        let objective_ids = unique("objective", package.objectives.iter().map(|o| o.objective_id.as_str()))?;
        unique("fragment", package.fragments.iter().map(|f| f.fragment_id.as_str()))?;
        unique(
            "test",
            package.pretest.iter().chain(&package.posttests).map(|t| t.test_id.as_str()),
        )?;

        for c in &package.concepts {
            for o in &c.objective_ids {
                if !objective_ids.contains(o.as_str()) {
                    return Err(dangling("concept", &c.concept_id, "objective", o));
                }
            }
            for p in &c.prerequisite_ids {
                if !concept_ids.contains(p.as_str()) {
                    return Err(dangling("concept", &c.concept_id, "concept", p));
                }
            }
        }
        for f in &package.fragments {
            if !concept_ids.contains(f.concept_id.as_str()) {
                return Err(dangling("fragment", &f.fragment_id, "concept", &f.concept_id));
            }
        }
        Self::validate_tests(&package, &concept_ids)?;

        let concept_index: HashMap<String, usize> = package
            .concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.concept_id.clone(), i))
            .collect();

        let mut dependents: HashMap<String, Vec<String>> = HashMap::new();
        for c in &package.concepts {
            for p in &c.prerequisite_ids {
                dependents.entry(p.clone()).or_default().push(c.concept_id.clone());
            }
        }
        for list in dependents.values_mut() {
            list.sort();
            list.dedup();
        }

        let topo_order = topological_sort(&package.concepts, &dependents)?;

        // A concept is covered if it serves an objective or is (transitively)
        // required by a covered concept.
        let mut covered: HashSet<&str> = HashSet::new();
        let mut stack: Vec<&Concept> = package.concepts.iter().filter(|c| !c.objective_ids.is_empty()).collect();
        while let Some(c) = stack.pop() {
            if covered.insert(&c.concept_id) {
                stack.extend(c.prerequisite_ids.iter().map(|p| &package.concepts[concept_index[p]]));
            }
        }
        if let Some(c) = package.concepts.iter().find(|c| !covered.contains(c.concept_id.as_str())) {
            return Err(ContentError::UnreachableConcept(c.concept_id.clone()));
        }

        let mut fragments_by_concept: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, f) in package.fragments.iter().enumerate() {
            fragments_by_concept.entry(f.concept_id.clone()).or_default().push(i);
        }

        Ok(CourseGraph {
            package,
            concept_index,
            fragments_by_concept,
            dependents,
            topo_order,
        })
    }

    fn validate_tests(package: &CoursePackage, concepts: &HashSet<&str>) -> Result<(), ContentError> {
        let invalid = |t: &TestDefinition, reason: String| ContentError::InvalidTest {
            test_id: t.test_id.clone(),
            reason,
        };
        if let Some(pre) = &package.pretest {
            if pre.concept_id.is_some() {
                return Err(invalid(pre, "the pre-test must not be bound to a concept".into()));
            }
        }
        for post in &package.posttests {
            match &post.concept_id {
                None => return Err(invalid(post, "post-tests must be bound to a concept".into())),
                Some(c) if !concepts.contains(c.as_str()) => return Err(dangling("test", &post.test_id, "concept", c)),
                Some(_) => {}
            }
        }
        for test in package.pretest.iter().chain(&package.posttests) {
            if test.course_id != package.course_id {
                return Err(invalid(test, format!("belongs to course {:?}", test.course_id)));
            }
            test.validate().map_err(|reason| invalid(test, reason))?;
            for item in &test.items {
                if let Some(c) = &item.concept_id {
                    if !concepts.contains(c.as_str()) {
                        return Err(dangling("test item", &item.item_id, "concept", c));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn course_id(&self) -> &str {
        &self.package.course_id
    }

    pub fn title(&self) -> &str {
        &self.package.title
    }

    pub fn instrument_id(&self) -> Option<&str> {
        self.package.instrument_id.as_deref()
    }

    pub fn package(&self) -> &CoursePackage {
        &self.package
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.package).expect("package serializes")
    }

    /// Concepts in authored order.
    pub fn concepts(&self) -> &[Concept] {
        &self.package.concepts
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.package.objectives
    }

    /// All fragments in authored order.
    pub fn fragments(&self) -> &[Fragment] {
        &self.package.fragments
    }

    pub fn concept(&self, concept_id: &str) -> Option<&Concept> {
        self.concept_index.get(concept_id).map(|&i| &self.package.concepts[i])
    }

    pub fn contains(&self, concept_id: &str) -> bool {
        self.concept_index.contains_key(concept_id)
    }

    /// Concepts that list `concept_id` as a direct prerequisite, sorted by id.
    pub fn dependents(&self, concept_id: &str) -> &[String] {
        self.dependents.get(concept_id).map_or(&[], Vec::as_slice)
    }

    /// Deterministic topological order: among ready concepts, lowest id first.
    pub fn topological_order(&self) -> &[String] {
        &self.topo_order
    }

    /// Every concept reachable by following prerequisite edges in either
    /// direction from `concept_id` (transitive prerequisites and dependents),
    /// excluding the concept itself.
    pub fn neighbourhood(&self, concept_id: &str) -> HashSet<&str> {
        let mut out = HashSet::new();
        let mut stack = vec![concept_id];
        while let Some(id) = stack.pop() {
            if let Some(c) = self.concept(id) {
                for p in &c.prerequisite_ids {
                    if out.insert(p.as_str()) {
                        stack.push(p);
                    }
                }
            }
        }
        let mut stack = vec![concept_id];
        while let Some(id) = stack.pop() {
            for d in self.dependents(id) {
                if out.insert(d.as_str()) {
                    stack.push(d);
                }
            }
        }
        out.remove(concept_id);
        out
    }

    pub fn pretest(&self) -> Option<&TestDefinition> {
        self.package.pretest.as_ref()
    }

    pub fn posttest_for(&self, concept_id: &str) -> Option<&TestDefinition> {
        self.package
            .posttests
            .iter()
            .find(|t| t.concept_id.as_deref() == Some(concept_id))
    }

    pub fn posttests(&self) -> &[TestDefinition] {
        &self.package.posttests
    }
}

fn topological_sort(
    concepts: &[Concept],
    dependents: &HashMap<String, Vec<String>>,
) -> Result<Vec<String>, ContentError> {
    let mut indegree: HashMap<&str, usize> = concepts
        .iter()
        .map(|c| {
            let distinct: HashSet<&str> = c.prerequisite_ids.iter().map(String::as_str).collect();
            (c.concept_id.as_str(), distinct.len())
        })
        .collect();
    let mut ready: BinaryHeap<Reverse<&str>> =
        indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| Reverse(id)).collect();
    let mut order = Vec::with_capacity(concepts.len());
    while let Some(Reverse(id)) = ready.pop() {
        order.push(id.to_string());
        for d in dependents.get(id).into_iter().flatten() {
            let deg = indegree.get_mut(d.as_str()).expect("dependent is a concept");
            *deg -= 1;
            if *deg == 0 {
                ready.push(Reverse(d));
            }
        }
    }
    if order.len() < concepts.len() {
        let placed: HashSet<&str> = order.iter().map(String::as_str).collect();
        return Err(ContentError::CyclicPrerequisites(find_cycle(concepts, &placed)));
    }
    Ok(order)
}

/// Walks prerequisite edges among unplaced concepts until a node repeats.
fn find_cycle(concepts: &[Concept], placed: &HashSet<&str>) -> Vec<String> {
    let by_id: HashMap<&str, &Concept> = concepts.iter().map(|c| (c.concept_id.as_str(), c)).collect();
    let mut start = concepts
        .iter()
        .map(|c| c.concept_id.as_str())
        .filter(|id| !placed.contains(id))
        .min()
        .expect("some concept is unplaced");
    let mut path: Vec<&str> = Vec::new();
    loop {
        if let Some(pos) = path.iter().position(|&p| p == start) {
            let mut cycle: Vec<String> = path[pos..].iter().map(|s| s.to_string()).collect();
            cycle.push(start.to_string());
            return cycle;
        }
        path.push(start);
        start = by_id[start]
            .prerequisite_ids
            .iter()
            .map(String::as_str)
            .filter(|p| !placed.contains(p))
            .min()
            .expect("an unplaced concept has an unplaced prerequisite");
    }
}

/// First filter: the fragments of one concept, in authored order.
pub fn fragments_for_concept<'c>(course: &'c CourseGraph, concept_id: &str) -> Result<Vec<&'c Fragment>, ContentError> {
    if !course.contains(concept_id) {
        return Err(ContentError::UnknownConcept(concept_id.to_string()));
    }
    Ok(course
        .fragments_by_concept
        .get(concept_id)
        .into_iter()
        .flatten()
        .map(|&i| &course.package.fragments[i])
        .collect())
}
