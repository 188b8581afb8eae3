//! Random fixtures shared by the property tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use hyperadapt_core::content::{Concept, CourseGraph, CoursePackage, Fragment, Level, Media, Objective, Role};
use hyperadapt_core::ils::{Answer, Instrument, Pole, ResponseSheet};
use hyperadapt_core::learner::{register_learner, Goal, Identity, LearnerRecord, Registration};
use hyperadapt_core::Timestamp;
use proptest::prelude::*;

pub const ROLES: [Role; 8] = [
    Role::Example,
    Role::Fact,
    Role::Activity,
    Role::Practice,
    Role::Theory,
    Role::Definition,
    Role::Demonstration,
    Role::Discussion,
];
pub const LEVELS: [Level; 3] = [Level::Beginner, Level::Intermediate, Level::Expert];

pub fn sheet_from_bits(instrument: &Instrument, bits: &[bool]) -> ResponseSheet {
    let mut sheet = ResponseSheet::new(&instrument.instrument_id);
    for (q, &b) in instrument.questions.iter().zip(bits) {
        sheet.answers.insert(q.question_id.clone(), if b { Answer::A } else { Answer::B });
    }
    sheet
}

pub fn sheet_strategy() -> impl Strategy<Value = ResponseSheet> {
    prop::collection::vec(any::<bool>(), 44).prop_map(|bits| sheet_from_bits(&Instrument::stand_in(), &bits))
}

/// Raw course shape: per concept, prerequisite picks among earlier concepts
/// and a list of (role, tag mask, level) fragments.
#[derive(Debug, Clone)]
pub struct CourseSpec {
    pub concepts: Vec<ConceptSpec>,
}

pub type ConceptSpec = (Vec<usize>, Vec<(usize, u8, usize)>);

pub fn course_spec(max_concepts: usize) -> impl Strategy<Value = CourseSpec> {
    let fragment = (0..8usize, any::<u8>(), 0..3usize);
    prop::collection::vec(
        (prop::collection::vec(any::<usize>(), 0..3), prop::collection::vec(fragment, 0..8)),
        1..=max_concepts,
    )
    .prop_map(|concepts| CourseSpec { concepts })
}

pub fn build_course(spec: &CourseSpec) -> CourseGraph {
    let mut concepts = Vec::new();
    let mut fragments = Vec::new();
    for (i, (prereqs, frags)) in spec.concepts.iter().enumerate() {
        let prerequisite_ids: BTreeSet<String> = if i == 0 {
            BTreeSet::new()
        } else {
            prereqs.iter().map(|p| format!("c{}", p % i)).collect()
        };
        concepts.push(Concept {
            concept_id: format!("c{i}"),
            title: String::new(),
            objective_ids: vec!["o".into()],
            prerequisite_ids: prerequisite_ids.into_iter().collect(),
        });
        for (j, &(role, mask, level)) in frags.iter().enumerate() {
            let pole_tags = Pole::ALL
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask & (1 << bit) != 0)
                .map(|(_, &p)| p)
                .collect();
            fragments.push(Fragment {
                fragment_id: format!("c{i}-f{j}"),
                concept_id: format!("c{i}"),
                media: Media::Text,
                role: ROLES[role],
                pole_tags,
                required_level: LEVELS[level],
                body_ref: String::new(),
            });
        }
    }
    CourseGraph::from_package(CoursePackage {
        course_id: "rand".into(),
        title: String::new(),
        instrument_id: None,
        objectives: vec![Objective { objective_id: "o".into(), text: String::new() }],
        concepts,
        fragments,
        pretest: None,
        posttests: vec![],
    })
    .expect("generated course is valid")
}

pub fn enrolled_learner(login: &str, course_id: &str, goal: Goal) -> LearnerRecord {
    let registration = Registration {
        identity: Identity {
            login: login.into(),
            name: "Test".into(),
            first_name: "T".into(),
            age: None,
            email: format!("{login}@example.org"),
        },
        password: "pw".into(),
        goal,
        courses: vec![course_id.into()],
    };
    register_learner(registration, b"salt", HashSet::<String>::new(), Timestamp(1)).expect("valid registration")
}
