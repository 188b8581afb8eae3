mod common;

use common::{build_course, course_spec, enrolled_learner, sheet_strategy, LEVELS};
use hyperadapt_core::content::{fragments_for_concept, ingest_course, CourseGraph, Fragment};
use hyperadapt_core::generator::{build_page, filter_by_level, filter_by_style, params_for, Annotation, Warning};
use hyperadapt_core::ils::{Dimension, Instrument, Pole, ResponseSheet};
use hyperadapt_core::learner::{Goal, LearnerRecord, OverlayRule};
use hyperadapt_core::pedagogy::{order_fragments, predict_next_concept, prerequisites_met, AdaptationParams, OrderingPolicy, Strength, Thresholds};
use hyperadapt_core::{EngineConfig, Timestamp};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Setup {
    course: CourseGraph,
    record: LearnerRecord,
}

fn setup() -> impl Strategy<Value = Setup> {
    (
        course_spec(8),
        prop::option::weighted(0.8, sheet_strategy()),
        0..3usize,
        any::<bool>(),
        prop::collection::vec(0.0f64..=1.0, 8),
    )
        .prop_map(|(spec, sheet, level, in_depth, scores)| {
            let course = build_course(&spec);
            let goal = if in_depth { Goal::InDepth } else { Goal::General };
            let mut record = enrolled_learner("p", course.course_id(), goal);
            if let Some(sheet) = sheet {
                record.set_style_from_questionnaire(&sheet, &Instrument::stand_in(), Timestamp(2)).unwrap();
            }
            record.status.insert(course.course_id().into(), LEVELS[level]);
            for (c, s) in course.concepts().iter().zip(scores) {
                record.overlay.insert(c.concept_id.clone(), s);
            }
            Setup { course, record }
        })
}

fn ids(fs: &[&Fragment]) -> Vec<String> {
    fs.iter().map(|f| f.fragment_id.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn page_properties(s in setup()) {
        let cfg = EngineConfig::default();
        let params = params_for(&s.record);
        for concept in s.course.concepts() {
            let cid = &concept.concept_id;
            let authored = fragments_for_concept(&s.course, cid).unwrap();
            let page = build_page(&s.record, &s.course, cid, &cfg, Timestamp(9)).unwrap();

            // Subset, no duplicates, never empty.
            let authored_ids = ids(&authored);
            prop_assert!(page.fragments.iter().all(|f| authored_ids.contains(f)));
            let mut dedup = page.fragments.clone();
            dedup.sort();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), page.fragments.len());
            prop_assert_eq!(page.fragments.is_empty(), authored.is_empty());

            // Strict opposite-pole fragments only survive behind a warning.
            for d in Dimension::ALL {
                let p = params.get(d);
                if p.strength != Strength::Strict {
                    continue;
                }
                let relaxed = page.warnings.contains(&Warning::StyleFilterRelaxed { dimension: d, pole: p.preferred_pole });
                let leaked = page.fragments.iter().any(|id| {
                    authored.iter().find(|f| &f.fragment_id == id).unwrap().exclusively_opposes(p.preferred_pole)
                });
                prop_assert!(!leaked || relaxed);
            }

            // Links: annotation tracks readiness; only sequential learners hide, and only unready links.
            let progress = params.get(Dimension::Progress);
            for link in &page.links {
                prop_assert_ne!(&link.target_concept_id, cid);
                let ready = prerequisites_met(&s.course, &s.record, &link.target_concept_id, &cfg.thresholds);
                prop_assert_eq!(link.annotation == Annotation::NotReady, !ready);
                if !link.visible {
                    prop_assert_eq!(link.annotation, Annotation::NotReady);
                    prop_assert_eq!(progress.preferred_pole, Pole::Sequential);
                    prop_assert_ne!(progress.strength, Strength::Off);
                }
            }
        }
    }

    #[test]
    fn neutral_params_keep_authored_set_and_order(spec in course_spec(6)) {
        let course = build_course(&spec);
        let params = AdaptationParams::neutral();
        for concept in course.concepts() {
            let authored = fragments_for_concept(&course, &concept.concept_id).unwrap();
            let styled = filter_by_style(authored.clone(), &params);
            prop_assert!(styled.warnings.is_empty());
            let ordered = order_fragments(styled.fragments, &params);
            prop_assert_eq!(ids(&ordered), ids(&authored));
        }
        // Same through the full page for an unprofiled expert.
        let mut record = enrolled_learner("n", course.course_id(), Goal::InDepth);
        record.status.insert(course.course_id().into(), hyperadapt_core::content::Level::Expert);
        for concept in course.concepts() {
            let page = build_page(&record, &course, &concept.concept_id, &EngineConfig::default(), Timestamp(3)).unwrap();
            prop_assert_eq!(page.fragments, ids(&fragments_for_concept(&course, &concept.concept_id).unwrap()));
        }
    }

    #[test]
    fn ordering_is_a_stable_sort(spec in course_spec(4), deductive in any::<bool>(), strict in any::<bool>()) {
        let course = build_course(&spec);
        let pole = if deductive { Pole::Deductive } else { Pole::Inductive };
        let strength = if strict { Strength::Strict } else { Strength::Soft };
        let params = AdaptationParams::neutral().with(pole, strength);
        let policy = OrderingPolicy::for_reasoning(pole);
        let all: Vec<&Fragment> = course.fragments().iter().collect();
        let ordered = order_fragments(all.clone(), &params);
        prop_assert_eq!(ordered.len(), all.len());
        for pair in ordered.windows(2) {
            let (a, b) = (policy.rank(pair[0].role), policy.rank(pair[1].role));
            prop_assert!(a <= b);
            if a == b {
                let pos = |f: &Fragment| all.iter().position(|g| g.fragment_id == f.fragment_id).unwrap();
                prop_assert!(pos(pair[0]) < pos(pair[1]));
            }
        }
    }

    #[test]
    fn level_filter_respects_cap(spec in course_spec(4), level in 0..3usize, in_depth in any::<bool>()) {
        let course = build_course(&spec);
        let goal = if in_depth { Goal::InDepth } else { Goal::General };
        let level = LEVELS[level];
        let cap = hyperadapt_core::generator::level_cap(level, goal);
        prop_assert!(cap <= level);
        let all: Vec<&Fragment> = course.fragments().iter().collect();
        let out = filter_by_level(all.clone(), level, goal);
        if out.warnings.is_empty() {
            prop_assert!(out.fragments.iter().all(|f| f.required_level <= cap));
        } else {
            prop_assert!(all.iter().all(|f| f.required_level > cap));
            prop_assert_eq!(out.fragments.len(), all.len());
        }
    }

    #[test]
    fn prediction_is_first_ready_unmastered(s in setup()) {
        let th = Thresholds::default();
        let next = predict_next_concept(&s.course, &s.record, &th).unwrap();
        let expected = s.course.topological_order().iter().find(|c| {
            let concept = s.course.concept(c).unwrap();
            s.record.concept_score(c) < th.mastery_bound
                && concept.prerequisite_ids.iter().all(|p| s.record.concept_score(p) >= th.readiness_bound)
        });
        prop_assert_eq!(next.as_ref(), expected);
    }

    #[test]
    fn mastering_the_prediction_moves_it(s in setup()) {
        let th = Thresholds::default();
        let mut record = s.record.clone();
        if let Some(next) = predict_next_concept(&s.course, &record, &th).unwrap() {
            record.overlay.insert(next.clone(), 1.0);
            let after = predict_next_concept(&s.course, &record, &th).unwrap();
            prop_assert_ne!(after, Some(next));
        }
    }

    #[test]
    fn overlay_stays_in_unit_interval(fractions in prop::collection::vec(0.0f64..=1.0, 1..30), start in 0.0f64..=1.0) {
        let mut record = enrolled_learner("o", "c", Goal::General);
        record.overlay.insert("x".into(), start);
        let rule = OverlayRule::default();
        for (i, f) in fractions.iter().enumerate() {
            let before = record.concept_score("x");
            let score = record.update_concept_score("x", *f, &rule, Timestamp(10 + i as u64)).unwrap();
            prop_assert!((0.0..=1.0).contains(&score));
            prop_assert!(score >= before.min(*f) - 1e-12 && score <= before.max(*f) + 1e-12);
        }
        let stamps: Vec<u64> = record.traces.iter().map(|t| t.timestamp.millis()).collect();
        prop_assert!(stamps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn course_round_trips_and_partitions_fragments(spec in course_spec(8)) {
        let course = build_course(&spec);
        let again = ingest_course(&course.to_json()).unwrap();
        prop_assert_eq!(&again, &course);
        let mut seen = 0;
        for concept in course.concepts() {
            let fs = fragments_for_concept(&course, &concept.concept_id).unwrap();
            prop_assert!(fs.iter().all(|f| f.concept_id == concept.concept_id));
            seen += fs.len();
        }
        prop_assert_eq!(seen, course.fragments().len());
    }
}

#[test]
fn opposite_styles_see_different_pages() {
    let course = ingest_course(include_str!("../data/sample_course.json")).unwrap();
    let inst = Instrument::stand_in();
    let page_for = |sheet: &ResponseSheet| {
        let mut r = enrolled_learner("s", course.course_id(), Goal::InDepth);
        r.set_style_from_questionnaire(sheet, &inst, Timestamp(2)).unwrap();
        r.status.insert(course.course_id().into(), hyperadapt_core::content::Level::Expert);
        build_page(&r, &course, "loops", &EngineConfig::default(), Timestamp(3)).unwrap()
    };
    let all_a = inst.uniform_sheet(hyperadapt_core::ils::Answer::A);
    let a = page_for(&all_a);
    let b = page_for(&all_a.flipped());
    assert_ne!(a.fragments, b.fragments);
    assert!(a.warnings.is_empty() && b.warnings.is_empty());
}
