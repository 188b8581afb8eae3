//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured quantity. Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use hyperadapt_core::assessment::{grade_posttest, grade_pretest, Answers};
use hyperadapt_core::content::{
    fragments_for_concept, ingest_course, Concept, CourseGraph, CoursePackage, Fragment, Level, Media, Objective, Role,
};
use hyperadapt_core::generator::{build_page, filter_by_style, generate_page, params_for, Annotation, Warning};
use hyperadapt_core::ils::{
    classify_confidence, score_dimension, score_sheet, Answer, Confidence, Dimension, Instrument, Pole, ResponseSheet,
    StyleId,
};
use hyperadapt_core::learner::{register_learner, Goal, Identity, LearnerRecord, Registration, StyleSource};
use hyperadapt_core::pedagogy::{order_fragments, AdaptationParams, Strength};
use hyperadapt_core::psychometrics::{cronbach_alpha, reliability_verdict, InstrumentKind, ResponseMatrix, StyleHistogram};
use hyperadapt_core::sim::{run_simulation, SimConfig, SimReport};
use hyperadapt_core::{EngineConfig, Execution, Timestamp};
use hyperadapt_service::{router, AppState, FixedClock, Store};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

const SAMPLE_COURSE: &str = include_str!("../../core/data/sample_course.json");
const LOOP_COURSE: &str = include_str!("../../core/data/loop_course.json");
const SIM_CONFIG: &str = include_str!("../../core/data/sim.json");

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn random_sheet(rng: &mut ChaCha8Rng, inst: &Instrument) -> ResponseSheet {
    let mut sheet = ResponseSheet::new(&inst.instrument_id);
    for q in &inst.questions {
        sheet.answers.insert(q.question_id.clone(), if rng.random() { Answer::A } else { Answer::B });
    }
    sheet
}

fn learner(login: &str, courses: &[&str], goal: Goal) -> LearnerRecord {
    let reg = Registration {
        identity: Identity {
            login: login.into(),
            name: "Acceptance".into(),
            first_name: "A".into(),
            age: Some(20),
            email: format!("{login}@example.org"),
        },
        password: "secret".into(),
        goal,
        courses: courses.iter().map(|c| c.to_string()).collect(),
    };
    register_learner(reg, b"salt", HashSet::<String>::new(), Timestamp(1)).unwrap()
}

/// Confidence bands written out: 1–3 uncertain, 4–8 moderate, 9–11 strong.
fn table_one(magnitude: u32) -> Option<Confidence> {
    match magnitude {
        1..=3 => Some(Confidence::Uncertain),
        4..=8 => Some(Confidence::Moderate),
        9..=11 => Some(Confidence::Strong),
        _ => None,
    }
}

fn scoring_bounds() -> Outcome {
    let inst = Instrument::stand_in();
    let ids: Vec<String> = inst.questions_in(Dimension::Processing).map(|q| q.question_id.clone()).collect();
    let mut reached = BTreeSet::new();
    for mask in 0u32..(1 << 11) {
        let mut sheet = inst.uniform_sheet(Answer::B);
        for (bit, id) in ids.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                sheet.answers.insert(id.clone(), Answer::A);
            }
        }
        let s = score_dimension(&sheet, &inst, Dimension::Processing).map_err(|e| e.to_string())?;
        ensure!(s.value % 2 != 0, "even value {} for mask {mask:#x}", s.value);
        ensure!((-11..=11).contains(&s.value), "value {} out of range", s.value);
        ensure!(s.value == 2 * mask.count_ones() as i32 - 11, "value {} is not M-N", s.value);
        ensure!(Some(s.confidence) == table_one(s.value.unsigned_abs()), "band mismatch at {}", s.value);
        reached.insert(s.value.unsigned_abs());
    }
    ensure!(reached == BTreeSet::from([1, 3, 5, 7, 9, 11]), "reachable magnitudes {reached:?}");
    for v in -11..=11 {
        let ours = classify_confidence(v).ok();
        ensure!(ours == table_one(v.unsigned_abs()), "classify_confidence({v}) = {ours:?}");
    }
    Ok("2048 vectors, all odd in [-11, 11], bands match the confidence table".into())
}

fn flip_symmetry() -> Outcome {
    let inst = Instrument::stand_in();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for i in 0..1000 {
        let sheet = random_sheet(&mut rng, &inst);
        let p = score_sheet(&sheet, &inst).map_err(|e| e.to_string())?;
        let q = score_sheet(&sheet.flipped(), &inst).map_err(|e| e.to_string())?;
        for d in Dimension::ALL {
            ensure!(q.score(d).value == -p.score(d).value, "sheet {i} {d:?}: value not negated");
            ensure!(q.score(d).confidence == p.score(d).confidence, "sheet {i} {d:?}: band changed");
        }
    }
    Ok("1000 sheets, values negated and bands preserved".into())
}

/// Brute-force alpha: the definition, with sample variances.
fn oracle_alpha(rows: &[Vec<f64>]) -> Option<f64> {
    let var = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let k = rows[0].len();
    let items: f64 = (0..k).map(|j| var(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())).sum();
    let total = var(&rows.iter().map(|r| r.iter().sum()).collect::<Vec<f64>>());
    (total > 1e-12).then(|| k as f64 / (k as f64 - 1.0) * (1.0 - items / total))
}

fn cronbach() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7609);
    let mut worst: f64 = 0.0;
    let mut degenerate = 0;
    for m in 0..100 {
        let n = rng.random_range(5..=50);
        let k = rng.random_range(2..=44);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let lean: f64 = rng.random();
                (0..k).map(|_| f64::from(rng.random_bool(lean))).collect()
            })
            .collect();
        let ours = cronbach_alpha(&ResponseMatrix::new(rows.clone()).map_err(|e| e.to_string())?);
        match (oracle_alpha(&rows), ours) {
            (Some(expected), Ok(got)) => worst = worst.max((expected - got).abs()),
            (None, Err(_)) => degenerate += 1,
            (expected, got) => return Err(format!("matrix {m}: oracle {expected:?}, engine {got:?}")),
        }
    }
    ensure!(worst < 1e-9, "max |alpha - oracle| = {worst:e}");

    let column: Vec<f64> = (0..30).map(|i| (i % 5) as f64).collect();
    let identical: Vec<Vec<f64>> = column.iter().map(|&v| vec![v; 10]).collect();
    let one = cronbach_alpha(&ResponseMatrix::new(identical).unwrap()).map_err(|e| e.to_string())?;
    ensure!((one - 1.0).abs() <= 1e-12, "perfectly correlated items gave {one}");

    ensure!(reliability_verdict(0.7609, InstrumentKind::Preference).acceptable, "0.7609 preference rejected");
    ensure!(!reliability_verdict(0.74, InstrumentKind::Knowledge).acceptable, "0.74 knowledge accepted");
    Ok(format!(
        "100 matrices, max |alpha - oracle| = {worst:.1e} ({degenerate} degenerate agreed), identical items = {one}, verdicts ok"
    ))
}

fn style_derivation() -> Outcome {
    let mut seen = BTreeSet::new();
    for mask in 0u8..16 {
        let poles = Dimension::ALL.map(|d| if mask & (1 << d.index()) != 0 { d.poles().1 } else { d.poles().0 });
        let id = StyleId::from_poles(poles).map_err(|e| e.to_string())?;
        ensure!(id.poles() == poles, "round trip failed for {poles:?}");
        seen.insert(id.get());
    }
    ensure!(seen == (1..=16).collect::<BTreeSet<u8>>(), "ids {seen:?}");
    let first = StyleId::from_poles([Pole::Active, Pole::Inductive, Pole::Verbal, Pole::Sequential]).unwrap();
    ensure!(first.get() == 1, "(Active, Inductive, Verbal, Sequential) -> {}", first.get());
    Ok("16 quadruples -> 16 distinct ids, style 1 = Active/Inductive/Verbal/Sequential".into())
}

struct Http {
    router: axum::Router,
    clock: Arc<FixedClock>,
    _dir: tempfile::TempDir,
}

impl Http {
    async fn new() -> Http {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(FixedClock::new(Timestamp(1_700_000_000_000)));
        let state = AppState::new(Store::open(dir.path()).unwrap(), Instrument::stand_in(), EngineConfig::default(), clock.clone())
            .unwrap();
        let http = Http { router: router(state), clock, _dir: dir };
        for doc in [SAMPLE_COURSE, LOOP_COURSE] {
            let (status, _) = http.call(Method::PUT, "/courses", None, Some(serde_json::from_str(doc).unwrap())).await;
            assert_eq!(status, StatusCode::CREATED);
        }
        http
    }

    async fn call(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
    }

    async fn json(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.call(method, uri, token, body).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn register(&self, login: &str) -> (String, String) {
        let body = json!({
            "login": login, "name": "Acceptance", "first_name": "A", "age": 20,
            "email": format!("{login}@example.org"), "password": "secret",
            "goal": "in_depth", "courses": ["intro-programming"]
        });
        let (status, v) = self.json(Method::POST, "/learners", None, Some(body)).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        (v["learner_id"].as_str().unwrap().into(), v["token"].as_str().unwrap().into())
    }
}

fn sheet_body(sheet: &ResponseSheet) -> Value {
    json!({ "answers": sheet.answers })
}

async fn default_assignment() -> Outcome {
    let inst = Instrument::stand_in();
    let empty = Http::new().await;
    let (id, token) = empty.register("first").await;
    let (_, v) = empty.json(Method::POST, &format!("/learners/{id}/default-style"), Some(&token), None).await;
    ensure!(v["style_id"] == 1, "empty store default = {}", v["style_id"]);

    // Plurality 6 out of a mixed questionnaire cohort.
    let http = Http::new().await;
    let plurality = StyleId::new(6).unwrap();
    let cohort = [6u8, 6, 6, 6, 3, 3, 3, 11, 11, 1, 16, 2];
    for (i, s) in cohort.iter().enumerate() {
        let (id, token) = http.register(&format!("q{i}")).await;
        let sheet = hyperadapt_core::sim::sheet_for_style(&inst, StyleId::new(*s).unwrap());
        let (status, _) = http.json(Method::POST, &format!("/learners/{id}/questionnaire"), Some(&token), Some(sheet_body(&sheet))).await;
        ensure!(status == StatusCode::OK, "questionnaire {i} -> {status}");
    }
    for i in 0..5 {
        let (id, token) = http.register(&format!("skip{i}")).await;
        let (_, v) = http.json(Method::POST, &format!("/learners/{id}/default-style"), Some(&token), None).await;
        ensure!(v["style_id"] == plurality.get(), "skipper {i} got {}", v["style_id"]);
    }
    // Skippers do not shift the cohort.
    let (_, report) = http.json(Method::GET, "/cohort/style-distribution", None, None).await;
    ensure!(report["modal_style"] == 6 && report["histogram"]["total"] == cohort.len(), "report {report}");

    let (qid, qtoken) = http.register("profiled").await;
    let (_, before) = http
        .json(Method::POST, &format!("/learners/{qid}/questionnaire"), Some(&qtoken), Some(sheet_body(&inst.uniform_sheet(Answer::B))))
        .await;
    let (status, err) = http.json(Method::POST, &format!("/learners/{qid}/default-style"), Some(&qtoken), None).await;
    ensure!(status == StatusCode::CONFLICT && err["code"] == "StyleAlreadySet", "got {status} {err}");
    let (_, record) = http.json(Method::GET, &format!("/learners/{qid}"), Some(&qtoken), None).await;
    ensure!(record["style"] == before && record["style_source"] == "questionnaire", "questionnaire style overwritten");

    // Same rule in-process.
    let mut r = learner("core", &[], Goal::General);
    r.set_style_from_questionnaire(&inst.uniform_sheet(Answer::A), &inst, Timestamp(2)).unwrap();
    let hist = StyleHistogram::from_ids([plurality]);
    ensure!(r.assign_default_style(&hist, Timestamp(3)).is_err(), "core overwrote a questionnaire style");
    ensure!(r.style.as_ref().unwrap().style_id.get() == 1, "core style changed");
    Ok("plurality 6 -> 5/5 skippers get 6; empty store -> 1; questionnaire kept (409 StyleAlreadySet)".into())
}

const ROLES: [Role; 8] = [
    Role::Example,
    Role::Fact,
    Role::Activity,
    Role::Practice,
    Role::Theory,
    Role::Definition,
    Role::Demonstration,
    Role::Discussion,
];
const LEVELS: [Level; 3] = [Level::Beginner, Level::Intermediate, Level::Expert];

fn random_course(rng: &mut ChaCha8Rng, n: usize) -> CourseGraph {
    let mut concepts = Vec::new();
    let mut fragments = Vec::new();
    for i in 0..n {
        let prereqs: BTreeSet<String> = (0..rng.random_range(0..=2usize.min(i)))
            .map(|_| format!("c{}", rng.random_range(0..i)))
            .collect();
        concepts.push(Concept {
            concept_id: format!("c{i}"),
            title: String::new(),
            objective_ids: vec!["o".into()],
            prerequisite_ids: prereqs.into_iter().collect(),
        });
        for j in 0..rng.random_range(0..8) {
            let pole_tags = Pole::ALL.into_iter().filter(|_| rng.random_bool(0.3)).collect();
            fragments.push(Fragment {
                fragment_id: format!("c{i}-f{j}"),
                concept_id: format!("c{i}"),
                media: Media::Text,
                role: ROLES[rng.random_range(0..8)],
                pole_tags,
                required_level: LEVELS[rng.random_range(0..3)],
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

fn pipeline_properties() -> Outcome {
    let inst = Instrument::stand_in();
    let cfg = EngineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let (mut pages, mut relaxed) = (0, 0);
    for pair in 0..500 {
        let n = rng.random_range(1..=6);
        let course = random_course(&mut rng, n);
        let goal = if rng.random() { Goal::InDepth } else { Goal::General };
        let mut record = learner("p", &["rand"], goal);
        if rng.random_bool(0.85) {
            record.set_style_from_questionnaire(&random_sheet(&mut rng, &inst), &inst, Timestamp(2)).unwrap();
        }
        record.status.insert("rand".into(), LEVELS[rng.random_range(0..3)]);
        let params = params_for(&record);
        for concept in course.concepts() {
            let cid = &concept.concept_id;
            let authored = fragments_for_concept(&course, cid).unwrap();
            let authored_ids: Vec<&str> = authored.iter().map(|f| f.fragment_id.as_str()).collect();
            let page = build_page(&record, &course, cid, &cfg, Timestamp(3)).map_err(|e| e.to_string())?;
            pages += 1;
            ensure!(page.fragments.iter().all(|f| authored_ids.contains(&f.as_str())), "pair {pair} {cid}: foreign fragment");
            ensure!(page.fragments.is_empty() == authored.is_empty(), "pair {pair} {cid}: emptiness changed");
            for d in Dimension::ALL {
                let p = params.get(d);
                if p.strength != Strength::Strict {
                    continue;
                }
                let flagged = page.warnings.contains(&Warning::StyleFilterRelaxed { dimension: d, pole: p.preferred_pole });
                relaxed += usize::from(flagged);
                let leaked = page
                    .fragments
                    .iter()
                    .any(|id| authored.iter().any(|f| &f.fragment_id == id && f.exclusively_opposes(p.preferred_pole)));
                ensure!(!leaked || flagged, "pair {pair} {cid}: opposite-pole fragment without degradation flag");
            }

            let neutral = AdaptationParams::neutral();
            let styled = filter_by_style(authored.clone(), &neutral);
            let ordered = order_fragments(styled.fragments, &neutral);
            let ordered_ids: Vec<&str> = ordered.iter().map(|f| f.fragment_id.as_str()).collect();
            ensure!(ordered_ids == authored_ids && styled.warnings.is_empty(), "pair {pair} {cid}: all-off params changed the set");
        }
        // An unprofiled expert with an in-depth goal sees exactly the authored pages.
        let mut plain = learner("n", &["rand"], Goal::InDepth);
        plain.status.insert("rand".into(), Level::Expert);
        for concept in course.concepts() {
            let page = build_page(&plain, &course, &concept.concept_id, &cfg, Timestamp(3)).map_err(|e| e.to_string())?;
            let authored: Vec<String> = fragments_for_concept(&course, &concept.concept_id)
                .unwrap()
                .iter()
                .map(|f| f.fragment_id.clone())
                .collect();
            ensure!(page.fragments == authored, "pair {pair}: all-off page differs from authored");
        }
    }
    Ok(format!("500 pairs, {pages} pages; subset, non-empty, all-off identity hold; {relaxed} flagged relaxations"))
}

fn run_bundled_sim() -> Result<(SimConfig, CourseGraph, SimReport), String> {
    let cfg = SimConfig::from_json(SIM_CONFIG).map_err(|e| e.to_string())?;
    let course = ingest_course(SAMPLE_COURSE).map_err(|e| e.to_string())?;
    let report = run_simulation(&cfg, &course, &Instrument::stand_in(), &EngineConfig::default(), Execution::Parallel)
        .map_err(|e| e.to_string())?;
    Ok((cfg, course, report))
}

fn ordering() -> Outcome {
    let (cfg, course, report) = run_bundled_sim()?;
    ensure!(cfg.population == 200, "population {}", cfg.population);
    let role: BTreeMap<&str, Role> = course.fragments().iter().map(|f| (f.fragment_id.as_str(), f.role)).collect();
    let (mut checked, mut conforming) = (0usize, 0usize);
    for t in &report.transcripts {
        // Strict reasoning comes only from a strong questionnaire score.
        let reasoning = t.measured_values[Dimension::Reasoning.index()];
        if t.style_source != StyleSource::Questionnaire || reasoning.abs() < 9 {
            continue;
        }
        let deductive = t.measured_style.pole(Dimension::Reasoning) == Pole::Deductive;
        for page in &t.pages {
            let roles: Vec<Role> = page.fragments.iter().map(|f| role[f.as_str()]).collect();
            let concrete = |r: &Role| matches!(r, Role::Example | Role::Fact);
            let abstract_ = |r: &Role| matches!(r, Role::Theory | Role::Definition);
            let ok = roles.iter().enumerate().all(|(i, a)| {
                roles[i + 1..].iter().all(|b| if deductive { !(concrete(a) && abstract_(b)) } else { !(abstract_(a) && concrete(b)) })
            });
            checked += 1;
            conforming += usize::from(ok);
        }
    }
    ensure!(checked > 0, "no strict-reasoning pages generated");
    let rate = conforming as f64 / checked as f64;
    ensure!(rate == 1.0, "conformance {conforming}/{checked}");
    ensure!(
        report.summary.ordering_conformance_rate == 1.0 && report.summary.strict_reasoning_pages == checked,
        "engine summary disagrees: {:?}",
        report.summary
    );
    Ok(format!("{checked} strict-reasoning pages over {} agents, conformance rate {rate}", report.summary.agents))
}

fn cognitive_loop() -> Outcome {
    let course = ingest_course(LOOP_COURSE).map_err(|e| e.to_string())?;
    let inst = Instrument::stand_in();
    let cfg = EngineConfig::default();
    let mut r = learner("loop", &["abc"], Goal::InDepth);
    r.set_style_from_questionnaire(&inst.uniform_sheet(Answer::A), &inst, Timestamp(10)).unwrap();

    let pretest = course.pretest().ok_or("no pretest")?;
    ensure!(pretest.items.len() == 10, "pretest has {} items", pretest.items.len());
    let wrong: Answers = pretest.answer_key().into_iter().map(|(k, v)| (k, (v + 1) % 4)).collect();
    let pre = grade_pretest(&mut r, pretest, &wrong, &cfg, Timestamp(20)).map_err(|e| e.to_string())?;
    ensure!(pre.fraction == 0.0 && pre.level == Some(Level::Beginner), "pretest gave {} {:?}", pre.fraction, pre.level);

    let before = generate_page(&mut r, &course, "a", &cfg, Timestamp(30)).map_err(|e| e.to_string())?;
    let link = before.links.iter().find(|l| l.target_concept_id == "b").ok_or("no link to b")?;
    ensure!(link.annotation == Annotation::NotReady && !link.visible, "link before: {link:?}");

    // Hand-iterated: s1 = 0.3·0 + 0.7·1, s2 = 0.3·s1 + 0.7·1.
    let s1_oracle = 0.3 * 0.0 + 0.7 * 1.0;
    let s2_oracle = 0.3 * s1_oracle + 0.7 * 1.0;
    let post = course.posttest_for("a").ok_or("no posttest")?;
    let s1 = grade_posttest(&mut r, &course, post, &post.answer_key(), &cfg, Timestamp(40)).map_err(|e| e.to_string())?;
    let s2 = grade_posttest(&mut r, &course, post, &post.answer_key(), &cfg, Timestamp(50)).map_err(|e| e.to_string())?;
    let (s1, s2) = (s1.concept_score.unwrap(), s2.concept_score.unwrap());
    ensure!(s1 == s1_oracle && s1 == 0.7, "first score {s1}");
    ensure!(s2 == s2_oracle, "second score {s2} vs oracle {s2_oracle}");
    ensure!((s2 - 0.91).abs() <= 1e-12, "second score {s2} not 0.91");

    let after = generate_page(&mut r, &course, "a", &cfg, Timestamp(60)).map_err(|e| e.to_string())?;
    let link = after.links.iter().find(|l| l.target_concept_id == "b").ok_or("no link to b")?;
    ensure!(link.annotation != Annotation::NotReady && link.visible, "link after: {link:?}");
    Ok(format!(
        "pretest 0/10 -> Beginner; overlay {s1} then {s2:.2} (f64 {s2:?}); link to b not_ready/hidden -> {:?}/visible",
        link.annotation
    ))
}

fn profiler_recovery() -> Outcome {
    let (cfg, _, report) = run_bundled_sim()?;
    let (_, _, again) = run_bundled_sim()?;
    ensure!(report.to_json() == again.to_json(), "two runs with seed {} differ", cfg.seed);
    ensure!(cfg.noise == 0.1 && cfg.population == 200, "config noise {} population {}", cfg.noise, cfg.population);
    let (mut strong, mut hit) = (0usize, 0usize);
    for t in report.transcripts.iter().filter(|t| t.style_source == StyleSource::Questionnaire) {
        for d in Dimension::ALL {
            if t.measured_values[d.index()].abs() >= 9 {
                strong += 1;
                hit += usize::from(t.measured_style.pole(d) == t.true_style.pole(d));
            }
        }
    }
    ensure!(strong > 0, "no strong dimensions");
    let accuracy = hit as f64 / strong as f64;
    ensure!(accuracy >= 0.95, "accuracy {accuracy} ({hit}/{strong})");
    Ok(format!("{hit}/{strong} strong dimensions recovered, accuracy {accuracy:.4}, deterministic"))
}

async fn service_transparency() -> Outcome {
    let http = Http::new().await;
    let inst = Instrument::stand_in();
    let course = ingest_course(SAMPLE_COURSE).map_err(|e| e.to_string())?;
    let cfg = EngineConfig::default();
    let t0 = http.clock.now_millis();
    let at = |step: u64| Timestamp(t0 + step * 1000);
    let mut local = learner("golden", &["intro-programming"], Goal::InDepth);
    let mut steps = 0;
    let mut compare = |label: &str, service: &[u8], engine: Vec<u8>| -> Result<(), String> {
        steps += 1;
        if service == engine.as_slice() {
            Ok(())
        } else {
            Err(format!("{label}: service {} vs engine {}", String::from_utf8_lossy(service), String::from_utf8_lossy(&engine)))
        }
    };
    let bytes = |v: &dyn erased::Ser| v.bytes();

    http.clock.set(at(0));
    let (id, token) = http.register("golden").await;
    local.traces.clear();
    local.push_trace(at(0), hyperadapt_core::learner::TraceDetail::Registered { login: "golden".into() });
    ensure!(id == local.learner_id, "learner id {id} vs {}", local.learner_id);
    let base = format!("/learners/{id}/courses/intro-programming");

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let sheet = random_sheet(&mut rng, &inst);
    http.clock.set(at(1));
    let (_, body) = http.call(Method::POST, &format!("/learners/{id}/questionnaire"), Some(&token), Some(sheet_body(&sheet))).await;
    let profile = local.set_style_from_questionnaire(&sheet, &inst, at(1)).map_err(|e| e.to_string())?.clone();
    compare("questionnaire", &body, bytes(&profile))?;

    let pretest = course.pretest().unwrap();
    let answers: Answers = pretest.answer_key().into_iter().enumerate().map(|(i, (k, v))| (k, if i % 3 == 0 { (v + 1) % 4 } else { v })).collect();
    http.clock.set(at(2));
    let (_, body) = http.call(Method::POST, &format!("{base}/pretest"), Some(&token), Some(json!({ "answers": answers }))).await;
    let pre = grade_pretest(&mut local, pretest, &answers, &cfg, at(2)).map_err(|e| e.to_string())?;
    compare("pretest", &body, bytes(&pre))?;

    for (i, concept) in ["variables", "expressions", "io"].into_iter().enumerate() {
        let step = 3 + i as u64;
        http.clock.set(at(step));
        let (_, body) = http.call(Method::GET, &format!("{base}/concepts/{concept}/page"), Some(&token), None).await;
        let page = generate_page(&mut local, &course, concept, &cfg, at(step)).map_err(|e| e.to_string())?;
        compare(&format!("page {concept}"), &body, bytes(&page))?;
    }

    let post = course.posttest_for("variables").unwrap();
    http.clock.set(at(6));
    let (_, body) = http
        .call(Method::POST, &format!("{base}/concepts/variables/posttest"), Some(&token), Some(json!({ "answers": post.answer_key() })))
        .await;
    let result = grade_posttest(&mut local, &course, post, &post.answer_key(), &cfg, at(6)).map_err(|e| e.to_string())?;
    compare("posttest", &body, bytes(&result))?;

    http.clock.set(at(7));
    let (_, body) = http.call(Method::GET, &format!("{base}/concepts/expressions/page"), Some(&token), None).await;
    let page = generate_page(&mut local, &course, "expressions", &cfg, at(7)).map_err(|e| e.to_string())?;
    compare("final page", &body, bytes(&page))?;

    // Persisted state matches too (credential hashes use different salts).
    let (_, stored) = http.json(Method::GET, &format!("/learners/{id}"), Some(&token), None).await;
    let mut expected = serde_json::to_value(&local).unwrap();
    expected.as_object_mut().unwrap().remove("credential_hash");
    ensure!(stored == expected, "stored record differs from in-process record");
    Ok(format!("{steps} response bodies byte-identical to in-process calls; stored record equal; no secondary component built"))
}

/// Serialization through the same path axum's `Json` uses.
mod erased {
    pub trait Ser {
        fn bytes(&self) -> Vec<u8>;
    }
    impl<T: serde::Serialize> Ser for T {
        fn bytes(&self) -> Vec<u8> {
            serde_json::to_vec(self).unwrap()
        }
    }
}

trait ClockExt {
    fn now_millis(&self) -> u64;
}

impl ClockExt for FixedClock {
    fn now_millis(&self) -> u64 {
        hyperadapt_service::Clock::now(self).millis()
    }
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
}

fn report(c: Criterion, elapsed: Duration, outcome: Outcome) -> bool {
    let over = c.limit.is_some_and(|l| elapsed > l);
    let limit = c.limit.map(|l| format!(" (limit {:?})", l)).unwrap_or_default();
    let (ok, detail) = match outcome {
        Ok(d) if !over => (true, d),
        Ok(d) => (false, format!("{d}; took {elapsed:.2?}{limit}")),
        Err(e) => (false, e),
    };
    println!("{} {:<22} {:>9.2?}{limit}  {detail}", if ok { "PASS" } else { "FAIL" }, c.name, elapsed);
    ok
}

fn timed(f: impl FnOnce() -> Outcome) -> (Duration, Outcome) {
    let start = Instant::now();
    let out = f();
    (start.elapsed(), out)
}

fn main() {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let secs = |s| Some(Duration::from_secs(s));
    let mut results = Vec::new();

    let sync_criteria: Vec<(Criterion, fn() -> Outcome)> = vec![
        (Criterion { name: "scoring-bounds", limit: secs(1) }, scoring_bounds),
        (Criterion { name: "flip-symmetry", limit: None }, flip_symmetry),
        (Criterion { name: "cronbach-alpha", limit: secs(5) }, cronbach),
        (Criterion { name: "style-derivation", limit: None }, style_derivation),
    ];
    for (c, f) in sync_criteria {
        let (t, out) = timed(f);
        results.push(report(c, t, out));
    }

    let start = Instant::now();
    let out = rt.block_on(default_assignment());
    results.push(report(Criterion { name: "default-assignment", limit: None }, start.elapsed(), out));

    let more: Vec<(Criterion, fn() -> Outcome)> = vec![
        (Criterion { name: "pipeline-properties", limit: None }, pipeline_properties),
        (Criterion { name: "ordering", limit: secs(10) }, ordering),
        (Criterion { name: "cognitive-loop", limit: None }, cognitive_loop),
        (Criterion { name: "profiler-recovery", limit: secs(10) }, profiler_recovery),
    ];
    for (c, f) in more {
        let (t, out) = timed(f);
        results.push(report(c, t, out));
    }

    let start = Instant::now();
    let out = rt.block_on(service_transparency());
    results.push(report(Criterion { name: "service-transparency", limit: None }, start.elapsed(), out));

    let passed = results.iter().filter(|ok| **ok).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
