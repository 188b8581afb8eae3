//! Seeded synthetic-learner simulation of the full profiling and cognitive loops.
//!
//! Each agent draws a ground-truth style from the configured mix, answers the
//! questionnaire towards its true poles except for independent flips at the
//! noise rate (or skips it), takes the pre-test, then alternates page visits
//! and post-tests on the predicted next concept.
//!
//! Agents draw from their own RNG stream derived from the seed and agent
//! index, so results do not depend on how the work is scheduled. Skipping
//! agents need the cohort's modal style, so the run has two phases:
//! questionnaires first, then everything else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::{self, Answers, TestDefinition};
use crate::config::EngineConfig;
use crate::content::{CourseGraph, Fragment, Level, Role};
use crate::exec::Execution;
use crate::generator;
use crate::ils::{self, Answer, Confidence, Dimension, Instrument, ResponseSheet, StyleId};
use crate::learner::{self, Goal, Identity, Registration, StyleSource};
use crate::pedagogy::{self, DimensionParams, Strength};
use crate::psychometrics::StyleHistogram;
use crate::time::Timestamp;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("agent {agent}: {message}")]
    Agent { agent: usize, message: String },
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::InvalidConfig(_) => "InvalidConfig",
            SimError::Agent { .. } => "AgentFailure",
        }
    }
}

fn default_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub population: usize,
    /// Ground-truth style weights; must sum to 1.
    pub style_mix: BTreeMap<StyleId, f64>,
    /// Course package, resolved relative to the config file.
    pub course_path: PathBuf,
    pub seed: u64,
    pub sessions_per_learner: usize,
    /// Probability that any single questionnaire answer is flipped.
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Probability that an agent skips the questionnaire and gets the default style.
    #[serde(default)]
    pub skip_rate: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.population < 1 {
            return bad("population must be at least 1".into());
        }
        if self.style_mix.values().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("style weights must be non-negative".into());
        }
        let total: f64 = self.style_mix.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("style weights sum to {total}, expected 1"));
        }
        for (name, p) in [("noise", self.noise), ("skip_rate", self.skip_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn from_json(document: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = serde_json::from_str(document).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `course_path` resolved against the directory holding the config file.
    pub fn resolve_course_path(&self, config_file: &Path) -> PathBuf {
        match config_file.parent() {
            Some(dir) if self.course_path.is_relative() => dir.join(&self.course_path),
            _ => self.course_path.clone(),
        }
    }

    fn sample_style(&self, rng: &mut ChaCha8Rng) -> StyleId {
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = StyleId::DEFAULT;
        for (&id, &w) in &self.style_mix {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = id;
            if draw < acc {
                return id;
            }
        }
        last
    }
}

/// Whether a page honours the reasoning order: for a strict inductive learner
/// every example or fact precedes every theory or definition, and the reverse
/// for a strict deductive learner. `None` when reasoning is not strict.
pub fn ordering_conforms(fragments: &[&Fragment], reasoning: DimensionParams) -> Option<bool> {
    if reasoning.strength != Strength::Strict {
        return None;
    }
    let concrete = |f: &&Fragment| matches!(f.role, Role::Example | Role::Fact);
    let abstract_ = |f: &&Fragment| matches!(f.role, Role::Theory | Role::Definition);
    let deductive = reasoning.preferred_pole == ils::Pole::Deductive;
    let first = |f: &&Fragment| if deductive { abstract_(f) } else { concrete(f) };
    let second = |f: &&Fragment| if deductive { concrete(f) } else { abstract_(f) };
    let last_first = fragments.iter().rposition(first);
    let first_second = fragments.iter().position(second);
    Some(match (last_first, first_second) {
        (Some(a), Some(b)) => a < b,
        _ => true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageVisit {
    pub concept_id: String,
    pub fragments: Vec<String>,
    pub visible_links: Vec<String>,
    pub warnings: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordering_conforms: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosttestAttempt {
    pub concept_id: String,
    pub fraction: f64,
    pub score: f64,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub agent_id: usize,
    pub learner_id: String,
    pub true_style: StyleId,
    pub style_source: StyleSource,
    pub measured_style: StyleId,
    /// Measured M−N value per dimension, in dimension order.
    pub measured_values: Vec<i32>,
    pub pretest_fraction: f64,
    pub pretest_level: Level,
    pub pages: Vec<PageVisit>,
    pub posttests: Vec<PosttestAttempt>,
    pub final_level: Level,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub agents: usize,
    pub questionnaire_agents: usize,
    pub pages_generated: usize,
    pub strict_reasoning_pages: usize,
    pub conforming_pages: usize,
    /// Conforming / checked strict-reasoning pages; 1 when none were checked.
    pub ordering_conformance_rate: f64,
    pub strong_dimensions: usize,
    pub strong_dimensions_recovered: usize,
    /// Recovered / strong dimensions among questionnaire agents; 1 when none.
    pub recovery_accuracy: f64,
    pub degraded_pages: usize,
    pub completed_agents: usize,
    pub final_levels: BTreeMap<Level, usize>,
    pub mean_posttests_per_agent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub summary: SimSummary,
    pub transcripts: Vec<AgentTranscript>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

const AGENT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

fn agent_rng(seed: u64, agent: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(AGENT_STREAM ^ agent as u64);
    rng
}

struct Draft {
    rng: ChaCha8Rng,
    true_style: StyleId,
    sheet: Option<ResponseSheet>,
}

fn draft_agent(config: &SimConfig, instrument: &Instrument, agent: usize) -> Draft {
    let mut rng = agent_rng(config.seed, agent);
    let true_style = config.sample_style(&mut rng);
    let skips = rng.random::<f64>() < config.skip_rate;
    let sheet = (!skips).then(|| {
        let mut sheet = ResponseSheet::new(&instrument.instrument_id);
        for q in &instrument.questions {
            let honest = instrument.answer_towards(true_style.pole(q.dimension));
            let answer = if rng.random::<f64>() < config.noise { honest.flipped() } else { honest };
            sheet.answers.insert(q.question_id.clone(), answer);
        }
        sheet
    });
    Draft { rng, true_style, sheet }
}

fn answer_test(test: &TestDefinition, p_correct: f64, rng: &mut ChaCha8Rng) -> Answers {
    test.items
        .iter()
        .map(|item| {
            let choice = if rng.random::<f64>() < p_correct {
                item.correct_option
            } else {
                (item.correct_option + 1) % item.options.len().max(1)
            };
            (item.item_id.clone(), choice)
        })
        .collect()
}

fn run_agent(
    agent: usize,
    draft: Draft,
    cohort: &StyleHistogram,
    course: &CourseGraph,
    instrument: &Instrument,
    engine: &EngineConfig,
    sessions: usize,
) -> Result<AgentTranscript, String> {
    let Draft { mut rng, true_style, sheet } = draft;
    let mut clock = 0u64;
    let mut tick = || {
        clock += 1;
        Timestamp(clock)
    };

    let login = format!("agent-{agent:05}");
    let salt: [u8; 8] = rng.random();
    let goal = if rng.random::<bool>() { Goal::General } else { Goal::InDepth };
    let registration = Registration {
        identity: Identity {
            login: login.clone(),
            name: "Agent".into(),
            first_name: format!("{agent}"),
            age: Some(18 + (agent % 30) as u32),
            email: format!("{login}@sim.invalid"),
        },
        password: format!("pw-{agent}"),
        goal,
        courses: vec![course.course_id().to_string()],
    };
    let none_taken: std::collections::HashSet<String> = Default::default();
    let mut record = learner::register_learner(registration, &salt, &none_taken, tick()).map_err(|e| e.to_string())?;

    match &sheet {
        Some(sheet) => {
            record.set_style_from_questionnaire(sheet, instrument, tick()).map_err(|e| e.to_string())?;
        }
        None => {
            record.assign_default_style(cohort, tick()).map_err(|e| e.to_string())?;
        }
    }
    let profile = record.style.clone().expect("style assigned");

    let ability: f64 = rng.random_range(0.2..0.9);
    let pretest = course.pretest().ok_or("course has no pre-test")?;
    let answers = answer_test(pretest, ability * 0.6, &mut rng);
    let pre = assessment::grade_pretest(&mut record, pretest, &answers, engine, tick()).map_err(|e| e.to_string())?;

    let params = generator::params_for(&record);
    let reasoning = params.get(Dimension::Reasoning);
    let mut attempts: BTreeMap<String, u32> = BTreeMap::new();
    let mut pages = Vec::new();
    let mut posttests = Vec::new();

    for _ in 0..sessions {
        let Some(next) = pedagogy::predict_next_concept(course, &record, &engine.thresholds).map_err(|e| e.to_string())?
        else {
            break;
        };
        let page = generator::generate_page(&mut record, course, &next, engine, tick()).map_err(|e| e.to_string())?;
        let shown: Vec<&Fragment> = page
            .fragments
            .iter()
            .map(|id| course.fragments().iter().find(|f| &f.fragment_id == id).expect("page fragment exists"))
            .collect();
        pages.push(PageVisit {
            concept_id: next.clone(),
            fragments: page.fragments.clone(),
            visible_links: page.links.iter().filter(|l| l.visible).map(|l| l.target_concept_id.clone()).collect(),
            warnings: page.warnings.len(),
            ordering_conforms: ordering_conforms(&shown, reasoning),
        });

        let Some(test) = course.posttest_for(&next) else { break };
        let tries = attempts.entry(next.clone()).or_default();
        *tries += 1;
        let p_correct = (ability + 0.2 * *tries as f64).min(1.0);
        let answers = answer_test(test, p_correct, &mut rng);
        let result =
            assessment::grade_posttest(&mut record, course, test, &answers, engine, tick()).map_err(|e| e.to_string())?;
        posttests.push(PosttestAttempt {
            concept_id: next,
            fraction: result.fraction,
            score: result.concept_score.unwrap_or_default(),
            level: result.level.unwrap_or(Level::Beginner),
        });
    }

    let completed = pedagogy::predict_next_concept(course, &record, &engine.thresholds)
        .map_err(|e| e.to_string())?
        .is_none();
    Ok(AgentTranscript {
        agent_id: agent,
        learner_id: record.learner_id.clone(),
        true_style,
        style_source: record.style_source.expect("style assigned"),
        measured_style: profile.style_id,
        measured_values: profile.scores.iter().map(|s| s.value).collect(),
        pretest_fraction: pre.fraction,
        pretest_level: pre.level.unwrap_or(Level::Beginner),
        pages,
        posttests,
        final_level: record.status[course.course_id()],
        completed,
    })
}

/// Runs the whole population. Transcripts come back in agent order whatever
/// the execution route.
pub fn run_simulation(
    config: &SimConfig,
    course: &CourseGraph,
    instrument: &Instrument,
    engine: &EngineConfig,
    exec: Execution,
) -> Result<SimReport, SimError> {
    config.validate()?;
    let drafts = exec.map_range(config.population, |agent| draft_agent(config, instrument, agent));

    let measured: Vec<StyleId> = drafts
        .iter()
        .filter_map(|d| d.sheet.as_ref())
        .map(|s| ils::score_sheet(s, instrument).map(|p| p.style_id))
        .collect::<Result<_, _>>()
        .map_err(|e| SimError::InvalidConfig(format!("instrument rejected a generated sheet: {e}")))?;
    let cohort = StyleHistogram::from_ids(measured);

    let indexed: Vec<(usize, Draft)> = drafts.into_iter().enumerate().collect();
    let results = exec.map(&indexed, |(agent, draft)| {
        let draft = Draft {
            rng: draft.rng.clone(),
            true_style: draft.true_style,
            sheet: draft.sheet.clone(),
        };
        run_agent(*agent, draft, &cohort, course, instrument, engine, config.sessions_per_learner)
            .map_err(|message| SimError::Agent { agent: *agent, message })
    });
    let transcripts = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    Ok(SimReport {
        seed: config.seed,
        summary: summarize(&transcripts),
        transcripts,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn summarize(transcripts: &[AgentTranscript]) -> SimSummary {
    let pages = transcripts.iter().flat_map(|t| &t.pages);
    let strict_reasoning_pages = pages.clone().filter(|p| p.ordering_conforms.is_some()).count();
    let conforming_pages = pages.clone().filter(|p| p.ordering_conforms == Some(true)).count();

    let mut strong = 0;
    let mut recovered = 0;
    for t in transcripts.iter().filter(|t| t.style_source == StyleSource::Questionnaire) {
        for (d, &value) in Dimension::ALL.iter().zip(&t.measured_values) {
            if ils::classify_confidence(value) == Ok(Confidence::Strong) {
                strong += 1;
                if t.measured_style.pole(*d) == t.true_style.pole(*d) {
                    recovered += 1;
                }
            }
        }
    }

    let mut final_levels = BTreeMap::new();
    for t in transcripts {
        *final_levels.entry(t.final_level).or_default() += 1;
    }

    SimSummary {
        agents: transcripts.len(),
        questionnaire_agents: transcripts
            .iter()
            .filter(|t| t.style_source == StyleSource::Questionnaire)
            .count(),
        pages_generated: pages.clone().count(),
        strict_reasoning_pages,
        conforming_pages,
        ordering_conformance_rate: ratio(conforming_pages, strict_reasoning_pages),
        strong_dimensions: strong,
        strong_dimensions_recovered: recovered,
        recovery_accuracy: ratio(recovered, strong),
        degraded_pages: pages.filter(|p| p.warnings > 0).count(),
        completed_agents: transcripts.iter().filter(|t| t.completed).count(),
        final_levels,
        mean_posttests_per_agent: transcripts.iter().map(|t| t.posttests.len()).sum::<usize>() as f64
            / transcripts.len().max(1) as f64,
    }
}

/// Answers a whole instrument towards `style`, for tests and fixtures.
pub fn sheet_for_style(instrument: &Instrument, style: StyleId) -> ResponseSheet {
    let mut sheet = instrument.uniform_sheet(Answer::A);
    for q in &instrument.questions {
        sheet
            .answers
            .insert(q.question_id.clone(), instrument.answer_towards(style.pole(q.dimension)));
    }
    sheet
}
