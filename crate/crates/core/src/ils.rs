//! Index of Learning Styles: the 44-item forced-choice instrument, per-dimension
//! M−N scoring, confidence bands and the 16-way style id.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;

pub const QUESTIONS_PER_DIMENSION: usize = 11;
pub const QUESTION_COUNT: usize = 4 * QUESTIONS_PER_DIMENSION;

const STAND_IN_INSTRUMENT: &str = include_str!("../data/ils_stand_in.json");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IlsError {
    #[error("malformed instrument document: {0}")]
    MalformedDocument(String),
    #[error("expected 44 questions with 11 per dimension, found {total} ({per_dimension:?})")]
    WrongQuestionCount {
        total: usize,
        per_dimension: [usize; 4],
    },
    #[error("duplicate question id {0:?}")]
    DuplicateQuestionId(String),
    #[error("unknown dimension {0:?}")]
    UnknownDimension(String),
    #[error("response sheet is missing {missing} answer(s)")]
    IncompleteSheet { missing: usize },
    #[error("response sheet does not match instrument: {0}")]
    InstrumentMismatch(String),
    #[error("score {0} is outside 1..=11 in magnitude")]
    OutOfRange(i32),
    #[error("no score for dimension {0}")]
    MissingDimension(Dimension),
    #[error("more than one score for dimension {0}")]
    DuplicateDimension(Dimension),
}

impl IlsError {
    pub fn code(&self) -> &'static str {
        match self {
            IlsError::MalformedDocument(_) => "MalformedDocument",
            IlsError::WrongQuestionCount { .. } => "WrongQuestionCount",
            IlsError::DuplicateQuestionId(_) => "DuplicateQuestionId",
            IlsError::UnknownDimension(_) => "UnknownDimension",
            IlsError::IncompleteSheet { .. } => "IncompleteSheet",
            IlsError::InstrumentMismatch(_) => "InstrumentMismatch",
            IlsError::OutOfRange(_) => "OutOfRange",
            IlsError::MissingDimension(_) => "MissingDimension",
            IlsError::DuplicateDimension(_) => "DuplicateDimension",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Processing,
    Reasoning,
    Perception,
    Progress,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Processing,
        Dimension::Reasoning,
        Dimension::Perception,
        Dimension::Progress,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Dimension> {
        Dimension::ALL.into_iter().find(|d| d.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Processing => "Processing",
            Dimension::Reasoning => "Reasoning",
            Dimension::Perception => "Perception",
            Dimension::Progress => "Progress",
        }
    }

    /// The two poles in style-id order: the first contributes bit 0.
    pub fn poles(self) -> (Pole, Pole) {
        match self {
            Dimension::Processing => (Pole::Active, Pole::Reflective),
            Dimension::Reasoning => (Pole::Inductive, Pole::Deductive),
            Dimension::Perception => (Pole::Verbal, Pole::Visual),
            Dimension::Progress => (Pole::Sequential, Pole::Global),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pole {
    Active,
    Reflective,
    Inductive,
    Deductive,
    Verbal,
    Visual,
    Sequential,
    Global,
}

impl Pole {
    pub const ALL: [Pole; 8] = [
        Pole::Active,
        Pole::Reflective,
        Pole::Inductive,
        Pole::Deductive,
        Pole::Verbal,
        Pole::Visual,
        Pole::Sequential,
        Pole::Global,
    ];

    pub fn dimension(self) -> Dimension {
        match self {
            Pole::Active | Pole::Reflective => Dimension::Processing,
            Pole::Inductive | Pole::Deductive => Dimension::Reasoning,
            Pole::Verbal | Pole::Visual => Dimension::Perception,
            Pole::Sequential | Pole::Global => Dimension::Progress,
        }
    }

    pub fn opposite(self) -> Pole {
        let (first, second) = self.dimension().poles();
        if self == first {
            second
        } else {
            first
        }
    }

    /// 0 for Active, Inductive, Verbal and Sequential; 1 for their opposites.
    pub fn bit(self) -> u8 {
        u8::from(self != self.dimension().poles().0)
    }

    pub fn from_name(name: &str) -> Option<Pole> {
        Pole::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Pole::Active => "Active",
            Pole::Reflective => "Reflective",
            Pole::Inductive => "Inductive",
            Pole::Deductive => "Deductive",
            Pole::Verbal => "Verbal",
            Pole::Visual => "Visual",
            Pole::Sequential => "Sequential",
            Pole::Global => "Global",
        }
    }
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which pole an `a` answer and a `b` answer point to within one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolePair {
    pub pole_a: Pole,
    pub pole_b: Pole,
}

impl PolePair {
    pub fn canonical(dimension: Dimension) -> PolePair {
        let (pole_a, pole_b) = dimension.poles();
        PolePair { pole_a, pole_b }
    }

    fn pole_for_sign(&self, value: i32) -> Pole {
        if value >= 0 {
            self.pole_a
        } else {
            self.pole_b
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

impl Answer {
    pub fn flipped(self) -> Answer {
        match self {
            Answer::A => Answer::B,
            Answer::B => Answer::A,
        }
    }

    pub fn parse(raw: &str) -> Option<Answer> {
        match raw.trim() {
            "a" | "A" => Some(Answer::A),
            "b" | "B" => Some(Answer::B),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub question_id: String,
    pub dimension: Dimension,
    pub prompt: String,
    pub answer_a: String,
    pub answer_b: String,
}

/// A validated questionnaire: 44 questions, 11 per dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instrument {
    pub instrument_id: String,
    pub dimension_poles: BTreeMap<Dimension, PolePair>,
    pub questions: Vec<Question>,
}

#[derive(Deserialize)]
struct RawInstrument {
    instrument_id: String,
    dimension_poles: BTreeMap<String, RawPolePair>,
    questions: Vec<RawQuestion>,
}

#[derive(Deserialize)]
struct RawPolePair {
    pole_a: String,
    pole_b: String,
}

#[derive(Deserialize)]
struct RawQuestion {
    question_id: String,
    dimension: String,
    prompt: String,
    answer_a: String,
    answer_b: String,
}

/// Parses and validates an instrument document.
pub fn load_instrument(document: &str) -> Result<Instrument, IlsError> {
    let raw: RawInstrument =
        serde_json::from_str(document).map_err(|e| IlsError::MalformedDocument(e.to_string()))?;

    let mut questions = Vec::with_capacity(raw.questions.len());
    for q in raw.questions {
        let dimension =
            Dimension::from_name(&q.dimension).ok_or(IlsError::UnknownDimension(q.dimension))?;
        questions.push(Question {
            question_id: q.question_id,
            dimension,
            prompt: q.prompt,
            answer_a: q.answer_a,
            answer_b: q.answer_b,
        });
    }

    let mut dimension_poles = BTreeMap::new();
    for (name, pair) in raw.dimension_poles {
        let dimension = Dimension::from_name(&name).ok_or(IlsError::UnknownDimension(name))?;
        let parse = |p: &str| {
            Pole::from_name(p).ok_or_else(|| IlsError::MalformedDocument(format!("unknown pole {p:?}")))
        };
        let pole_a = parse(&pair.pole_a)?;
        let pole_b = parse(&pair.pole_b)?;
        if pole_a.dimension() != dimension || pole_b != pole_a.opposite() {
            return Err(IlsError::MalformedDocument(format!(
                "poles {pole_a}/{pole_b} are not the two poles of {dimension}"
            )));
        }
        dimension_poles.insert(dimension, PolePair { pole_a, pole_b });
    }
    if let Some(missing) = Dimension::ALL.into_iter().find(|d| !dimension_poles.contains_key(d)) {
        return Err(IlsError::MalformedDocument(format!("no poles declared for {missing}")));
    }

    let mut seen = HashSet::new();
    for q in &questions {
        if !seen.insert(q.question_id.as_str()) {
            return Err(IlsError::DuplicateQuestionId(q.question_id.clone()));
        }
    }

    let mut per_dimension = [0usize; 4];
    for q in &questions {
        per_dimension[q.dimension.index()] += 1;
    }
    if questions.len() != QUESTION_COUNT || per_dimension.iter().any(|&c| c != QUESTIONS_PER_DIMENSION) {
        return Err(IlsError::WrongQuestionCount {
            total: questions.len(),
            per_dimension,
        });
    }

    Ok(Instrument {
        instrument_id: raw.instrument_id,
        dimension_poles,
        questions,
    })
}

impl Instrument {
    /// The bundled instrument: placeholder wording, real 4×11 structure, `a`
    /// answers pointing at Active, Inductive, Verbal and Sequential.
    pub fn stand_in() -> Instrument {
        load_instrument(STAND_IN_INSTRUMENT).expect("bundled instrument is valid")
    }

    pub fn stand_in_document() -> &'static str {
        STAND_IN_INSTRUMENT
    }

    pub fn poles(&self, dimension: Dimension) -> PolePair {
        self.dimension_poles[&dimension]
    }

    pub fn questions_in(&self, dimension: Dimension) -> impl Iterator<Item = &Question> {
        self.questions.iter().filter(move |q| q.dimension == dimension)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instrument serializes")
    }

    /// A complete sheet with every question answered `fill`.
    pub fn uniform_sheet(&self, fill: Answer) -> ResponseSheet {
        ResponseSheet {
            instrument_id: self.instrument_id.clone(),
            answers: self.questions.iter().map(|q| (q.question_id.clone(), fill)).collect(),
        }
    }

    /// The answer that points towards `pole` on this instrument.
    pub fn answer_towards(&self, pole: Pole) -> Answer {
        if self.poles(pole.dimension()).pole_a == pole {
            Answer::A
        } else {
            Answer::B
        }
    }
}

/// One learner's answers, keyed by question id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSheet {
    pub instrument_id: String,
    pub answers: BTreeMap<String, Answer>,
}

impl ResponseSheet {
    pub fn new(instrument_id: impl Into<String>) -> Self {
        ResponseSheet {
            instrument_id: instrument_id.into(),
            answers: BTreeMap::new(),
        }
    }

    pub fn flipped(&self) -> ResponseSheet {
        ResponseSheet {
            instrument_id: self.instrument_id.clone(),
            answers: self.answers.iter().map(|(k, v)| (k.clone(), v.flipped())).collect(),
        }
    }

    /// Checks the sheet answers every question of `instrument` and nothing else.
    pub fn validate(&self, instrument: &Instrument) -> Result<(), IlsError> {
        if self.instrument_id != instrument.instrument_id {
            return Err(IlsError::InstrumentMismatch(format!(
                "sheet is for {:?}, instrument is {:?}",
                self.instrument_id, instrument.instrument_id
            )));
        }
        let known: HashSet<&str> = instrument.questions.iter().map(|q| q.question_id.as_str()).collect();
        if let Some(unknown) = self.answers.keys().find(|k| !known.contains(k.as_str())) {
            return Err(IlsError::InstrumentMismatch(format!("unknown question id {unknown:?}")));
        }
        let missing = instrument.questions.len() - self.answers.len();
        if missing > 0 {
            return Err(IlsError::IncompleteSheet { missing });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Confidence {
    Uncertain,
    Moderate,
    Strong,
}

/// Maps an M−N value onto its confidence band by magnitude:
/// 1–3 uncertain, 4–8 moderate, 9–11 strong.
pub fn classify_confidence(value: i32) -> Result<Confidence, IlsError> {
    match value.unsigned_abs() {
        1..=3 => Ok(Confidence::Uncertain),
        4..=8 => Ok(Confidence::Moderate),
        9..=11 => Ok(Confidence::Strong),
        _ => Err(IlsError::OutOfRange(value)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionScore {
    pub dimension: Dimension,
    /// Count of `a` answers.
    pub m: u32,
    /// Count of `b` answers.
    pub n: u32,
    /// `m - n`.
    pub value: i32,
    pub pole: Pole,
    pub confidence: Confidence,
}

impl DimensionScore {
    pub fn from_counts(dimension: Dimension, m: u32, n: u32, poles: PolePair) -> Result<Self, IlsError> {
        let value = m as i32 - n as i32;
        let confidence = classify_confidence(value)?;
        Ok(DimensionScore {
            dimension,
            m,
            n,
            value,
            pole: poles.pole_for_sign(value),
            confidence,
        })
    }

    /// The weakest possible score (|M−N| = 1) leaning towards `pole`, oriented
    /// on the canonical pole pair of its dimension.
    pub fn weakest_towards(pole: Pole) -> Self {
        let dimension = pole.dimension();
        let half = QUESTIONS_PER_DIMENSION as u32 / 2;
        let (m, n) = if pole.bit() == 0 { (half + 1, half) } else { (half, half + 1) };
        DimensionScore::from_counts(dimension, m, n, PolePair::canonical(dimension))
            .expect("|value| = 1 is in range")
    }
}

/// Scores one dimension of a complete sheet.
pub fn score_dimension(
    sheet: &ResponseSheet,
    instrument: &Instrument,
    dimension: Dimension,
) -> Result<DimensionScore, IlsError> {
    sheet.validate(instrument)?;
    Ok(count_dimension(sheet, instrument, dimension))
}

fn count_dimension(sheet: &ResponseSheet, instrument: &Instrument, dimension: Dimension) -> DimensionScore {
    let (mut m, mut n) = (0u32, 0u32);
    for q in instrument.questions_in(dimension) {
        match sheet.answers[&q.question_id] {
            Answer::A => m += 1,
            Answer::B => n += 1,
        }
    }
    // 11 answers always give an odd, nonzero difference.
    DimensionScore::from_counts(dimension, m, n, instrument.poles(dimension)).expect("odd count")
}

/// Style id 1..=16: `1 + Σ bit(pole_d) · 2^d` over the dimensions in
/// Processing, Reasoning, Perception, Progress order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct StyleId(u8);

impl StyleId {
    pub const DEFAULT: StyleId = StyleId(1);

    pub fn new(id: u8) -> Option<StyleId> {
        (1..=16).contains(&id).then_some(StyleId(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = StyleId> {
        (1..=16).map(StyleId)
    }

    /// Poles must be given one per dimension, in any order.
    pub fn from_poles(poles: [Pole; 4]) -> Result<StyleId, IlsError> {
        let mut seen = [false; 4];
        let mut bits = 0u8;
        for pole in poles {
            let d = pole.dimension();
            if std::mem::replace(&mut seen[d.index()], true) {
                return Err(IlsError::DuplicateDimension(d));
            }
            bits |= pole.bit() << d.index();
        }
        Ok(StyleId(bits + 1))
    }

    /// The pole chosen on each dimension, in dimension order.
    pub fn poles(self) -> [Pole; 4] {
        let bits = self.0 - 1;
        Dimension::ALL.map(|d| {
            let (first, second) = d.poles();
            if bits >> d.index() & 1 == 0 {
                first
            } else {
                second
            }
        })
    }

    pub fn pole(self, dimension: Dimension) -> Pole {
        self.poles()[dimension.index()]
    }
}

impl TryFrom<u8> for StyleId {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        StyleId::new(value).ok_or_else(|| format!("style id {value} outside 1..=16"))
    }
}

impl From<StyleId> for u8 {
    fn from(id: StyleId) -> u8 {
        id.0
    }
}

impl fmt::Display for StyleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Four dimension scores plus the style id they select.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleProfile {
    pub style_id: StyleId,
    /// One score per dimension, in dimension order.
    pub scores: Vec<DimensionScore>,
}

impl StyleProfile {
    pub fn score(&self, dimension: Dimension) -> &DimensionScore {
        &self.scores[dimension.index()]
    }

    pub fn pole(&self, dimension: Dimension) -> Pole {
        self.score(dimension).pole
    }

    /// Profile with the weakest (uncertain) score towards each pole of `style`.
    pub fn weakest(style: StyleId) -> StyleProfile {
        StyleProfile {
            style_id: style,
            scores: style.poles().into_iter().map(DimensionScore::weakest_towards).collect(),
        }
    }
}

/// Combines one score per dimension into a profile.
pub fn derive_style(scores: &[DimensionScore]) -> Result<StyleProfile, IlsError> {
    let mut slots: [Option<DimensionScore>; 4] = [None; 4];
    for score in scores {
        let slot = &mut slots[score.dimension.index()];
        if slot.is_some() {
            return Err(IlsError::DuplicateDimension(score.dimension));
        }
        *slot = Some(*score);
    }
    let mut ordered = Vec::with_capacity(4);
    for (d, slot) in Dimension::ALL.into_iter().zip(slots) {
        ordered.push(slot.ok_or(IlsError::MissingDimension(d))?);
    }
    let poles = [ordered[0].pole, ordered[1].pole, ordered[2].pole, ordered[3].pole];
    Ok(StyleProfile {
        style_id: StyleId::from_poles(poles)?,
        scores: ordered,
    })
}

/// Validates the sheet once and scores all four dimensions.
pub fn score_sheet(sheet: &ResponseSheet, instrument: &Instrument) -> Result<StyleProfile, IlsError> {
    sheet.validate(instrument)?;
    let scores = Dimension::ALL.map(|d| count_dimension(sheet, instrument, d));
    derive_style(&scores)
}

/// Scores a batch of sheets; output order follows input order.
pub fn score_cohort(
    sheets: &[ResponseSheet],
    instrument: &Instrument,
    exec: Execution,
) -> Vec<Result<StyleProfile, IlsError>> {
    exec.map(sheets, |sheet| score_sheet(sheet, instrument))
}
