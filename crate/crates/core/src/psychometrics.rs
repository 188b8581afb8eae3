//! Instrument reliability (Cronbach's alpha) and cohort style statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::ils::{Answer, Dimension, Instrument, ResponseSheet, StyleId, StyleProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsychometricsError {
    #[error("matrix needs at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("matrix needs at least 2 respondents, got {0}")]
    TooFewRows(usize),
    #[error("row {row} has {len} cells, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("non-finite cell at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("total-score variance is zero")]
    DegenerateMatrix,
}

impl PsychometricsError {
    pub fn code(&self) -> &'static str {
        match self {
            PsychometricsError::TooFewItems(_) => "TooFewItems",
            PsychometricsError::TooFewRows(_) => "TooFewRows",
            PsychometricsError::Ragged { .. } => "RaggedMatrix",
            PsychometricsError::NonFinite { .. } => "NonFinite",
            PsychometricsError::DegenerateMatrix => "DegenerateMatrix",
        }
    }
}

/// Respondents × items, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl ResponseMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, PsychometricsError> {
        let n = rows.len();
        if n == 0 {
            return Err(PsychometricsError::TooFewRows(0));
        }
        let k = rows[0].len();
        let mut cells = Vec::with_capacity(n * k);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(PsychometricsError::Ragged { row: r, len: row.len(), expected: k });
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(PsychometricsError::NonFinite { row: r, col: c });
            }
            cells.extend(row);
        }
        if k < 2 {
            return Err(PsychometricsError::TooFewItems(k));
        }
        if n < 2 {
            return Err(PsychometricsError::TooFewRows(n));
        }
        Ok(ResponseMatrix { rows: n, cols: k, cells })
    }

    /// Encodes `a` as 1 and `b` as 0 over the given questions, one row per sheet.
    /// Sheets are assumed complete for those questions.
    pub fn from_sheets<'q>(
        sheets: &[ResponseSheet],
        questions: impl IntoIterator<Item = &'q str> + Clone,
    ) -> Result<Self, PsychometricsError> {
        let rows = sheets
            .iter()
            .map(|sheet| {
                questions
                    .clone()
                    .into_iter()
                    .map(|q| match sheet.answers.get(q) {
                        Some(Answer::A) => 1.0,
                        Some(Answer::B) => 0.0,
                        None => f64::NAN,
                    })
                    .collect()
            })
            .collect();
        ResponseMatrix::new(rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn items(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }
}

/// Divisor used for every variance in the alpha formula. Alpha itself is the
/// same under both since the divisor cancels in the item/total ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    #[default]
    Population,
    Sample,
}

impl VarianceKind {
    fn divisor(self, n: usize) -> f64 {
        match self {
            VarianceKind::Population => n as f64,
            VarianceKind::Sample => (n - 1) as f64,
        }
    }
}

fn variance(values: impl Iterator<Item = f64> + Clone, kind: VarianceKind) -> f64 {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = sum / count as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    ss / kind.divisor(count)
}

/// Cronbach's alpha with population variances.
pub fn cronbach_alpha(matrix: &ResponseMatrix) -> Result<f64, PsychometricsError> {
    cronbach_alpha_with(matrix, VarianceKind::Population, Execution::Sequential)
}

/// `α = k/(k−1) · (1 − Σ var(item) / var(total))`.
pub fn cronbach_alpha_with(
    matrix: &ResponseMatrix,
    kind: VarianceKind,
    exec: Execution,
) -> Result<f64, PsychometricsError> {
    let k = matrix.items();
    let item_variances = exec.map_range(k, |c| variance(matrix.column(c), kind));
    let item_sum: f64 = item_variances.iter().sum();
    let totals: Vec<f64> = (0..matrix.rows()).map(|r| matrix.row(r).iter().sum()).collect();
    let total_variance = variance(totals.iter().copied(), kind);
    // Relative cutoff: sums of integer cells with no spread still leave rounding residue.
    if total_variance <= f64::EPSILON * (1.0 + item_sum) {
        return Err(PsychometricsError::DegenerateMatrix);
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_sum / total_variance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentKind {
    /// Preference or attitude measures (learning-style questionnaires).
    #[default]
    Preference,
    /// Knowledge tests.
    Knowledge,
}

impl InstrumentKind {
    pub fn threshold(self) -> f64 {
        match self {
            InstrumentKind::Preference => 0.50,
            InstrumentKind::Knowledge => 0.75,
        }
    }
}

impl std::str::FromStr for InstrumentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preference" => Ok(InstrumentKind::Preference),
            "knowledge" => Ok(InstrumentKind::Knowledge),
            other => Err(format!("unknown instrument kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub threshold: f64,
    pub acceptable: bool,
}

pub fn reliability_verdict(alpha: f64, kind: InstrumentKind) -> Verdict {
    let threshold = kind.threshold();
    Verdict {
        threshold,
        acceptable: alpha >= threshold,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub alpha: f64,
    pub k: usize,
    pub n: usize,
    pub instrument_kind: InstrumentKind,
    pub acceptable: bool,
}

pub fn reliability_report(
    matrix: &ResponseMatrix,
    kind: InstrumentKind,
    variance: VarianceKind,
) -> Result<ReliabilityReport, PsychometricsError> {
    let alpha = cronbach_alpha_with(matrix, variance, Execution::Sequential)?;
    Ok(ReliabilityReport {
        alpha,
        k: matrix.items(),
        n: matrix.rows(),
        instrument_kind: kind,
        acceptable: reliability_verdict(alpha, kind).acceptable,
    })
}

/// Alpha over all 44 items of the given sheets.
pub fn instrument_reliability(
    sheets: &[ResponseSheet],
    instrument: &Instrument,
    kind: InstrumentKind,
) -> Result<ReliabilityReport, PsychometricsError> {
    let ids = instrument.questions.iter().map(|q| q.question_id.as_str());
    let matrix = ResponseMatrix::from_sheets(sheets, ids)?;
    reliability_report(&matrix, kind, VarianceKind::Population)
}

/// Alpha computed separately over each dimension's 11 items.
pub fn dimension_reliability(
    sheets: &[ResponseSheet],
    instrument: &Instrument,
    kind: InstrumentKind,
) -> BTreeMap<Dimension, Result<ReliabilityReport, PsychometricsError>> {
    Dimension::ALL
        .into_iter()
        .map(|d| {
            let ids: Vec<&str> = instrument.questions_in(d).map(|q| q.question_id.as_str()).collect();
            let report = ResponseMatrix::from_sheets(sheets, ids)
                .and_then(|m| reliability_report(&m, kind, VarianceKind::Population));
            (d, report)
        })
        .collect()
}

/// Learner count per style id; ids with no learners are omitted.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StyleHistogram {
    pub counts: BTreeMap<StyleId, u64>,
    pub total: u64,
}

impl StyleHistogram {
    pub fn from_ids(ids: impl IntoIterator<Item = StyleId>) -> Self {
        let mut hist = StyleHistogram::default();
        for id in ids {
            *hist.counts.entry(id).or_default() += 1;
            hist.total += 1;
        }
        hist
    }

    pub fn count(&self, id: StyleId) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

pub fn style_distribution(profiles: &[StyleProfile]) -> StyleHistogram {
    StyleHistogram::from_ids(profiles.iter().map(|p| p.style_id))
}

/// Most frequent style; lowest id wins ties; style 1 for an empty cohort.
pub fn modal_style(histogram: &StyleHistogram) -> StyleId {
    let mut best: Option<(StyleId, u64)> = None;
    for (&id, &count) in &histogram.counts {
        // BTreeMap iterates ascending, so strict > keeps the lowest id on ties.
        if count > 0 && best.is_none_or(|(_, c)| count > c) {
            best = Some((id, count));
        }
    }
    best.map_or(StyleId::DEFAULT, |(id, _)| id)
}

/// Histogram plus its mode; the payload of the cohort style reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleReport {
    pub histogram: StyleHistogram,
    pub modal_style: StyleId,
}

impl StyleReport {
    pub fn new(histogram: StyleHistogram) -> Self {
        let modal_style = modal_style(&histogram);
        StyleReport { histogram, modal_style }
    }
}
