//! Cohort analytics over a store. The CLI and the HTTP service both call
//! these, so they agree on identical stores.

use hyperadapt_core::ils::{Instrument, ResponseSheet};
use hyperadapt_core::learner::{LearnerRecord, StyleSource};
use hyperadapt_core::psychometrics::{
    instrument_reliability, InstrumentKind, PsychometricsError, ReliabilityReport, StyleHistogram, StyleReport,
};

use crate::store::{Store, StoreError};

pub const STYLE_REPORT: &str = "style-distribution";

/// Styles measured by the questionnaire. Defaulted learners are left out so
/// the default does not feed on itself.
pub fn style_histogram(learners: &[LearnerRecord]) -> StyleHistogram {
    StyleHistogram::from_ids(
        learners
            .iter()
            .filter(|r| r.style_source == Some(StyleSource::Questionnaire))
            .filter_map(|r| r.style.as_ref().map(|s| s.style_id)),
    )
}

pub fn style_report(store: &Store) -> Result<StyleReport, StoreError> {
    Ok(StyleReport::new(style_histogram(&store.learners()?)))
}

/// Recomputes the style report and caches it under `cohort_stats/`.
pub fn refresh_style_report(store: &Store) -> Result<StyleReport, StoreError> {
    let report = style_report(store)?;
    store.put_cohort_report(STYLE_REPORT, &report)?;
    Ok(report)
}

/// Stored questionnaire sheets answered on `instrument`.
pub fn questionnaire_sheets(learners: &[LearnerRecord], instrument: &Instrument) -> Vec<ResponseSheet> {
    learners
        .iter()
        .filter_map(|r| r.questionnaire.clone())
        .filter(|s| s.instrument_id == instrument.instrument_id)
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CohortError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Psychometrics(#[from] PsychometricsError),
}

pub fn alpha_report(store: &Store, instrument: &Instrument, kind: InstrumentKind) -> Result<ReliabilityReport, CohortError> {
    let sheets = questionnaire_sheets(&store.learners()?, instrument);
    Ok(instrument_reliability(&sheets, instrument, kind)?)
}
