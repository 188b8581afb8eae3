//! CSV response exports: one row per respondent, one column per item.
//!
//! Questionnaire exports use headers `q1..q44` with `a`/`b` cells. For alpha
//! computations cells may also be plain numbers; `a` reads as 1 and `b` as 0.
//! A leading column named `learner_id` or `id` is carried through and ignored
//! for scoring.

use std::collections::BTreeMap;
use std::io::Read;

use thiserror::Error;

use crate::ils::{Answer, Instrument, ResponseSheet};
use crate::psychometrics::{PsychometricsError, ResponseMatrix};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column {column:?}: cannot read {value:?}")]
    BadCell { row: usize, column: String, value: String },
    #[error(transparent)]
    Matrix(#[from] PsychometricsError),
}

impl CsvError {
    pub fn code(&self) -> &'static str {
        match self {
            CsvError::Csv(_) => "MalformedCsv",
            CsvError::BadCell { .. } => "BadCell",
            CsvError::Matrix(e) => e.code(),
        }
    }
}

fn is_id_column(name: &str) -> bool {
    matches!(name, "learner_id" | "id")
}

/// Reads a numeric matrix from any item CSV.
pub fn read_matrix(reader: impl Read) -> Result<ResponseMatrix, CsvError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let item_cols: Vec<usize> = (0..headers.len()).filter(|&i| !is_id_column(&headers[i])).collect();
    let mut rows = Vec::new();
    for (r, record) in csv.records().enumerate() {
        let record = record?;
        let row = item_cols
            .iter()
            .map(|&c| {
                let raw = record.get(c).unwrap_or("");
                match Answer::parse(raw) {
                    Some(Answer::A) => Ok(1.0),
                    Some(Answer::B) => Ok(0.0),
                    None => raw.parse::<f64>().map_err(|_| CsvError::BadCell {
                        row: r + 1,
                        column: headers[c].to_string(),
                        value: raw.to_string(),
                    }),
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(ResponseMatrix::new(rows)?)
}

/// Reads questionnaire sheets; columns are matched to question ids by header.
/// Blank cells are left unanswered so sheet validation can report them.
pub fn read_sheets(reader: impl Read, instrument: &Instrument) -> Result<Vec<ResponseSheet>, CsvError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut sheets = Vec::new();
    for (r, record) in csv.records().enumerate() {
        let record = record?;
        let mut answers = BTreeMap::new();
        for (c, name) in headers.iter().enumerate() {
            let raw = record.get(c).unwrap_or("");
            if is_id_column(name) || raw.is_empty() {
                continue;
            }
            let answer = Answer::parse(raw).ok_or_else(|| CsvError::BadCell {
                row: r + 1,
                column: name.to_string(),
                value: raw.to_string(),
            })?;
            answers.insert(name.to_string(), answer);
        }
        sheets.push(ResponseSheet {
            instrument_id: instrument.instrument_id.clone(),
            answers,
        });
    }
    Ok(sheets)
}

/// Writes sheets in the export layout, questions in instrument order.
pub fn write_sheets(sheets: &[ResponseSheet], instrument: &Instrument) -> Result<String, CsvError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(instrument.questions.iter().map(|q| q.question_id.as_str()))?;
    for sheet in sheets {
        out.write_record(instrument.questions.iter().map(|q| match sheet.answers.get(&q.question_id) {
            Some(Answer::A) => "a",
            Some(Answer::B) => "b",
            None => "",
        }))?;
    }
    let bytes = out.into_inner().map_err(|e| CsvError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
