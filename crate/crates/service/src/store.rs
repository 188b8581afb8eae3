//! One JSON document per entity under `learners/`, `courses/`,
//! `instruments/` and `cohort_stats/`. Writes go to a temporary file in the
//! same directory and are renamed into place, so readers never see a
//! partial document.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use hyperadapt_core::content::{CourseGraph, CoursePackage};
use hyperadapt_core::ils::Instrument;
use hyperadapt_core::learner::LearnerRecord;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tempfile::NamedTempFile;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store unavailable: {0}")]
    Unavailable(#[from] io::Error),
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("integrity violation: {0}")]
    IntegrityViolation(String),
    #[error("corrupt {kind} document {id:?}: {message}")]
    Corrupt { kind: &'static str, id: String, message: String },
    #[error("invalid {kind} id {id:?}")]
    InvalidId { kind: &'static str, id: String },
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Unavailable(_) => "StoreUnavailable",
            StoreError::NotFound { .. } => "NotFound",
            StoreError::IntegrityViolation(_) => "IntegrityViolation",
            StoreError::Corrupt { .. } => "CorruptDocument",
            StoreError::InvalidId { .. } => "InvalidId",
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Collection {
    Learners,
    Courses,
    Instruments,
    CohortStats,
}

impl Collection {
    const ALL: [Collection; 4] = [Self::Learners, Self::Courses, Self::Instruments, Self::CohortStats];

    fn dir(self) -> &'static str {
        match self {
            Collection::Learners => "learners",
            Collection::Courses => "courses",
            Collection::Instruments => "instruments",
            Collection::CohortStats => "cohort_stats",
        }
    }

    fn kind(self) -> &'static str {
        match self {
            Collection::Learners => "learner",
            Collection::Courses => "course",
            Collection::Instruments => "instrument",
            Collection::CohortStats => "cohort report",
        }
    }
}

/// Ids become file names, so only a conservative character set is allowed.
fn safe_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Opens the store, creating the collection directories if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        for c in Collection::ALL {
            fs::create_dir_all(root.join(c.dir()))?;
        }
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, c: Collection, id: &str) -> Result<PathBuf, StoreError> {
        if !safe_id(id) {
            return Err(StoreError::InvalidId { kind: c.kind(), id: id.into() });
        }
        Ok(self.root.join(c.dir()).join(format!("{id}.json")))
    }

    fn write<T: Serialize>(&self, c: Collection, id: &str, value: &T) -> Result<(), StoreError> {
        let target = self.path(c, id)?;
        let body = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        let mut tmp = NamedTempFile::new_in(self.root.join(c.dir()))?;
        tmp.write_all(&body)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| e.error)?;
        Ok(())
    }

    fn read<T: DeserializeOwned>(&self, c: Collection, id: &str) -> Result<T, StoreError> {
        let path = match self.path(c, id) {
            Ok(p) => p,
            Err(_) => return Err(StoreError::NotFound { kind: c.kind(), id: id.into() }),
        };
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound { kind: c.kind(), id: id.into() })
            }
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
            kind: c.kind(),
            id: id.into(),
            message: e.to_string(),
        })
    }

    fn exists(&self, c: Collection, id: &str) -> bool {
        self.path(c, id).is_ok_and(|p| p.is_file())
    }

    fn ids(&self, c: Collection) -> Result<Vec<String>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join(c.dir()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_suffix(".json").filter(|s| safe_id(s)).map(str::to_string)
            })
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn learner_exists(&self, learner_id: &str) -> bool {
        self.exists(Collection::Learners, learner_id)
    }

    pub fn put_learner(&self, record: &LearnerRecord) -> Result<(), StoreError> {
        self.write(Collection::Learners, &record.learner_id, record)
    }

    pub fn get_learner(&self, learner_id: &str) -> Result<LearnerRecord, StoreError> {
        self.read(Collection::Learners, learner_id)
    }

    /// Every learner, in learner-id order.
    pub fn learners(&self) -> Result<Vec<LearnerRecord>, StoreError> {
        self.ids(Collection::Learners)?.iter().map(|id| self.get_learner(id)).collect()
    }

    pub fn put_instrument(&self, instrument: &Instrument) -> Result<(), StoreError> {
        self.write(Collection::Instruments, &instrument.instrument_id, instrument)
    }

    pub fn get_instrument(&self, instrument_id: &str) -> Result<Instrument, StoreError> {
        let raw: serde_json::Value = self.read(Collection::Instruments, instrument_id)?;
        hyperadapt_core::ils::load_instrument(&raw.to_string()).map_err(|e| StoreError::Corrupt {
            kind: "instrument",
            id: instrument_id.into(),
            message: e.to_string(),
        })
    }

    /// Stores a validated course. A course naming an instrument requires
    /// that instrument to be stored first.
    pub fn put_course(&self, course: &CourseGraph) -> Result<(), StoreError> {
        if let Some(instrument) = course.instrument_id() {
            if !self.exists(Collection::Instruments, instrument) {
                return Err(StoreError::IntegrityViolation(format!(
                    "course {:?} references unknown instrument {instrument:?}",
                    course.course_id()
                )));
            }
        }
        self.write(Collection::Courses, course.course_id(), course.package())
    }

    pub fn get_course(&self, course_id: &str) -> Result<CourseGraph, StoreError> {
        let package: CoursePackage = self.read(Collection::Courses, course_id)?;
        CourseGraph::from_package(package).map_err(|e| StoreError::Corrupt {
            kind: "course",
            id: course_id.into(),
            message: e.to_string(),
        })
    }

    pub fn course_ids(&self) -> Result<Vec<String>, StoreError> {
        self.ids(Collection::Courses)
    }

    pub fn put_cohort_report<T: Serialize>(&self, name: &str, report: &T) -> Result<(), StoreError> {
        self.write(Collection::CohortStats, name, report)
    }

    pub fn get_cohort_report<T: DeserializeOwned>(&self, name: &str) -> Result<T, StoreError> {
        self.read(Collection::CohortStats, name)
    }
}
