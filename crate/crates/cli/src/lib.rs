//! `hyperadapt` command line. Every command prints a JSON document on
//! success; failures print `error[Code]: message` to stderr and exit with the
//! code of their error class:
//!
//! | exit | class |
//! |------|-------|
//! | 1 | file could not be read or written |
//! | 2 | bad command line (reported by the argument parser) |
//! | 3 | invalid instrument |
//! | 4 | invalid course package |
//! | 5 | invalid response data or undefined reliability |
//! | 6 | store error |
//! | 7 | invalid simulation config or failed run |
//! | 8 | invalid service config or server failure |

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use hyperadapt_core::content::{ingest_course, CourseGraph};
use hyperadapt_core::ils::{load_instrument, Dimension, Instrument};
use hyperadapt_core::psychometrics::{reliability_report, InstrumentKind, VarianceKind};
use hyperadapt_core::sim::{run_simulation, SimConfig};
use hyperadapt_core::{responses, EngineConfig, Execution};
use hyperadapt_service::{cohort, ServiceConfig, Store};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Instrument,
    Course,
    Analytics,
    Store,
    Simulation,
    Service,
}

impl ErrorClass {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::Io => 1,
            ErrorClass::Instrument => 3,
            ErrorClass::Course => 4,
            ErrorClass::Analytics => 5,
            ErrorClass::Store => 6,
            ErrorClass::Simulation => 7,
            ErrorClass::Service => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub class: ErrorClass,
    /// Domain error code, e.g. `CyclicPrerequisites`.
    pub code: String,
    pub message: String,
}

impl CliError {
    fn new(class: ErrorClass, code: &str, message: impl ToString) -> Self {
        CliError {
            class,
            code: code.to_string(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.class.exit_code()
    }
}

#[derive(Debug, Parser)]
#[command(name = "hyperadapt", version, about = "Adaptive course engine tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Questionnaire definitions.
    #[command(subcommand)]
    Instrument(InstrumentCmd),
    /// Course packages.
    #[command(subcommand)]
    Course(CourseCmd),
    /// Cohort analytics.
    #[command(subcommand)]
    Cohort(CohortCmd),
    /// Synthetic-learner simulation.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Run the HTTP service.
    Serve {
        /// TOML config; falls back to $ADAPT_CONFIG.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum InstrumentCmd {
    /// Check a questionnaire document and summarize it.
    Validate { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum CourseCmd {
    /// Validate a course package and optionally store it.
    Ingest {
        file: PathBuf,
        /// Store directory to write the course into.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Instrument to register alongside the course; the bundled stand-in when omitted.
        #[arg(long, requires = "store")]
        instrument: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Preference,
    Knowledge,
}

impl From<KindArg> for InstrumentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Preference => InstrumentKind::Preference,
            KindArg::Knowledge => InstrumentKind::Knowledge,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
pub enum VarianceArg {
    #[default]
    Population,
    Sample,
}

#[derive(Debug, Subcommand)]
pub enum CohortCmd {
    /// Cronbach's alpha of a response matrix (CSV: header row, a/b or numeric cells).
    Alpha {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Variance divisor (n or n - 1); it cancels in alpha, so the result is the same.
        #[arg(long, value_enum, default_value_t)]
        variance: VarianceArg,
    },
    /// Questionnaire style histogram and modal style of a store.
    Styles { store: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum SimCmd {
    /// Run a simulation config and print the report.
    Run {
        config: PathBuf,
        /// Force the single-threaded route.
        #[arg(long)]
        sequential: bool,
        /// Print only the summary metrics.
        #[arg(long)]
        summary_only: bool,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::new(ErrorClass::Io, "Io", format!("{}: {e}", path.display())))
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn store_err(e: hyperadapt_service::StoreError) -> CliError {
    CliError::new(ErrorClass::Store, e.code(), e)
}

pub fn load_course(path: &Path) -> Result<CourseGraph, CliError> {
    ingest_course(&read(path)?).map_err(|e| CliError::new(ErrorClass::Course, e.code(), e))
}

pub fn load_instrument_file(path: &Path) -> Result<Instrument, CliError> {
    load_instrument(&read(path)?).map_err(|e| CliError::new(ErrorClass::Instrument, e.code(), e))
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Instrument(InstrumentCmd::Validate { file }) => {
            let inst = load_instrument_file(&file)?;
            let per_dimension: serde_json::Map<String, serde_json::Value> = Dimension::ALL
                .iter()
                .map(|&d| {
                    let poles = inst.poles(d);
                    (
                        d.name().to_string(),
                        json!({"questions": inst.questions_in(d).count(), "pole_a": poles.pole_a, "pole_b": poles.pole_b}),
                    )
                })
                .collect();
            Ok(pretty(&json!({
                "instrument_id": inst.instrument_id,
                "questions": inst.questions.len(),
                "dimensions": per_dimension,
            })))
        }
        Command::Course(CourseCmd::Ingest { file, store, instrument }) => {
            let course = load_course(&file)?;
            if let Some(dir) = store {
                let store = Store::open(dir).map_err(store_err)?;
                let inst = match instrument {
                    Some(p) => load_instrument_file(&p)?,
                    None => Instrument::stand_in(),
                };
                store.put_instrument(&inst).map_err(store_err)?;
                store.put_course(&course).map_err(store_err)?;
            }
            Ok(pretty(&json!({
                "course_id": course.course_id(),
                "concepts": course.concepts().len(),
                "fragments": course.fragments().len(),
                "topological_order": course.topological_order(),
            })))
        }
        Command::Cohort(CohortCmd::Alpha { csv, kind, variance }) => {
            let file = fs::File::open(&csv)
                .map_err(|e| CliError::new(ErrorClass::Io, "Io", format!("{}: {e}", csv.display())))?;
            let matrix = responses::read_matrix(file).map_err(|e| CliError::new(ErrorClass::Analytics, e.code(), e))?;
            let variance = match variance {
                VarianceArg::Population => VarianceKind::Population,
                VarianceArg::Sample => VarianceKind::Sample,
            };
            let report = reliability_report(&matrix, kind.into(), variance)
                .map_err(|e| CliError::new(ErrorClass::Analytics, e.code(), e))?;
            Ok(pretty(&report))
        }
        Command::Cohort(CohortCmd::Styles { store }) => {
            if !store.is_dir() {
                return Err(CliError::new(ErrorClass::Store, "StoreUnavailable", format!("{} is not a directory", store.display())));
            }
            let store = Store::open(store).map_err(store_err)?;
            Ok(pretty(&cohort::style_report(&store).map_err(store_err)?))
        }
        Command::Sim(SimCmd::Run { config, sequential, summary_only }) => {
            let sim_err = |e: hyperadapt_core::sim::SimError| CliError::new(ErrorClass::Simulation, e.code(), e);
            let cfg = SimConfig::from_json(&read(&config)?).map_err(sim_err)?;
            let course = load_course(&cfg.resolve_course_path(&config))?;
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let report = run_simulation(&cfg, &course, &Instrument::stand_in(), &EngineConfig::default(), exec).map_err(sim_err)?;
            Ok(if summary_only { pretty(&report.summary) } else { report.to_json() })
        }
        Command::Serve { config } => {
            let cfg = ServiceConfig::locate(config.as_deref())
                .map_err(|e| CliError::new(ErrorClass::Service, "InvalidConfig", e))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::new(ErrorClass::Service, "Runtime", e))?;
            runtime
                .block_on(hyperadapt_service::serve(cfg))
                .map_err(|e| CliError::new(ErrorClass::Service, "ServerFailure", e))?;
            Ok(String::new())
        }
    }
}
