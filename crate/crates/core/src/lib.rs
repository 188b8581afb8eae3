//! Adaptive hypermedia engine.
//!
//! Learners are profiled along the four Felder–Silverman dimensions, their
//! knowledge is tracked as an overlay over a course's concept graph, and course
//! pages are assembled per learner by filtering the concept's fragments on
//! learning style and knowledge level, ordering them by the learner's reasoning
//! preference, and annotating the outgoing links.
//!
//! Module map:
//!
//! - [`ils`]: questionnaire model, M−N scoring, confidence bands, style ids
//! - [`psychometrics`]: Cronbach's alpha and cohort style statistics
//! - [`content`]: course packages, concept graph, fragments
//! - [`learner`]: learner records, overlay knowledge, traces
//! - [`pedagogy`]: adaptation parameters, fragment ordering, next-concept prediction
//! - [`generator`]: the page pipeline and navigation links
//! - [`assessment`]: pre-tests and post-tests
//! - [`sim`]: seeded synthetic-learner simulation

pub mod assessment;
pub mod config;
pub mod content;
pub mod exec;
pub mod generator;
pub mod ils;
pub mod learner;
pub mod pedagogy;
pub mod psychometrics;
pub mod responses;
pub mod sim;
pub mod time;

pub use config::EngineConfig;
pub use exec::Execution;
pub use time::Timestamp;
