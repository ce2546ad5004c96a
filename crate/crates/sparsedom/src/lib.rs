//! File formats, seeded experiment suites and reporting on top of
//! [`sparsedom_core`].
//!
//! The `sparsedom` binary wraps this library; the acceptance tests drive the
//! suites directly.

pub mod io;
pub mod report;
pub mod seed;
pub mod suites;

pub use report::{CheckSummary, Row, SuiteReport};
pub use suites::{run, ExperimentConfig, SUITE_NAMES};
