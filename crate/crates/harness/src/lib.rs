//! Configuration, suites and reporting for the `susy-gci` verification binary.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{ConfigError, RunConfig, Suite};
pub use report::{Record, ReportDocument};
pub use suites::{run, run_suite};
