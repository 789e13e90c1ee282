//! Command-line harness around the `pdbundle` solvers: configured runs with
//! CSV traces, randomized property suites, and trace reports.

pub mod check;
pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use error::HarnessError;
