//! Experiment harness: Matrix Market input, deterministic fixtures, the
//! experiment drivers behind the `mpbal` CLI, and CSV reports.

pub mod cli;
pub mod experiments;
pub mod fixtures;
pub mod mm;
pub mod report;

pub use experiments::run;
