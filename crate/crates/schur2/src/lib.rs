//! Command-line front end and parallel executor for `schur2-core`.
//!
//! The binary exposes measures, critical values, power-matching shifts,
//! efficiencies, numerical verifications and figure data. Output is JSON
//! or CSV; Monte Carlo results depend only on `--seed`, never on the
//! number of workers.

pub mod cli;
pub mod executor;
pub mod figures;
pub mod output;
pub mod records;

pub use cli::run;
pub use executor::RayonExecutor;
