//! Experiment orchestration for `risfd-core`: configuration, scenario
//! grids, CSV and JSON files, and result summaries.

pub mod config;
mod error;
pub mod files;
pub mod scenario;
pub mod summarize;
pub mod units;

pub use config::Settings;
pub use error::{Result, SimError};
pub use scenario::{run_point, run_scenario, ExperimentSpec, Scenario, Scheme};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "RISFD_OUTPUT";
