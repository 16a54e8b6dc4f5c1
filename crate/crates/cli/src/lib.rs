//! Config-driven experiment runner for the `fedalign` simulator.
//!
//! [`config::parse_config`] validates a TOML experiment file,
//! [`experiment::run_experiment`] runs every `(algorithm, seed)` pair and
//! writes round CSVs plus a JSON summary, and [`compare::compare_report`]
//! tabulates finished summaries.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod presets;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Every validation problem found, one `path: message` line each.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<fedalign::Error> for CliError {
    fn from(e: fedalign::Error) -> Self {
        match e {
            fedalign::Error::Config(msg) => CliError::Config(vec![msg]),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
