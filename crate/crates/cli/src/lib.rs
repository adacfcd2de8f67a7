//! Batch pipeline behind the `sosroa` binary.
//!
//! A run combines a scenario file (`key = value` lines selecting the Van der
//! Pol oscillator or a vehicle setup), an optional TOML run configuration and
//! a seed. Every command writes into a fresh numbered directory below the
//! output root.

pub mod commands;
pub mod config;
pub mod contour;
pub mod output;
pub mod scenario;

pub use commands::{
    estimate, slice, sweep, trajectories, validate, SliceResult, TrajectoryPair, ValidationReport,
};
pub use config::{Context, RunConfig};
pub use contour::{marching_squares, Segment};
pub use scenario::{Scenario, System};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unusable input files or flags.
    #[error("{0}")]
    Input(String),
    /// A pipeline stage failed on valid input.
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Pipeline(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

impl From<sosroa_engine::RoaError> for CliError {
    fn from(e: sosroa_engine::RoaError) -> Self {
        match e {
            sosroa_engine::RoaError::Config(m) => CliError::Input(m),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}
