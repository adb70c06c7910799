//! Scenario runner around `blowup-core`: TOML configurations, built-in
//! scenarios, CSV/JSON/TOML artifacts and process exit codes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod output;
pub mod scenario;

pub use config::Config;
pub use scenario::{run_scenario, Outcome, Verdict};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const VERDICT_FAILED: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const SOLVER_FAILURE: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] blowup_core::Error),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        use blowup_core::Error as E;
        match self {
            Self::Config(_) | Self::Output { .. } => exit::CONFIG_ERROR,
            Self::Core(
                E::Dimension(_)
                | E::ExponentOutOfBand { .. }
                | E::PerturbationExponent { .. }
                | E::PerturbationBound { .. }
                | E::InvalidGrid(_)
                | E::NotUnitBall(_)
                | E::Cfl { .. }
                | E::Config(_),
            ) => exit::CONFIG_ERROR,
            Self::Core(_) => exit::SOLVER_FAILURE,
        }
    }
}
