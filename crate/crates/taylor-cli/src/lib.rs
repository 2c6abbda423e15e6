//! Batch driver for the Taylor-state solver.

pub mod config;
pub mod report;
pub mod run;

pub use config::{Mode, RunConfig};
pub use run::run;

use taylor_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Solver(#[from] Error),
}

impl CliError {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(e) => match e {
                Error::Config(_) => 2,
                Error::Geometry(_)
                | Error::Topology(_)
                | Error::Outside { .. }
                | Error::Proximity { .. }
                | Error::Domain(_) => 3,
                Error::Resonance { .. } | Error::Multiplicity { .. } => 4,
                Error::Accuracy { .. } | Error::NearDiagonal(_) | Error::Contract(_) => 5,
            },
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
