//! Experiment runner behind the `ovo-svm` binary.
//!
//! Each subcommand reads a [`RunConfig`], does its work, and writes reports
//! into the configured output directory. Every report starts with
//! `# config_hash:` and `# seed:` lines so results can be traced to the
//! configuration that produced them.

mod commands;
pub mod config;

use std::fmt;

pub use commands::{cmd_estimators, cmd_evaluate, cmd_risk, cmd_train, EvaluateOutput};
pub use config::{ConfigError, RunConfig};

/// Pairwise models stopped at the iteration budget under `--strict`.
#[derive(Debug)]
pub struct NonConvergence(pub usize);

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} pairwise models did not converge", self.0)
    }
}

impl std::error::Error for NonConvergence {}

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NON_CONVERGENCE: u8 = 4;

/// Process exit code for an error.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<NonConvergence>() {
            return EXIT_NON_CONVERGENCE;
        }
        if let Some(e) = cause.downcast_ref::<ovo_svm::Error>() {
            if e.is_data_error() {
                return EXIT_DATA;
            }
            if matches!(
                e,
                ovo_svm::Error::InvalidConfig(_) | ovo_svm::Error::InvalidKernel(_) | ovo_svm::Error::UnknownMethod(_)
            ) {
                return EXIT_CONFIG;
            }
            return EXIT_FAILURE;
        }
    }
    EXIT_FAILURE
}
