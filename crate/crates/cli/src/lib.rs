//! Command-line front end: model files, result records and the `abduce` and
//! `mpe` programs.
//!
//! Exit codes are 0 on success, 1 for usage, model and parse errors, and 2
//! when a solver or oracle limit stops the run.

pub mod args;
pub mod model;
pub mod output;
pub mod run;

use std::io;

use abduce_core::bayes::BayesError;
use abduce_core::constraint::ConstraintError;
use abduce_core::lp::LpError;
use abduce_core::solver::SolverError;
use abduce_core::waodag::WaodagError;
use thiserror::Error;

pub use args::{abduce_main, mpe_main};
pub use run::{generate, run, Command, GenSpec, ModelKind, RunConfig, Selection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_LIMIT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Waodag(#[from] WaodagError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let limit = match self {
            CliError::Solver(e) => matches!(
                e,
                SolverError::NodeLimitExceeded(_)
                    | SolverError::SolutionCapReached(_)
                    | SolverError::Lp(LpError::IterationLimit(_))
                    | SolverError::Waodag(WaodagError::OracleTooLarge { .. })
                    | SolverError::Bayes(BayesError::OracleTooLarge { .. })
            ),
            CliError::Waodag(WaodagError::OracleTooLarge { .. }) => true,
            CliError::Bayes(BayesError::OracleTooLarge { .. }) => true,
            _ => false,
        };
        if limit {
            EXIT_LIMIT
        } else {
            EXIT_INPUT
        }
    }
}
