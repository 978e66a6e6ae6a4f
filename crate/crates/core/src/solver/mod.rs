//! Optimal and k-best 0-1 solutions of constraint systems.
//!
//! [`solve_optimal`] runs best-first branch and bound over LP relaxations.
//! [`EnumerationSession`] repeats it, adding one cut per emitted solution so
//! that the next search returns the next solution in cost order.

mod bnb;
mod cuts;
mod enumerate;

use thiserror::Error;

use crate::bayes::BayesError;
use crate::constraint::ConstraintError;
use crate::lp::{LpConfig, LpError};
use crate::waodag::{Monotonicity, WaodagError};

pub use bnb::{branch_and_bound, BnbStats};
pub use cuts::{cardinal_cut, exclusion_cut};
pub use enumerate::{
    enumerate_best, enumerate_cardinal, enumerate_permissible, solve_optimal, CardinalOptions,
    Count, EnumerationSession, Mode, PermissibleOptions, RankedSolution, DEFAULT_SOLUTION_CAP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("branch and bound exceeded {0} nodes")]
    NodeLimitExceeded(usize),
    #[error("enumeration exceeded the cap of {0} solutions")]
    SolutionCapReached(usize),
    #[error("exclusion cut needs a nonempty scope")]
    EmptyScope,
    #[error("explanation has an empty base set")]
    EmptyBaseSet,
    #[error("graph is {0:?}, not strictly monotonic")]
    NotStrictlyMonotonic(Monotonicity),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Waodag(#[from] WaodagError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    /// A value within this distance of 0 or 1 is integral.
    pub integrality_tol: f64,
    /// Nodes with `bound >= incumbent - prune_eps` are discarded.
    pub prune_eps: f64,
    pub node_limit: usize,
    pub lp: LpConfig,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            integrality_tol: 1e-7,
            prune_eps: 1e-9,
            node_limit: 1_000_000,
            lp: LpConfig::default(),
        }
    }
}
