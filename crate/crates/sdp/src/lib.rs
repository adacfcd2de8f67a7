//! Semidefinite programming in standard form with free variables.
//!
//! [`SdpProblem`] collects PSD blocks, free scalars and sparse linear
//! equalities. Any type implementing [`SdpSolver`] can solve it; the crate
//! ships [`InteriorPointSolver`], a homogeneous self-dual interior-point
//! method built on dense `faer` linear algebra.

mod ipm;
mod presolve;
mod problem;
mod solution;

pub use ipm::InteriorPointSolver;
pub use problem::{Constraint, PsdEntry, SdpProblem};
pub use solution::{SdpSolution, SdpStatus, SolverOptions, SymMatrix};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SdpError {
    #[error("free variable {index} out of range ({count} declared)")]
    FreeIndex { index: usize, count: usize },
    #[error("PSD block {index} out of range ({count} declared)")]
    BlockIndex { index: usize, count: usize },
    #[error("entry ({row}, {col}) invalid for block {block} of size {size}")]
    EntryIndex {
        block: usize,
        row: usize,
        col: usize,
        size: usize,
    },
    #[error("non-finite coefficient")]
    NonFinite,
}

/// Back-end boundary: anything that can solve a standard-form SDP.
pub trait SdpSolver {
    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution, SdpError>;
}
