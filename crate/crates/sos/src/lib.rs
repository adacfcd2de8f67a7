//! Sum-of-squares programming on top of [`sosroa_sdp`].
//!
//! An [`SosProgram`] holds polynomial, scalar and PSD-matrix unknowns. SOS
//! assertions on affine polynomial expressions become Gram blocks plus
//! coefficient-matching equalities; solving returns the unknowns together
//! with an independent check of every Gram identity.

mod basis;
mod expr;
mod program;

pub use basis::{gram_basis, Parity};
pub use expr::{DecisionVar, LinExpr, PolyExpr};
pub use program::{
    GramHandle, MatrixVar, PolyVar, ScalarVar, SosOptions, SosProgram, SosSolution,
    GRAM_RESIDUAL_TOL,
};
pub use sosroa_sdp::{InteriorPointSolver, SdpSolver, SdpStatus, SolverOptions};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SosError {
    #[error("SOS assertion on a polynomial of odd degree {degree}")]
    OddDegree { degree: u32 },
    #[error("expression uses a different variable set than the program")]
    VarSetMismatch,
    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("strictness margin must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error(transparent)]
    Solver(#[from] sosroa_sdp::SdpError),
}
