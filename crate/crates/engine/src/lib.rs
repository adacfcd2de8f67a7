//! Iterative SOS estimation of safe invariant subsets of the region of
//! attraction of a polynomial system.
//!
//! [`estimate_roa`] alternates three convex programs: the λ-step finds the
//! largest certified level of the current `V`, the μ-step fits the
//! smallest-trace ellipsoid inside the normalized unit level set and the
//! V-step updates `V` with all multipliers frozen. State constraints
//! `g(x) ≤ 0` enter every step through their own multipliers.

mod anchors;
mod certificate;
mod config;
mod iterate;
mod steps;

pub use anchors::vertex_anchors;
pub use certificate::{IterationRecord, LyapunovCertificate, CERTIFICATE_FORMAT};
pub use config::{RoaConfig, StateConstraint};
pub use iterate::{estimate_roa, estimate_roa_with_progress};
pub use sosroa_sos::Parity;
pub use steps::{normalize, LambdaStep, MuStep, NamedConstraint, RoaProblem, StepReport, VStep};

#[derive(Debug, thiserror::Error)]
pub enum RoaError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initialization infeasible, the equilibrium is not certifiably stable at this degree: {0}")]
    InitInfeasible(String),
    #[error("{step}-step failed: {status}")]
    StepFailed { step: &'static str, status: String },
    #[error("level is unbounded; set rho_max to cap it")]
    UnboundedLevel,
    #[error("level must be positive, got {0}")]
    NonPositiveLevel(f64),
    #[error("constraint lines are parallel")]
    DegenerateLines,
    #[error("certificate and field use different variable sets")]
    VarSetMismatch,
    #[error("certificate file: {0}")]
    Certificate(String),
    #[error(transparent)]
    Poly(#[from] sosroa_poly::PolyError),
    #[error(transparent)]
    Sos(#[from] sosroa_sos::SosError),
}
