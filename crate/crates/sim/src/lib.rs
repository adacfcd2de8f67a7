//! Simulation oracle.
//!
//! Integrates a vector field with an adaptive Dormand–Prince scheme, decides
//! whether a trajectory converges to the origin while respecting state
//! constraints, sweeps planar grids of initial conditions and checks
//! Lyapunov certificates by sampling their sublevel sets.

mod classify;
pub mod dopri;
mod soundness;
mod sweep;
mod vdp;

pub use classify::{
    classify, simulate, Classification, Constraint, SimOptions, Termination, Trajectory, Verdict,
    Violation,
};
pub use soundness::{
    certificate_soundness, classify_points, CertifiedSampler, Counterexample, SamplingError,
    SoundnessReport,
};
pub use sweep::{sweep_plane, BoundarySegment, ClassificationGrid, PlaneSpec, Region, SweepError};
pub use vdp::{point_in_polygon, polygon_area, vdp_field, vdp_limit_cycle};
