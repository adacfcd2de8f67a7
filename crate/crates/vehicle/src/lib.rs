//! Vehicle-with-driver lateral dynamics.
//!
//! Seven states `[v, r, yG, psi, delta, delta1, delta2]`: lateral speed, yaw
//! rate, lateral offset, yaw angle, front steering angle and its first two
//! derivatives. The driver is a delayed PD law on the lateral error of a
//! preview point, expanded to a third-order chain in the steering angle.

mod model;
mod scenario;
mod tire;

pub use model::{slip_angles, VehicleModel, STATE_NAMES, STATE_SCALES};
pub use scenario::{parse_key_values, KeyValues, ScenarioError, VehicleScenario, SCENARIO_KEYS};
pub use tire::{fit_cubic, FitMethod, MagicFormula, TireError, TireFit, SLIP_FRACTION};
