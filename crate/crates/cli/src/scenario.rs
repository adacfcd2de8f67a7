use std::path::{Path, PathBuf};

use sosroa_engine::{vertex_anchors, Parity, RoaConfig, StateConstraint};
use sosroa_poly::{PolyEvaluator, PolyVectorField, Polynomial, VarSet};
use sosroa_sim::{vdp_field, Constraint, SimOptions};
use sosroa_vehicle::{
    parse_key_values, slip_angles, FitMethod, KeyValues, ScenarioError, VehicleModel, VehicleScenario, STATE_SCALES,
};

use crate::CliError;

/// Optimization coordinates for the vehicle: the SDPs are posed in
/// `z = x / s` so that the slip parallelogram and the steering states have
/// comparable extents.
pub const VEHICLE_STATE_SCALES: [f64; 7] = [1.0, 1.0, 1.0, 0.05, 0.025, 0.2, 3.0];

pub enum System {
    /// Time-reversed Van der Pol oscillator.
    VanDerPol { mu: f64 },
    Vehicle(Box<VehicleModel>),
}

pub struct Scenario {
    pub name: String,
    pub path: PathBuf,
    pub text: String,
    pub system: System,
}

type Field<'a> = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync + 'a>;

fn input(e: ScenarioError) -> CliError {
    CliError::Input(e.to_string())
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let kv = parse_key_values(text).map_err(input)?;
        let model = kv.get("model").ok_or_else(|| input(ScenarioError::Missing("model".into())))?;
        let system = match model {
            "vdp" => System::VanDerPol { mu: vdp_mu(&kv)? },
            "vehicle" => {
                let sc = VehicleScenario::from_key_values(&kv).map_err(input)?;
                let m = VehicleModel::new(sc, FitMethod::Minimax).map_err(|e| CliError::Input(e.to_string()))?;
                System::Vehicle(Box::new(m))
            }
            other => return Err(CliError::Input(format!("key `model`: unknown model `{other}`"))),
        };
        let name = kv
            .get("name")
            .map(str::to_string)
            .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "scenario".into());
        Ok(Self {
            name,
            path: path.to_path_buf(),
            text: text.to_string(),
            system,
        })
    }

    pub fn vars(&self) -> VarSet {
        match &self.system {
            System::VanDerPol { .. } => VarSet::new(["x", "y"]).expect("valid names"),
            System::Vehicle(m) => m.vars().clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vars().len()
    }

    pub fn vehicle(&self) -> Option<&VehicleModel> {
        match &self.system {
            System::Vehicle(m) => Some(m),
            System::VanDerPol { .. } => None,
        }
    }

    pub fn polynomial_field(&self) -> PolyVectorField<f64> {
        match &self.system {
            System::VanDerPol { mu } => {
                let vars = self.vars();
                let comps = [
                    "-1*y".to_string(),
                    format!("1*x - {mu}*y + {mu}*x^2*y"),
                ];
                let comps = comps
                    .iter()
                    .map(|c| Polynomial::parse(&vars, c).expect("well-formed field"))
                    .collect();
                PolyVectorField::new(&vars, comps).expect("two components")
            }
            System::Vehicle(m) => m.polynomial_field(),
        }
    }

    /// Exact dynamics; for the oscillator this is the polynomial field.
    pub fn full_field(&self) -> Field<'_> {
        match &self.system {
            System::VanDerPol { mu } => Box::new(vdp_field(*mu)),
            System::Vehicle(m) => Box::new(move |x: &[f64], dx: &mut [f64]| m.full_field(x, dx)),
        }
    }

    pub fn poly_field(&self) -> Field<'_> {
        match &self.system {
            System::VanDerPol { mu } => Box::new(vdp_field(*mu)),
            System::Vehicle(m) => Box::new(move |x: &[f64], dx: &mut [f64]| m.poly_field_eval(x, dx)),
        }
    }

    /// Estimation settings before any configuration overrides.
    pub fn default_roa_config(&self) -> Result<RoaConfig, CliError> {
        match &self.system {
            System::VanDerPol { .. } => Ok(RoaConfig::van_der_pol()),
            System::Vehicle(m) => {
                let verts = vertex_anchors(m.slip_lines(), (0, 1), 7)?;
                Ok(RoaConfig {
                    scaling_points: verts.clone(),
                    anchors: verts,
                    state_scales: Some(VEHICLE_STATE_SCALES.to_vec()),
                    ..RoaConfig::default()
                })
            }
        }
    }

    /// Adds the slip limits to a vehicle configuration. Under even parity one
    /// side of each limit suffices because `{V ≤ 1}` is symmetric.
    pub fn complete_config(&self, cfg: &mut RoaConfig) {
        let Some(m) = self.vehicle() else { return };
        if cfg.constraints.iter().any(|c| c.name.starts_with("alpha_")) {
            return;
        }
        for (name, g) in m.slip_constraints() {
            if cfg.parity == Parity::None {
                let vars = g.vars().clone();
                let bar = g.evaluate_f64(&vec![0.0; vars.len()]).unwrap_or(0.0);
                let lin = g.checked_sub(&Polynomial::constant(&vars, bar)).expect("same variables");
                let neg = lin.scale(-1.0).checked_add(&Polynomial::constant(&vars, bar)).expect("same variables");
                cfg.constraints.push(StateConstraint {
                    name: format!("{name}_neg"),
                    g: neg.to_string(),
                    multiplier_degree: None,
                });
            }
            cfg.constraints.push(StateConstraint {
                name,
                g: g.to_string(),
                multiplier_degree: None,
            });
        }
    }

    /// Constraints checked along simulated trajectories.
    pub fn sim_constraints(&self, cfg: &RoaConfig) -> Result<Vec<Constraint>, CliError> {
        match &self.system {
            System::Vehicle(m) => {
                let s = m.scenario.clone();
                let (bf, br) = (m.front_fit.alpha_bar, m.rear_fit.alpha_bar);
                let s2 = s.clone();
                Ok(vec![
                    Constraint::new("alpha_f", move |x: &[f64]| slip_angles(x, &s).0.abs() - bf),
                    Constraint::new("alpha_r", move |x: &[f64]| slip_angles(x, &s2).1.abs() - br),
                ])
            }
            System::VanDerPol { .. } => {
                let vars = self.vars();
                cfg.constraints
                    .iter()
                    .map(|c| {
                        let g = Polynomial::parse(&vars, &c.g)
                            .map_err(|e| CliError::Input(format!("constraint `{}`: {e}", c.name)))?;
                        let ev = PolyEvaluator::new(&g);
                        Ok(Constraint::new(c.name.clone(), move |x: &[f64]| ev.evaluate(x)))
                    })
                    .collect()
            }
        }
    }

    pub fn sim_options(&self, horizon: f64) -> SimOptions {
        let scales = match &self.system {
            System::Vehicle(_) => STATE_SCALES.to_vec(),
            System::VanDerPol { .. } => Vec::new(),
        };
        SimOptions {
            horizon,
            scales,
            constraint_tol: 1e-6,
            ..SimOptions::default()
        }
    }

    /// Whether both slip angles lie inside the fitted range of the cubic
    /// tire model. Always true for the oscillator.
    pub fn in_polynomial_range(&self, x: &[f64]) -> bool {
        match &self.system {
            System::Vehicle(m) => {
                let (af, ar) = slip_angles(x, &m.scenario);
                af.abs() <= m.front_fit.alpha_bar && ar.abs() <= m.rear_fit.alpha_bar
            }
            System::VanDerPol { .. } => true,
        }
    }

    /// Corners of the slip parallelogram in the `v–r` plane.
    pub fn slip_parallelogram(&self) -> Option<Vec<[f64; 2]>> {
        let m = self.vehicle()?;
        let verts = vertex_anchors(m.slip_lines(), (0, 1), 2).ok()?;
        Some(verts.iter().map(|p| [p[0], p[1]]).collect())
    }
}

fn vdp_mu(kv: &KeyValues) -> Result<f64, CliError> {
    if let Some(k) = kv.keys().find(|k| !["model", "name", "mu"].contains(k)) {
        return Err(input(ScenarioError::Unknown(k.into())));
    }
    let mu = kv.number("mu").map_err(input)?;
    if mu > 0.0 {
        Ok(mu)
    } else {
        Err(CliError::Input("key `mu`: must be positive".into()))
    }
}
