use serde::{Deserialize, Serialize};
use sosroa_sos::Parity;

use crate::RoaError;

/// State constraint `g(x) ≤ 0`, with `g` in the text form of
/// [`sosroa_poly::Polynomial::parse`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConstraint {
    pub name: String,
    pub g: String,
    /// Defaults to `lyapunov_degree − deg g`.
    #[serde(default)]
    pub multiplier_degree: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoaConfig {
    pub lyapunov_degree: u32,
    pub lambda_degree: u32,
    pub lambda_degree_max: u32,
    pub mu_degree: u32,
    pub mu_degree_max: u32,
    /// Exponent on `‖x‖²` in the level-set condition.
    pub d: u32,
    /// Exponents on `‖x‖²` in the shape condition.
    pub d1: u32,
    pub d2: u32,
    pub epsilon: f64,
    pub parity: Parity,
    pub max_iterations: usize,
    /// Relative change of `tr P` below which iteration stops.
    pub trace_tolerance: f64,
    pub constraints: Vec<StateConstraint>,
    pub anchors: Vec<Vec<f64>>,
    /// `(w1, w2)` weighting `tr P` and the anchor level `γ`.
    pub anchor_weights: [f64; 2],
    /// Points pinned to `V⁰ = 1` during initialization.
    pub scaling_points: Vec<Vec<f64>>,
    /// Optimization runs in `z = x / s` when set.
    pub state_scales: Option<Vec<f64>>,
    /// Upper bound on the level in the λ-step.
    pub rho_max: Option<f64>,
}

impl Default for RoaConfig {
    fn default() -> Self {
        Self {
            lyapunov_degree: 4,
            lambda_degree: 2,
            lambda_degree_max: 6,
            mu_degree: 2,
            mu_degree_max: 6,
            d: 2,
            d1: 1,
            d2: 0,
            epsilon: 1e-6,
            parity: Parity::Even,
            max_iterations: 20,
            trace_tolerance: 1e-3,
            constraints: Vec::new(),
            anchors: Vec::new(),
            anchor_weights: [0.9, 0.1],
            scaling_points: Vec::new(),
            state_scales: None,
            rho_max: None,
        }
    }
}

impl RoaConfig {
    /// Van der Pol setup: sixth-degree `V`, λ from degree 4, μ from
    /// degree 2, `V⁰(1, 2) = 1`.
    pub fn van_der_pol() -> Self {
        Self {
            lyapunov_degree: 6,
            lambda_degree: 4,
            mu_degree: 2,
            parity: Parity::None,
            scaling_points: vec![vec![1.0, 2.0]],
            ..Self::default()
        }
    }

    pub fn with_anchors(mut self, anchors: Vec<Vec<f64>>) -> Self {
        self.anchors = anchors;
        self
    }

    pub fn with_constraint(mut self, name: &str, g: &str) -> Self {
        self.constraints.push(StateConstraint {
            name: name.into(),
            g: g.into(),
            multiplier_degree: None,
        });
        self
    }

    pub fn validate(&self, nvars: usize) -> Result<(), RoaError> {
        let bad = |msg: String| Err(RoaError::Config(msg));
        if self.lyapunov_degree < 2 || self.lyapunov_degree % 2 != 0 {
            return bad(format!("lyapunov_degree must be even and at least 2, got {}", self.lyapunov_degree));
        }
        if self.d1 <= self.d2 {
            return bad(format!("d1 must exceed d2, got d1 = {} and d2 = {}", self.d1, self.d2));
        }
        if self.lambda_degree > self.lambda_degree_max || self.mu_degree > self.mu_degree_max {
            return bad("multiplier start degree above its maximum".into());
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if !(self.trace_tolerance >= 0.0) {
            return bad("trace_tolerance must be non-negative".into());
        }
        if self.anchor_weights.iter().any(|w| !(*w >= 0.0)) {
            return bad("anchor weights must be non-negative".into());
        }
        for (what, pts) in [("anchor", &self.anchors), ("scaling point", &self.scaling_points)] {
            if let Some(p) = pts.iter().find(|p| p.len() != nvars) {
                return bad(format!("{what} has {} coordinates, expected {nvars}", p.len()));
            }
            if pts.iter().flatten().any(|c| !c.is_finite()) {
                return bad(format!("{what} has a non-finite coordinate"));
            }
        }
        if let Some(s) = &self.state_scales {
            if s.len() != nvars || s.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
                return bad(format!("state_scales needs {nvars} positive entries"));
            }
        }
        if let Some(r) = self.rho_max {
            if !(r > 0.0) {
                return bad("rho_max must be positive".into());
            }
        }
        Ok(())
    }

    /// Multiplier degrees tried in turn, starting at `start`. Under even
    /// parity odd degrees add nothing, so they are skipped.
    pub(crate) fn degree_schedule(&self, start: u32, max: u32) -> Vec<u32> {
        let start = match self.parity {
            Parity::Even => start + start % 2,
            Parity::None => start,
        };
        let step = match self.parity {
            Parity::Even => 2,
            Parity::None => 1,
        };
        (start..=max).step_by(step).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RoaConfig::default().validate(7).unwrap();
        RoaConfig::van_der_pol().validate(2).unwrap();
    }

    #[test]
    fn odd_lyapunov_degree_rejected() {
        let c = RoaConfig {
            lyapunov_degree: 5,
            ..RoaConfig::default()
        };
        assert!(matches!(c.validate(2), Err(RoaError::Config(_))));
    }

    #[test]
    fn d1_must_exceed_d2() {
        let c = RoaConfig {
            d1: 0,
            ..RoaConfig::default()
        };
        assert!(c.validate(2).is_err());
    }

    #[test]
    fn even_schedule_rounds_up() {
        let c = RoaConfig::default();
        assert_eq!(c.degree_schedule(1, 6), vec![2, 4, 6]);
        let c = RoaConfig::van_der_pol();
        assert_eq!(c.degree_schedule(0, 3), vec![0, 1, 2, 3]);
    }

    #[test]
    fn toml_style_round_trip() {
        let c = RoaConfig::van_der_pol().with_constraint("x_strip", "1*x^2 - 1");
        let json = serde_json::to_string(&c).unwrap();
        let back: RoaConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let partial: RoaConfig = serde_json::from_str(r#"{"lyapunov_degree": 6, "parity": "none"}"#).unwrap();
        assert_eq!(partial.lyapunov_degree, 6);
        assert_eq!(partial.parity, Parity::None);
        assert_eq!(partial.d, 2);
    }
}
