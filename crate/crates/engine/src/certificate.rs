use serde::{Deserialize, Serialize};
use sosroa_poly::{Monomial, PolyEvaluator, PolyVectorField, Polynomial, VarSet};

use crate::{RoaConfig, RoaError, StepReport};

pub const CERTIFICATE_FORMAT: &str = "sosroa-certificate/1";

/// One pass of λ-step, normalization, μ-step and V-step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Level found by the λ-step before normalization.
    pub rho: f64,
    pub lambda_degree: u32,
    pub mu_degree: u32,
    /// `tr P` after the μ-step.
    pub trace_p_shape: Option<f64>,
    /// `tr P` after the V-step.
    pub trace_p: Option<f64>,
    pub gamma: Option<f64>,
    pub accepted: bool,
    pub steps: Vec<StepReport>,
}

/// Result of an estimation run. The certified set is `{V ≤ 1}`.
#[derive(Clone, Debug)]
pub struct LyapunovCertificate {
    pub v: Polynomial<f64>,
    pub p: Vec<Vec<f64>>,
    pub lambda: Polynomial<f64>,
    pub mu: Polynomial<f64>,
    pub etas: Vec<(String, Polynomial<f64>)>,
    pub gamma: Option<f64>,
    pub converged: bool,
    pub config: RoaConfig,
    pub init: Option<StepReport>,
    pub trace: Vec<IterationRecord>,
}

impl LyapunovCertificate {
    pub fn vars(&self) -> &VarSet {
        self.v.vars()
    }

    pub fn trace_p(&self) -> f64 {
        (0..self.p.len()).map(|i| self.p[i][i]).sum()
    }

    /// Iterations whose V-step succeeded.
    pub fn accepted_iterations(&self) -> usize {
        self.trace.iter().filter(|r| r.accepted).count()
    }

    pub fn evaluator(&self) -> PolyEvaluator {
        PolyEvaluator::new(&self.v)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, RoaError> {
        Ok(self.v.evaluate_f64(x)?)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool, RoaError> {
        Ok(self.value(x)? <= 1.0)
    }

    pub fn lie_derivative(&self, field: &PolyVectorField<f64>) -> Result<Polynomial<f64>, RoaError> {
        if field.vars() != self.vars() {
            return Err(RoaError::VarSetMismatch);
        }
        Ok(self.v.lie_derivative(field)?)
    }

    /// The same certificate claiming the larger set `{V ≤ factor}`.
    pub fn with_inflated_level(&self, factor: f64) -> Result<Self, RoaError> {
        Ok(Self {
            v: crate::normalize(&self.v, factor)?,
            ..self.clone()
        })
    }

    pub fn to_json(&self) -> String {
        let file = CertificateFile {
            format: CERTIFICATE_FORMAT.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            variables: self.vars().names().to_vec(),
            v: terms_of(&self.v),
            p: self.p.clone(),
            lambda: terms_of(&self.lambda),
            mu: terms_of(&self.mu),
            etas: self
                .etas
                .iter()
                .map(|(name, e)| NamedTerms {
                    name: name.clone(),
                    terms: terms_of(e),
                })
                .collect(),
            gamma: self.gamma,
            converged: self.converged,
            config: self.config.clone(),
            init: self.init.clone(),
            trace: self.trace.clone(),
        };
        serde_json::to_string_pretty(&file).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RoaError> {
        let file: CertificateFile = serde_json::from_str(text).map_err(|e| RoaError::Certificate(e.to_string()))?;
        if file.format != CERTIFICATE_FORMAT {
            return Err(RoaError::Certificate(format!("unknown format `{}`", file.format)));
        }
        let vars = VarSet::new(file.variables.iter().map(String::as_str))?;
        let n = vars.len();
        if file.p.len() != n || file.p.iter().any(|r| r.len() != n) {
            return Err(RoaError::Certificate(format!("shape matrix is not {n}×{n}")));
        }
        let poly = |t: &[Term]| poly_of(&vars, t);
        Ok(Self {
            v: poly(&file.v)?,
            p: file.p,
            lambda: poly(&file.lambda)?,
            mu: poly(&file.mu)?,
            etas: file
                .etas
                .iter()
                .map(|e| Ok((e.name.clone(), poly(&e.terms)?)))
                .collect::<Result<_, RoaError>>()?,
            gamma: file.gamma,
            converged: file.converged,
            config: file.config,
            init: file.init,
            trace: file.trace,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateFile {
    format: String,
    tool_version: String,
    variables: Vec<String>,
    v: Vec<Term>,
    p: Vec<Vec<f64>>,
    lambda: Vec<Term>,
    mu: Vec<Term>,
    etas: Vec<NamedTerms>,
    gamma: Option<f64>,
    converged: bool,
    config: RoaConfig,
    init: Option<StepReport>,
    trace: Vec<IterationRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedTerms {
    name: String,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Term {
    exponents: Vec<u32>,
    coefficient: f64,
}

fn terms_of(p: &Polynomial<f64>) -> Vec<Term> {
    p.terms()
        .map(|(m, &c)| Term {
            exponents: m.exponents(p.nvars()).iter().map(|&e| e as u32).collect(),
            coefficient: c,
        })
        .collect()
}

fn poly_of(vars: &VarSet, terms: &[Term]) -> Result<Polynomial<f64>, RoaError> {
    let mut p = Polynomial::zero(vars);
    for t in terms {
        if t.exponents.len() != vars.len() {
            return Err(RoaError::Certificate(format!(
                "term has {} exponents, expected {}",
                t.exponents.len(),
                vars.len()
            )));
        }
        if !t.coefficient.is_finite() {
            return Err(RoaError::Certificate("non-finite coefficient".into()));
        }
        p.add_term(Monomial::new(&t.exponents), t.coefficient);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LyapunovCertificate {
        let vars = VarSet::new(["x", "y"]).unwrap();
        let v = Polynomial::parse(&vars, "0.5*x^2 + 0.125*x*y + 2*y^2 + 1e-3*x^4").unwrap();
        LyapunovCertificate {
            v,
            p: vec![vec![1.0, 0.1], vec![0.1, 3.0]],
            lambda: Polynomial::parse(&vars, "-0.25 - 1*x^2").unwrap(),
            mu: Polynomial::constant(&vars, 0.3),
            etas: vec![("strip".into(), Polynomial::parse(&vars, "0.7*y^2").unwrap())],
            gamma: Some(1.25),
            converged: true,
            config: RoaConfig::van_der_pol(),
            init: None,
            trace: Vec::new(),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let c = sample();
        let back = LyapunovCertificate::from_json(&c.to_json()).unwrap();
        assert_eq!(back.v, c.v);
        assert_eq!(back.lambda, c.lambda);
        assert_eq!(back.etas, c.etas);
        assert_eq!(back.p, c.p);
        assert_eq!(back.gamma, c.gamma);
        assert_eq!(back.config, c.config);
    }

    #[test]
    fn wrong_format_rejected() {
        let text = sample().to_json().replace(CERTIFICATE_FORMAT, "other/9");
        assert!(matches!(LyapunovCertificate::from_json(&text), Err(RoaError::Certificate(_))));
    }

    #[test]
    fn inflated_level_halves_v() {
        let c = sample();
        let t = c.with_inflated_level(2.0).unwrap();
        assert!((t.value(&[1.0, 1.0]).unwrap() * 2.0 - c.value(&[1.0, 1.0]).unwrap()).abs() < 1e-15);
        assert!(c.with_inflated_level(0.0).is_err());
    }

    #[test]
    fn trace_of_shape_matrix() {
        assert_eq!(sample().trace_p(), 4.0);
    }
}
