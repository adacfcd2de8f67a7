//! The convex subproblems of the iteration, each a single SOS program.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sosroa_poly::{PolyVectorField, Polynomial, VarSet};
use sosroa_sos::{LinExpr, Parity, PolyExpr, SdpSolver, SdpStatus, SosError, SosProgram, SosSolution};

use crate::{RoaConfig, RoaError};

/// State constraint `g(x) ≤ 0` with its multiplier degree.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedConstraint {
    pub name: String,
    pub g: Polynomial<f64>,
    pub multiplier_degree: u32,
}

/// Diagnostics of one SDP solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: String,
    pub status: String,
    pub degree: Option<u32>,
    pub objective: f64,
    pub decision_variables: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct LambdaStep {
    pub rho: f64,
    pub lambda: Polynomial<f64>,
    pub etas: Vec<Polynomial<f64>>,
    pub degree: u32,
    pub reports: Vec<StepReport>,
}

#[derive(Clone, Debug)]
pub struct MuStep {
    pub p: Vec<Vec<f64>>,
    pub mu: Polynomial<f64>,
    pub degree: u32,
    pub reports: Vec<StepReport>,
}

#[derive(Clone, Debug)]
pub struct VStep {
    pub v: Polynomial<f64>,
    pub p: Vec<Vec<f64>>,
    pub gamma: Option<f64>,
    pub report: StepReport,
}

/// Polynomial field, state constraints and configuration, all in the
/// coordinates the SDPs are posed in.
#[derive(Clone, Debug)]
pub struct RoaProblem {
    field: PolyVectorField<f64>,
    constraints: Vec<NamedConstraint>,
    config: RoaConfig,
    /// `tr P` in original coordinates is `Σ wᵢ Pᵢᵢ`.
    trace_weights: Vec<f64>,
}

/// Bisection treats a level this large as unbounded unless `rho_max` is set.
const UNCAPPED_LEVEL_LIMIT: f64 = 1e6;

enum Level {
    Maximize,
    Fixed(f64),
}

impl RoaProblem {
    pub fn new(field: PolyVectorField<f64>, config: RoaConfig) -> Result<Self, RoaError> {
        let vars = field.vars().clone();
        config.validate(vars.len())?;
        let mut constraints = Vec::new();
        for c in &config.constraints {
            let g = Polynomial::parse(&vars, &c.g)
                .map_err(|e| RoaError::Config(format!("constraint `{}`: {e}", c.name)))?;
            if g.evaluate_f64(&vec![0.0; vars.len()])? >= 0.0 {
                return Err(RoaError::Config(format!(
                    "constraint `{}` does not hold strictly at the origin",
                    c.name
                )));
            }
            let multiplier_degree = match c.multiplier_degree {
                Some(d) => d,
                None => config.lyapunov_degree.saturating_sub(g.degree()),
            };
            constraints.push(NamedConstraint {
                name: c.name.clone(),
                g,
                multiplier_degree,
            });
        }
        let trace_weights = vec![1.0; vars.len()];
        Ok(Self {
            field,
            constraints,
            config,
            trace_weights,
        })
    }

    pub fn field(&self) -> &PolyVectorField<f64> {
        &self.field
    }

    pub fn vars(&self) -> &VarSet {
        self.field.vars()
    }

    pub fn config(&self) -> &RoaConfig {
        &self.config
    }

    pub fn constraints(&self) -> &[NamedConstraint] {
        &self.constraints
    }

    /// The same problem in `z = x / s`. Points are divided by `s`, the
    /// field becomes `S⁻¹ f(S z)` and constraints `g(S z)`.
    pub fn scaled(&self, s: &[f64]) -> Result<Self, RoaError> {
        let vars = self.vars();
        if s.len() != vars.len() || s.iter().any(|c| !(*c > 0.0)) {
            return Err(RoaError::Config(format!("state scaling needs {} positive entries", vars.len())));
        }
        let subs: Vec<Polynomial<f64>> = (0..vars.len())
            .map(|i| Polynomial::var(vars, i).scale(s[i]))
            .collect();
        let comps = self
            .field
            .components()
            .iter()
            .zip(s)
            .map(|(f, si)| Ok(f.substitute(&subs)?.scale(1.0 / si)))
            .collect::<Result<Vec<_>, RoaError>>()?;
        let field = PolyVectorField::new(vars, comps)?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                Ok(NamedConstraint {
                    g: c.g.substitute(&subs)?,
                    ..c.clone()
                })
            })
            .collect::<Result<Vec<_>, RoaError>>()?;
        let shrink = |pts: &[Vec<f64>]| -> Vec<Vec<f64>> {
            pts.iter()
                .map(|p| p.iter().zip(s).map(|(x, si)| x / si).collect())
                .collect()
        };
        let config = RoaConfig {
            anchors: shrink(&self.config.anchors),
            scaling_points: shrink(&self.config.scaling_points),
            state_scales: None,
            ..self.config.clone()
        };
        let trace_weights = self
            .trace_weights
            .iter()
            .zip(s)
            .map(|(w, si)| w / (si * si))
            .collect();
        Ok(Self {
            field,
            constraints,
            config,
            trace_weights,
        })
    }

    /// Trace of a shape matrix measured in the original coordinates.
    pub fn shape_trace(&self, p: &[Vec<f64>]) -> f64 {
        self.trace_weights.iter().enumerate().map(|(i, w)| w * p[i][i]).sum()
    }

    fn trace_objective(&self, p: &sosroa_sos::MatrixVar) -> LinExpr {
        let mut out = LinExpr::zero();
        for (i, w) in self.trace_weights.iter().enumerate() {
            out.add_scaled(&p.entry(i, i), *w);
        }
        out
    }

    fn parity(&self) -> Parity {
        self.config.parity
    }

    fn project(&self, p: Polynomial<f64>) -> Polynomial<f64> {
        match self.parity() {
            Parity::Even => p.even_part(),
            Parity::None => p,
        }
    }

    fn norm_pow(&self, k: u32) -> Polynomial<f64> {
        Polynomial::norm_squared(self.vars()).pow(k)
    }

    /// Global Lyapunov function of the linearization with `V⁰ = 1` at the
    /// scaling points.
    pub fn init_lyapunov(&self, solver: &dyn SdpSolver) -> Result<(Polynomial<f64>, StepReport), RoaError> {
        let start = Instant::now();
        let cfg = &self.config;
        let lin = self.field.linearization()?;
        let mut prog = SosProgram::new(self.vars());
        let v = prog.new_poly(2, cfg.lyapunov_degree);
        prog.restrict_parity(&v, self.parity());
        let ve = v.expr();
        prog.assert_strict_sos(&ve, cfg.epsilon)?;
        prog.assert_sos(&-&ve.lie_derivative(&lin))?;
        for pt in &cfg.scaling_points {
            prog.assert_point_value(&ve, pt, &LinExpr::constant(1.0))?;
        }
        let sol = prog.solve(solver)?;
        let report = report("init", &sol, None, prog.n_decision_variables(), start);
        if !sol.is_optimal() {
            return Err(RoaError::InitInfeasible(format!("{} ({})", sol.status.as_str(), sol.message)));
        }
        Ok((self.project(sol.poly(&v)), report))
    }

    /// Largest certified level of a fixed `V`, escalating the degree of λ
    /// from `start` until a positive level is found.
    pub fn lambda_step(&self, v: &Polynomial<f64>, start: u32, solver: &dyn SdpSolver) -> Result<LambdaStep, RoaError> {
        let mut reports = Vec::new();
        let vdot = self.project(v.lie_derivative(&self.field)?);
        for degree in self.config.degree_schedule(start, self.config.lambda_degree_max) {
            match self.lambda_at_degree(v, &vdot, degree, solver, &mut reports)? {
                Some((rho, lambda, etas)) => {
                    return Ok(LambdaStep {
                        rho,
                        lambda,
                        etas,
                        degree,
                        reports,
                    })
                }
                None => continue,
            }
        }
        Err(RoaError::StepFailed {
            step: "lambda",
            status: reports.last().map(|r| r.status.clone()).unwrap_or_default(),
        })
    }

    fn lambda_at_degree(
        &self,
        v: &Polynomial<f64>,
        vdot: &Polynomial<f64>,
        degree: u32,
        solver: &dyn SdpSolver,
        reports: &mut Vec<StepReport>,
    ) -> Result<Option<(f64, Polynomial<f64>, Vec<Polynomial<f64>>)>, RoaError> {
        let start = Instant::now();
        let (sol, prog_size, out) = match self.lambda_program(v, vdot, degree, Level::Maximize, solver) {
            Err(RoaError::Sos(SosError::OddDegree { degree: odd })) => {
                reports.push(odd_report("lambda", degree, odd));
                return Ok(None);
            }
            r => r?,
        };
        reports.push(report("lambda", &sol, Some(degree), prog_size, start));
        match sol.status {
            SdpStatus::Optimal => {
                let (rho, lambda, etas) = out(&sol);
                if rho > 0.0 {
                    return Ok(Some((rho, lambda, etas)));
                }
                reports.last_mut().unwrap().status = format!("nonpositive level {rho:.3e}");
                Ok(None)
            }
            SdpStatus::DualInfeasible if self.config.rho_max.is_none() => Err(RoaError::UnboundedLevel),
            SdpStatus::NumericalFailure => self.bisect_level(v, vdot, degree, solver, reports),
            _ => Ok(None),
        }
    }

    /// Level maximization by feasibility tests when the direct solve fails.
    fn bisect_level(
        &self,
        v: &Polynomial<f64>,
        vdot: &Polynomial<f64>,
        degree: u32,
        solver: &dyn SdpSolver,
        reports: &mut Vec<StepReport>,
    ) -> Result<Option<(f64, Polynomial<f64>, Vec<Polynomial<f64>>)>, RoaError> {
        let mut test = |rho: f64| -> Result<Option<(Polynomial<f64>, Vec<Polynomial<f64>>)>, RoaError> {
            let start = Instant::now();
            let (sol, size, out) = self.lambda_program(v, vdot, degree, Level::Fixed(rho), solver)?;
            reports.push(report("lambda-bisect", &sol, Some(degree), size, start));
            Ok(sol.is_optimal().then(|| {
                let (_, l, e) = out(&sol);
                (l, e)
            }))
        };
        let cap = self.config.rho_max.unwrap_or(UNCAPPED_LEVEL_LIMIT);
        let mut best = None;
        let mut lo = 0.0;
        let mut hi = 1.0f64.min(cap);
        loop {
            match test(hi)? {
                Some(m) => {
                    best = Some((hi, m));
                    lo = hi;
                    if hi >= cap {
                        break;
                    }
                    hi = (2.0 * hi).min(cap);
                }
                None => break,
            }
        }
        if self.config.rho_max.is_none() && lo >= cap {
            return Err(RoaError::UnboundedLevel);
        }
        if lo < hi {
            while (hi - lo) > 1e-3 * hi {
                let mid = 0.5 * (lo + hi);
                match test(mid)? {
                    Some(m) => {
                        best = Some((mid, m));
                        lo = mid;
                    }
                    None => hi = mid,
                }
            }
        }
        Ok(best.map(|(rho, (l, e))| (rho, l, e)))
    }

    #[allow(clippy::type_complexity)]
    fn lambda_program(
        &self,
        v: &Polynomial<f64>,
        vdot: &Polynomial<f64>,
        degree: u32,
        level: Level,
        solver: &dyn SdpSolver,
    ) -> Result<
        (
            SosSolution,
            usize,
            impl Fn(&SosSolution) -> (f64, Polynomial<f64>, Vec<Polynomial<f64>>) + '_,
        ),
        RoaError,
    > {
        let vars = self.vars();
        let mut prog = SosProgram::new(vars);
        let lam = prog.new_poly(0, degree);
        prog.restrict_parity(&lam, self.parity());
        let etas: Vec<_> = self
            .constraints
            .iter()
            .map(|c| prog.new_poly(0, c.multiplier_degree))
            .collect();
        let (rho_var, rho) = match level {
            Level::Maximize => {
                let r = prog.new_scalar();
                (Some(r), r.lin())
            }
            Level::Fixed(r) => (None, LinExpr::constant(r)),
        };
        let one = Polynomial::constant(vars, 1.0);
        let n2d = self.norm_pow(self.config.d);
        let mut level_cond = PolyExpr::from_poly(&n2d.checked_mul(v)?);
        level_cond = &level_cond - &lin_times(&rho, &n2d);
        level_cond = &level_cond + &(&lam.expr() * vdot);
        prog.assert_sos(&level_cond)?;
        for (c, eta) in self.constraints.iter().zip(&etas) {
            let e = &(&PolyExpr::from_poly(v) - &lin_times(&rho, &one)) + &(&eta.expr() * &c.g);
            prog.assert_sos(&e)?;
        }
        if let (Some(r), Some(cap)) = (rho_var, self.config.rho_max) {
            let slack = prog.new_psd_matrix(1);
            prog.assert_equal(&(&r.lin() + &slack.entry(0, 0)), cap);
        }
        if let Some(r) = rho_var {
            prog.minimize(-&r.lin());
        }
        let size = prog.n_decision_variables();
        let sol = prog.solve(solver)?;
        let out = move |sol: &SosSolution| {
            let rho = match (rho_var, &level) {
                (Some(r), _) => sol.scalar(r),
                (None, Level::Fixed(r)) => *r,
                (None, Level::Maximize) => unreachable!(),
            };
            let lambda = self.project(sol.poly(&lam));
            let etas = etas.iter().map(|e| sol.poly(e)).collect();
            (rho, lambda, etas)
        };
        Ok((sol, size, out))
    }

    /// Smallest-trace ellipsoid inside `{V ≤ 1}`, escalating the degree of μ.
    pub fn mu_step(&self, v: &Polynomial<f64>, start: u32, solver: &dyn SdpSolver) -> Result<MuStep, RoaError> {
        let vars = self.vars();
        let mut reports = Vec::new();
        let one = Polynomial::constant(vars, 1.0);
        let v_minus_1 = self.norm_pow(self.config.d2).checked_mul(&v.checked_sub(&one)?)?;
        let n2d1 = self.norm_pow(self.config.d1);
        for degree in self.config.degree_schedule(start, self.config.mu_degree_max) {
            let started = Instant::now();
            let mut prog = SosProgram::new(vars);
            let p = prog.new_psd_matrix(vars.len());
            let mu = prog.new_poly(0, degree);
            prog.restrict_parity(&mu, self.parity());
            let shape = &(&(&p.quadratic_form(vars) - &one) * &n2d1) + &(&mu.expr() * &v_minus_1);
            if let Err(SosError::OddDegree { degree: odd }) = prog.assert_sos(&shape) {
                reports.push(odd_report("mu", degree, odd));
                continue;
            }
            prog.minimize(self.trace_objective(&p));
            let sol = prog.solve(solver)?;
            reports.push(report("mu", &sol, Some(degree), prog.n_decision_variables(), started));
            if !sol.is_optimal() {
                continue;
            }
            let pm = sol.matrix(p);
            if pm.min_eigenvalue() <= 1e-12 * pm.trace().abs().max(1e-300) {
                reports.last_mut().unwrap().status = "singular shape matrix".into();
                continue;
            }
            return Ok(MuStep {
                p: pm.rows(),
                mu: self.project(sol.poly(&mu)),
                degree,
                reports,
            });
        }
        Err(RoaError::StepFailed {
            step: "mu",
            status: reports.last().map(|r| r.status.clone()).unwrap_or_default(),
        })
    }

    /// New `V` and ellipsoid with all multipliers frozen.
    pub fn v_step(
        &self,
        lambda: &Polynomial<f64>,
        mu: &Polynomial<f64>,
        etas: &[Polynomial<f64>],
        solver: &dyn SdpSolver,
    ) -> Result<VStep, RoaError> {
        if etas.len() != self.constraints.len() {
            return Err(RoaError::Config(format!(
                "{} constraint multipliers for {} constraints",
                etas.len(),
                self.constraints.len()
            )));
        }
        let started = Instant::now();
        let cfg = &self.config;
        let vars = self.vars();
        let one = Polynomial::constant(vars, 1.0);
        let mut prog = SosProgram::new(vars);
        let v = prog.new_poly(2, cfg.lyapunov_degree);
        prog.restrict_parity(&v, self.parity());
        let p = prog.new_psd_matrix(vars.len());
        let ve = v.expr();
        let v_minus_1 = &ve - &one;
        prog.assert_strict_sos(&ve, cfg.epsilon)?;

        let level_cond = &(&v_minus_1 * &self.norm_pow(cfg.d)) + &(&ve.lie_derivative(&self.field) * lambda);
        prog.assert_sos(&level_cond)?;

        let mu_d2 = self.norm_pow(cfg.d2).checked_mul(mu)?;
        let shape = &(&(&p.quadratic_form(vars) - &one) * &self.norm_pow(cfg.d1)) + &(&v_minus_1 * &mu_d2);
        prog.assert_sos(&shape)?;

        for (c, eta) in self.constraints.iter().zip(etas) {
            prog.assert_sos(&(&v_minus_1 + &eta.checked_mul(&c.g)?))?;
        }

        let gamma = if cfg.anchors.is_empty() {
            prog.minimize(self.trace_objective(&p));
            None
        } else {
            let g = prog.new_scalar();
            for a in &cfg.anchors {
                prog.assert_point_value(&ve, a, &g.lin())?;
            }
            let [w1, w2] = cfg.anchor_weights;
            prog.minimize(&(&self.trace_objective(&p) * w1) + &(&g.lin() * w2));
            Some(g)
        };
        let sol = prog.solve(solver)?;
        let report = report("v", &sol, None, prog.n_decision_variables(), started);
        if !sol.is_optimal() {
            return Err(RoaError::StepFailed {
                step: "v",
                status: report.status,
            });
        }
        Ok(VStep {
            v: self.project(sol.poly(&v)),
            p: sol.matrix(p).rows(),
            gamma: gamma.map(|g| sol.scalar(g)),
            report,
        })
    }
}

/// `V / ρ`, whose unit sublevel set equals `{V ≤ ρ}`.
pub fn normalize(v: &Polynomial<f64>, rho: f64) -> Result<Polynomial<f64>, RoaError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(RoaError::NonPositiveLevel(rho));
    }
    Ok(v.scale(1.0 / rho))
}

fn lin_times(lin: &LinExpr, p: &Polynomial<f64>) -> PolyExpr {
    let mut out = PolyExpr::zero(p.vars());
    for (m, &c) in p.terms() {
        out.add_lin(*m, lin, c);
    }
    out
}

fn odd_report(step: &str, degree: u32, odd: u32) -> StepReport {
    StepReport {
        step: step.into(),
        status: format!("odd degree {odd}"),
        degree: Some(degree),
        objective: 0.0,
        decision_variables: 0,
        seconds: 0.0,
    }
}

fn report(step: &str, sol: &SosSolution, degree: Option<u32>, size: usize, start: Instant) -> StepReport {
    StepReport {
        step: step.into(),
        status: sol.status.as_str().into(),
        degree,
        objective: if sol.objective.is_finite() { sol.objective } else { 0.0 },
        decision_variables: size,
        seconds: start.elapsed().as_secs_f64(),
    }
}
