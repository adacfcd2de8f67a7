use sosroa_poly::{PolyVectorField, Polynomial};
use sosroa_sos::SdpSolver;

use crate::{normalize, IterationRecord, LyapunovCertificate, RoaConfig, RoaError, RoaProblem, StepReport};

struct Candidate {
    v: Polynomial<f64>,
    p: Vec<Vec<f64>>,
    lambda: Polynomial<f64>,
    mu: Polynomial<f64>,
    etas: Vec<Polynomial<f64>>,
    gamma: Option<f64>,
}

/// Runs the full iteration and returns the last certificate that passed
/// every step.
pub fn estimate_roa(
    field: &PolyVectorField<f64>,
    config: &RoaConfig,
    solver: &dyn SdpSolver,
) -> Result<LyapunovCertificate, RoaError> {
    estimate_roa_with_progress(field, config, solver, &mut |_| {})
}

/// As [`estimate_roa`], calling `progress` after every iteration.
pub fn estimate_roa_with_progress(
    field: &PolyVectorField<f64>,
    config: &RoaConfig,
    solver: &dyn SdpSolver,
    progress: &mut dyn FnMut(&IterationRecord),
) -> Result<LyapunovCertificate, RoaError> {
    let problem = RoaProblem::new(field.clone(), config.clone())?;
    let work = match &config.state_scales {
        Some(s) => problem.scaled(s)?,
        None => problem.clone(),
    };
    let (init, trace, converged, best) = iterate(&work, solver, progress)?;

    let unscale = |p: &Polynomial<f64>| -> Result<Polynomial<f64>, RoaError> {
        match &config.state_scales {
            Some(s) => {
                let vars = p.vars();
                let subs: Vec<_> = (0..vars.len())
                    .map(|i| Polynomial::var(vars, i).scale(1.0 / s[i]))
                    .collect();
                Ok(p.substitute(&subs)?)
            }
            None => Ok(p.clone()),
        }
    };
    let p = match &config.state_scales {
        Some(s) => best
            .p
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, x)| x / (s[i] * s[j])).collect())
            .collect(),
        None => best.p.clone(),
    };
    Ok(LyapunovCertificate {
        v: unscale(&best.v)?,
        p,
        lambda: unscale(&best.lambda)?,
        mu: unscale(&best.mu)?,
        etas: problem
            .constraints()
            .iter()
            .zip(&best.etas)
            .map(|(c, e)| Ok((c.name.clone(), unscale(e)?)))
            .collect::<Result<_, RoaError>>()?,
        gamma: best.gamma,
        converged,
        config: config.clone(),
        init: Some(init),
        trace,
    })
}

fn failure_report(step: &str, e: &RoaError) -> StepReport {
    StepReport {
        step: step.into(),
        status: e.to_string(),
        degree: None,
        objective: 0.0,
        decision_variables: 0,
        seconds: 0.0,
    }
}

#[allow(clippy::type_complexity)]
fn iterate(
    work: &RoaProblem,
    solver: &dyn SdpSolver,
    progress: &mut dyn FnMut(&IterationRecord),
) -> Result<(StepReport, Vec<IterationRecord>, bool, Candidate), RoaError> {
    let cfg = work.config();
    let (mut v, init) = work.init_lyapunov(solver)?;
    let mut n_lambda = cfg.lambda_degree;
    let mut n_mu = cfg.mu_degree;
    let mut best: Option<Candidate> = None;
    let mut trace = Vec::new();
    let mut previous: Option<f64> = None;
    let mut converged = false;

    for k in 1..=cfg.max_iterations {
        let mut rec = IterationRecord {
            iteration: k,
            rho: 0.0,
            lambda_degree: n_lambda,
            mu_degree: n_mu,
            trace_p_shape: None,
            trace_p: None,
            gamma: None,
            accepted: false,
            steps: Vec::new(),
        };
        let ls = match work.lambda_step(&v, n_lambda, solver) {
            Ok(ls) => ls,
            Err(e @ RoaError::StepFailed { .. }) if best.is_some() => {
                rec.steps.push(failure_report("lambda", &e));
                progress(&rec);
                trace.push(rec);
                break;
            }
            Err(e) => return Err(e),
        };
        rec.steps.extend(ls.reports.iter().cloned());
        rec.rho = ls.rho;
        rec.lambda_degree = ls.degree;
        n_lambda = ls.degree;
        v = normalize(&v, ls.rho)?;
        let etas: Vec<_> = ls.etas.iter().map(|e| e.scale(1.0 / ls.rho)).collect();

        let ms = match work.mu_step(&v, n_mu, solver) {
            Ok(ms) => ms,
            Err(e @ RoaError::StepFailed { .. }) if best.is_some() => {
                rec.steps.push(failure_report("mu", &e));
                progress(&rec);
                trace.push(rec);
                break;
            }
            Err(e) => return Err(e),
        };
        rec.steps.extend(ms.reports.iter().cloned());
        rec.mu_degree = ms.degree;
        rec.trace_p_shape = Some(work.shape_trace(&ms.p));
        n_mu = ms.degree;
        best = Some(Candidate {
            v: v.clone(),
            p: ms.p.clone(),
            lambda: ls.lambda.clone(),
            mu: ms.mu.clone(),
            etas: etas.clone(),
            gamma: None,
        });

        let vs = match work.v_step(&ls.lambda, &ms.mu, &etas, solver) {
            Ok(vs) => vs,
            Err(e @ RoaError::StepFailed { .. }) => {
                rec.steps.push(failure_report("v", &e));
                progress(&rec);
                trace.push(rec);
                break;
            }
            Err(e) => return Err(e),
        };
        rec.steps.push(vs.report.clone());
        let tr = work.shape_trace(&vs.p);
        rec.trace_p = Some(tr);
        rec.gamma = vs.gamma;
        rec.accepted = true;
        best = Some(Candidate {
            v: vs.v.clone(),
            p: vs.p,
            lambda: ls.lambda,
            mu: ms.mu,
            etas,
            gamma: vs.gamma,
        });
        v = vs.v;
        progress(&rec);
        trace.push(rec);
        if let Some(prev) = previous {
            if ((tr - prev) / prev).abs() < cfg.trace_tolerance {
                converged = true;
                break;
            }
        }
        previous = Some(tr);
    }
    Ok((init, trace, converged, best.expect("first iteration either succeeds or returns an error")))
}
