use serde::{Deserialize, Serialize};

use crate::dopri::{Dopri5, RunEnd, StepOutcome};

/// State inequality `g(x) ≤ 0`.
pub struct Constraint {
    pub name: String,
    pub g: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl Constraint {
    pub fn new(name: impl Into<String>, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            g: Box::new(g),
        }
    }
}

impl std::fmt::Debug for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Constraint").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Seconds.
    pub horizon: f64,
    /// Dense-output samples per second for constraint checks and recording.
    pub sample_rate: f64,
    /// Per-state divisors applied before taking norms; empty means all ones.
    pub scales: Vec<f64>,
    pub convergence_radius: f64,
    /// How long the scaled norm must stay inside the convergence radius.
    pub convergence_window: f64,
    pub divergence_radius: f64,
    /// Slack on `g(x) ≤ 0` before a sample counts as a violation.
    pub constraint_tol: f64,
    /// Stop as soon as convergence is established.
    pub stop_on_convergence: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            horizon: 10.0,
            sample_rate: 100.0,
            scales: Vec::new(),
            convergence_radius: 1e-3,
            convergence_window: 1.0,
            divergence_radius: 1e3,
            constraint_tol: 0.0,
            stop_on_convergence: true,
        }
    }
}

impl SimOptions {
    pub fn scaled_norm(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, v)| (v / self.scales.get(i).copied().unwrap_or(1.0)).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ConvergedSafe,
    /// Converged after violating the constraint with this index.
    ConvergedUnsafe(usize),
    Diverged,
}

impl Verdict {
    pub fn converged(&self) -> bool {
        !matches!(self, Verdict::Diverged)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ConvergedSafe => "converged_safe",
            Verdict::ConvergedUnsafe(_) => "converged_unsafe",
            Verdict::Diverged => "diverged",
        }
    }
}

/// Why the integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    Escaped,
    /// Horizon reached without establishing convergence.
    Horizon,
    StepUnderflow,
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: usize,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub termination: Termination,
    pub first_violation: Option<Violation>,
    pub end_time: f64,
    /// Largest value of each `g` seen along the trajectory.
    pub max_constraint: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Uniform samples at the configured rate, starting at 0.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub classification: Classification,
}

/// Integrates, checks constraints and decides convergence; records samples
/// only when `record` is set.
pub fn simulate<F>(field: &F, x0: &[f64], constraints: &[Constraint], opts: &SimOptions, record: bool) -> Trajectory
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
{
    let integ = Dopri5 {
        rtol: opts.rtol,
        atol: opts.atol,
        ..Dopri5::default()
    };
    let dt = 1.0 / opts.sample_rate;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut max_g: Vec<f64> = constraints.iter().map(|c| (c.g)(x0)).collect();
    let mut first_violation = None;
    let mut inside_since: Option<f64> = None;
    let mut escaped = false;
    let mut converged = false;
    let mut end_time = 0.0;

    let mut visit = |t: f64, x: &[f64], max_g: &mut [f64]| -> bool {
        for (i, c) in constraints.iter().enumerate() {
            let g = (c.g)(x);
            max_g[i] = max_g[i].max(g);
            if first_violation.is_none() && g > opts.constraint_tol {
                first_violation = Some(Violation { constraint: i, time: t });
            }
        }
        let r = opts.scaled_norm(x);
        if !r.is_finite() || r > opts.divergence_radius {
            escaped = true;
            return true;
        }
        if r < opts.convergence_radius {
            let since = *inside_since.get_or_insert(t);
            if t - since >= opts.convergence_window - 1e-9 {
                converged = true;
            }
        } else {
            inside_since = None;
            converged = false;
        }
        converged && opts.stop_on_convergence
    };

    if record {
        times.push(0.0);
        states.push(x0.to_vec());
    }
    let stop = visit(0.0, x0, &mut max_g);
    let mut next_sample = 1usize;
    let mut buf = vec![0.0; x0.len()];
    let run_end = if stop {
        RunEnd::Stopped
    } else {
        integ.run(field, 0.0, x0, opts.horizon, |step| {
            while (next_sample as f64) * dt <= step.t1 + 1e-12 {
                let t = next_sample as f64 * dt;
                step.interpolate(t.min(step.t1), &mut buf);
                if record {
                    times.push(t);
                    states.push(buf.clone());
                }
                next_sample += 1;
                end_time = t;
                if visit(t, &buf, &mut max_g) {
                    return StepOutcome::Stop;
                }
            }
            end_time = end_time.max(step.t1);
            if visit(step.t1, step.x1, &mut max_g) {
                return StepOutcome::Stop;
            }
            StepOutcome::Continue
        })
    };
    let termination = if escaped {
        Termination::Escaped
    } else if converged {
        Termination::Converged
    } else {
        match run_end {
            RunEnd::StepUnderflow | RunEnd::TooManySteps => Termination::StepUnderflow,
            RunEnd::NonFinite => Termination::NonFinite,
            _ => Termination::Horizon,
        }
    };
    let verdict = match (termination, first_violation) {
        (Termination::Converged, None) => Verdict::ConvergedSafe,
        (Termination::Converged, Some(v)) => Verdict::ConvergedUnsafe(v.constraint),
        _ => Verdict::Diverged,
    };
    Trajectory {
        times,
        states,
        classification: Classification {
            verdict,
            termination,
            first_violation,
            end_time,
            max_constraint: max_g,
        },
    }
}

pub fn classify<F>(field: &F, x0: &[f64], constraints: &[Constraint], opts: &SimOptions) -> Classification
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
{
    simulate(field, x0, constraints, opts, false).classification
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(x: &[f64], dx: &mut [f64]) {
        dx[0] = -x[0];
        dx[1] = -2.0 * x[1];
    }

    #[test]
    fn origin_is_safe() {
        let c = classify(&decay, &[0.0, 0.0], &[], &SimOptions::default());
        assert_eq!(c.verdict, Verdict::ConvergedSafe);
        assert!(c.end_time <= 1.0 + 1e-9);
    }

    #[test]
    fn initial_violation_is_recorded() {
        let cons = [Constraint::new("x", |x: &[f64]| x[0] - 0.5)];
        let c = classify(&decay, &[0.6, 0.0], &cons, &SimOptions::default());
        assert_eq!(c.verdict, Verdict::ConvergedUnsafe(0));
        assert_eq!(c.first_violation.unwrap().time, 0.0);
    }

    #[test]
    fn blow_up_diverges() {
        let f = |x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0];
        let c = classify(&f, &[1.0], &[], &SimOptions::default());
        assert_eq!(c.verdict, Verdict::Diverged);
        assert_eq!(c.termination, Termination::Escaped);
    }

    #[test]
    fn slow_decay_is_undecided() {
        let f = |x: &[f64], dx: &mut [f64]| dx[0] = -0.1 * x[0];
        let c = classify(&f, &[1.0], &[], &SimOptions::default());
        assert_eq!(c.verdict, Verdict::Diverged);
        assert_eq!(c.termination, Termination::Horizon);
    }

    #[test]
    fn recording_is_uniform() {
        let opts = SimOptions {
            horizon: 2.0,
            stop_on_convergence: false,
            ..SimOptions::default()
        };
        let tr = simulate(&decay, &[1.0, 1.0], &[], &opts, true);
        assert_eq!(tr.times.len(), 201);
        for (t, x) in tr.times.iter().zip(&tr.states) {
            assert!((x[0] - (-t).exp()).abs() < 1e-7);
        }
    }
}
