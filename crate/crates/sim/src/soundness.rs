use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sosroa_poly::{PolyEvaluator, Polynomial};

use crate::{classify, Classification, Constraint, SimOptions, Verdict};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SamplingError {
    #[error("sample budget is zero")]
    EmptyBudget,
    #[error("shape matrix is not positive definite")]
    ShapeMatrix,
    #[error("sublevel set is empty along every probed ray")]
    EmptySet,
    #[error("only {accepted} of {requested} samples accepted after {attempts} draws")]
    Starved {
        requested: usize,
        accepted: usize,
        attempts: usize,
    },
}

/// Uniform rejection sampler for `{V ≤ level}`.
///
/// Draws are made in coordinates where the shape ellipsoid `xᵀPx ≤ 1` is the
/// unit ball, inside a box found by scanning rays from the origin.
pub struct CertifiedSampler {
    eval: PolyEvaluator,
    level: f64,
    /// `x = T y`
    t: Vec<Vec<f64>>,
    half_widths: Vec<f64>,
}

const RAYS: usize = 4000;

impl CertifiedSampler {
    pub fn new(v: &Polynomial<f64>, p: Option<&[Vec<f64>]>, level: f64, seed: u64) -> Result<Self, SamplingError> {
        let n = v.nvars();
        let t = match p {
            Some(p) => inverse_sqrt(p)?,
            None => (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        };
        let eval = PolyEvaluator::new(v);
        let mut s = Self {
            eval,
            level,
            t,
            half_widths: vec![0.0; n],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            for sgn in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = sgn;
                dirs.push(d);
            }
        }
        for _ in 0..RAYS {
            let d: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
            let norm = d.iter().map(|a| a * a).sum::<f64>().sqrt();
            dirs.push(d.iter().map(|a| a / norm).collect());
        }
        let mut found = false;
        let mut y = vec![0.0; n];
        for d in &dirs {
            let mut r = 1e-3;
            while r < 1e4 {
                for i in 0..n {
                    y[i] = r * d[i];
                }
                let val = s.value_y(&y);
                if val <= level {
                    found = true;
                    for i in 0..n {
                        s.half_widths[i] = s.half_widths[i].max(y[i].abs());
                    }
                } else if val > 10.0 * level.max(1e-12) {
                    break;
                }
                r += 0.005 * (1.0 + r);
            }
        }
        if !found {
            return Err(SamplingError::EmptySet);
        }
        for h in &mut s.half_widths {
            *h = (*h * 1.05).max(1e-9);
        }
        Ok(s)
    }

    fn to_x(&self, y: &[f64]) -> Vec<f64> {
        self.t
            .iter()
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn value_y(&self, y: &[f64]) -> f64 {
        self.eval.evaluate(&self.to_x(y))
    }

    /// `n` points with `V ≤ level`, plus the number of draws used.
    pub fn sample(&self, n: usize, seed: u64, max_attempts: usize) -> Result<(Vec<Vec<f64>>, usize), SamplingError> {
        if n == 0 {
            return Err(SamplingError::EmptyBudget);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n {
            if attempts >= max_attempts {
                return Err(SamplingError::Starved {
                    requested: n,
                    accepted: out.len(),
                    attempts,
                });
            }
            attempts += 1;
            let y: Vec<f64> = self.half_widths.iter().map(|&h| rng.gen_range(-h..=h)).collect();
            let x = self.to_x(&y);
            if self.eval.evaluate(&x) <= self.level {
                out.push(x);
            }
        }
        Ok((out, attempts))
    }

    /// Axis-aligned half widths of the sampling box in whitened coordinates.
    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `P^{-1/2}` for symmetric positive definite `P`.
fn inverse_sqrt(p: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SamplingError> {
    let n = p.len();
    let m = Mat::from_fn(n, n, |i, j| 0.5 * (p[i][j] + p[j][i]));
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| SamplingError::ShapeMatrix)?;
    let (u, s) = (evd.U(), evd.S().column_vector());
    if (0..n).any(|k| !(s[k] > 0.0)) {
        return Err(SamplingError::ShapeMatrix);
    }
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| u[(i, k)] * u[(j, k)] / s[k].sqrt()).sum())
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x0: Vec<f64>,
    pub classification: Classification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub samples: usize,
    pub attempts: usize,
    pub converged: usize,
    pub safe: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl SoundnessReport {
    pub fn safe_fraction(&self) -> f64 {
        self.safe as f64 / self.samples as f64
    }

    pub fn converged_fraction(&self) -> f64 {
        self.converged as f64 / self.samples as f64
    }
}

/// Classifies already drawn points.
pub fn classify_points<F>(points: &[Vec<f64>], field: &F, constraints: &[Constraint], opts: &SimOptions) -> Vec<Classification>
where
    F: Fn(&[f64], &mut [f64]) + Sync + ?Sized,
{
    points
        .par_iter()
        .map(|x| classify(field, x, constraints, opts))
        .collect()
}

/// Samples `{V ≤ level}` and simulates every sample.
#[allow(clippy::too_many_arguments)]
pub fn certificate_soundness<F>(
    v: &Polynomial<f64>,
    p: Option<&[Vec<f64>]>,
    level: f64,
    field: &F,
    constraints: &[Constraint],
    opts: &SimOptions,
    n: usize,
    seed: u64,
) -> Result<SoundnessReport, SamplingError>
where
    F: Fn(&[f64], &mut [f64]) + Sync + ?Sized,
{
    if n == 0 {
        return Err(SamplingError::EmptyBudget);
    }
    let sampler = CertifiedSampler::new(v, p, level, seed)?;
    let (points, attempts) = sampler.sample(n, seed, n.saturating_mul(100_000))?;
    let verdicts = classify_points(&points, field, constraints, opts);
    let mut report = SoundnessReport {
        samples: n,
        attempts,
        converged: 0,
        safe: 0,
        counterexamples: Vec::new(),
    };
    for (x, c) in points.into_iter().zip(verdicts) {
        if c.verdict.converged() {
            report.converged += 1;
        }
        if c.verdict == Verdict::ConvergedSafe {
            report.safe += 1;
        } else {
            report.counterexamples.push(Counterexample {
                x0: x,
                classification: c,
            });
        }
    }
    Ok(report)
}
