//! Dormand–Prince 5(4) for autonomous systems, with its free interpolant.

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunEnd {
    /// Reached the final time.
    Finished,
    /// The observer asked to stop.
    Stopped,
    StepUnderflow,
    NonFinite,
    TooManySteps,
}

/// One accepted step with its continuous extension.
pub struct Step<'a> {
    pub t0: f64,
    pub t1: f64,
    pub x1: &'a [f64],
    rcont: &'a [Vec<f64>; 5],
}

impl Step<'_> {
    /// State at `t ∈ [t0, t1]`.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

impl Dopri5 {
    /// Integrates from `t0` to `t_end` (either direction), calling
    /// `observer` after every accepted step.
    pub fn run<F, O>(&self, f: &F, t0: f64, x0: &[f64], t_end: f64, mut observer: O) -> RunEnd
    where
        F: Fn(&[f64], &mut [f64]) + ?Sized,
        O: FnMut(&Step<'_>) -> StepOutcome,
    {
        let n = x0.len();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut x = x0.to_vec();
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut tmp = vec![0.0; n];
        let mut xn = vec![0.0; n];
        let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
        f(&x, &mut k[0]);
        if k[0].iter().any(|v| !v.is_finite()) {
            return RunEnd::NonFinite;
        }
        if t == t_end {
            return RunEnd::Finished;
        }
        let mut h = dir * self.initial_step(f, &x, &k[0], (t_end - t).abs());
        let mut rejected_last = false;
        for _ in 0..self.max_steps {
            if (t + h - t_end) * dir > 0.0 {
                h = t_end - t;
            }
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return RunEnd::StepUnderflow;
            }
            let stage = |k: &[Vec<f64>; 7], tmp: &mut [f64], coefs: &[(usize, f64)]| {
                for i in 0..n {
                    let mut s = 0.0;
                    for &(j, a) in coefs {
                        s += a * k[j][i];
                    }
                    tmp[i] = x[i] + h * s;
                }
            };
            stage(&k, &mut tmp, &[(0, A21)]);
            f(&tmp, &mut k[1]);
            stage(&k, &mut tmp, &[(0, A31), (1, A32)]);
            f(&tmp, &mut k[2]);
            stage(&k, &mut tmp, &[(0, A41), (1, A42), (2, A43)]);
            f(&tmp, &mut k[3]);
            stage(&k, &mut tmp, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            f(&tmp, &mut k[4]);
            stage(&k, &mut tmp, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            f(&tmp, &mut k[5]);
            stage(&k, &mut xn, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
            f(&xn, &mut k[6]);

            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = self.atol + self.rtol * x[i].abs().max(xn[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                if h.abs() < 1e-12 {
                    return RunEnd::NonFinite;
                }
                h *= 0.1;
                rejected_last = true;
                continue;
            }
            if err <= 1.0 {
                for i in 0..n {
                    let dy = xn[i] - x[i];
                    let bspl = h * k[0][i] - dy;
                    rcont[0][i] = x[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = bspl;
                    rcont[3][i] = dy - h * k[6][i] - bspl;
                    rcont[4][i] = h
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                }
                let t_new = t + h;
                let step = Step {
                    t0: t,
                    t1: t_new,
                    x1: &xn,
                    rcont: &rcont,
                };
                let outcome = observer(&step);
                t = t_new;
                std::mem::swap(&mut x, &mut xn);
                k.swap(0, 6);
                if outcome == StepOutcome::Stop {
                    return RunEnd::Stopped;
                }
                if (t - t_end) * dir >= 0.0 {
                    return RunEnd::Finished;
                }
                let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
                fac = fac.clamp(0.2, 10.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                h *= fac;
                rejected_last = false;
            } else {
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                rejected_last = true;
            }
        }
        RunEnd::TooManySteps
    }

    fn initial_step<F>(&self, f: &F, x: &[f64], f0: &[f64], span: f64) -> f64
    where
        F: Fn(&[f64], &mut [f64]) + ?Sized,
    {
        let n = x.len();
        let sc: Vec<f64> = x.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let d0 = norm(x);
        let d1 = norm(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let x1: Vec<f64> = x.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
        let mut f1 = vec![0.0; n];
        f(&x1, &mut f1);
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }
}
