use serde::{Deserialize, Serialize};

/// Fraction of the peak force that bounds the fitting range.
pub const SLIP_FRACTION: f64 = 0.95;

/// Upper end of the slip-angle scan for the peak force, rad.
const SCAN_MAX: f64 = 1.5;
const SCAN_POINTS: usize = 30_000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TireError {
    #[error("fraction must lie in (0, 1), got {0}")]
    Fraction(f64),
    #[error("no interior force peak on (0, {SCAN_MAX}] rad")]
    NoPeak,
    #[error("fitting range must be positive, got {0}")]
    Range(f64),
}

/// `Φ(α) = D sin(C atan(Bα − E(Bα − atan(Bα))))`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicFormula {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl MagicFormula {
    pub fn new(b: f64, c: f64, d: f64, e: f64) -> Self {
        Self { b, c, d, e }
    }

    pub fn force(&self, alpha: f64) -> f64 {
        let ba = self.b * alpha;
        self.d * (self.c * (ba - self.e * (ba - ba.atan())).atan()).sin()
    }

    /// `dΦ/dα` at zero slip.
    pub fn cornering_stiffness(&self) -> f64 {
        self.b * self.c * self.d
    }

    /// Location and value of the largest force for positive slip.
    pub fn peak(&self) -> Result<(f64, f64), TireError> {
        let h = SCAN_MAX / SCAN_POINTS as f64;
        let mut best = (0usize, 0.0f64);
        for i in 1..=SCAN_POINTS {
            let f = self.force(i as f64 * h);
            if f > best.1 {
                best = (i, f);
            }
        }
        if best.0 == 0 || best.0 == SCAN_POINTS {
            return Err(TireError::NoPeak);
        }
        // golden section on the bracketing cells
        let (mut a, mut b) = ((best.0 - 1) as f64 * h, (best.0 + 1) as f64 * h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        while b - a > 1e-13 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if self.force(x1) < self.force(x2) {
                a = x1;
            } else {
                b = x2;
            }
        }
        let x = 0.5 * (a + b);
        Ok((x, self.force(x)))
    }

    /// Smallest positive slip whose force reaches `fraction` of the peak.
    pub fn slip_limit(&self, fraction: f64) -> Result<f64, TireError> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(TireError::Fraction(fraction));
        }
        let (apeak, fpeak) = self.peak()?;
        let target = fraction * fpeak;
        let n = 4096;
        let h = apeak / n as f64;
        let hi_idx = (1..=n)
            .find(|&i| self.force(i as f64 * h) >= target)
            .ok_or(TireError::NoPeak)?;
        let (mut lo, mut hi) = ((hi_idx - 1) as f64 * h, hi_idx as f64 * h);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.force(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    /// Smallest maximum deviation on the fitting range.
    #[default]
    Minimax,
    /// Unweighted least squares over 1001 uniform samples.
    LeastSquares,
}

/// Odd cubic `c1 α + c3 α³` fitted to an axle characteristic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TireFit {
    pub c1: f64,
    pub c3: f64,
    /// Half-width of the fitting range, rad.
    pub alpha_bar: f64,
    pub peak_force: f64,
    pub method: FitMethod,
}

impl TireFit {
    pub fn new(mf: &MagicFormula, method: FitMethod) -> Result<Self, TireError> {
        let alpha_bar = mf.slip_limit(SLIP_FRACTION)?;
        let (_, peak_force) = mf.peak()?;
        let (c1, c3) = fit_cubic(|a| mf.force(a), alpha_bar, method)?;
        Ok(Self {
            c1,
            c3,
            alpha_bar,
            peak_force,
            method,
        })
    }

    pub fn force(&self, alpha: f64) -> f64 {
        alpha * (self.c1 + self.c3 * alpha * alpha)
    }

    /// Largest `|fit − target|` over `n` uniform samples of `[−ᾱ, ᾱ]`.
    pub fn max_residual(&self, target: impl Fn(f64) -> f64, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let a = self.alpha_bar * (2.0 * i as f64 / (n - 1) as f64 - 1.0);
                (self.force(a) - target(a)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Odd cubic approximation `(c1, c3)` of an odd target on `[−ᾱ, ᾱ]`.
pub fn fit_cubic(target: impl Fn(f64) -> f64, alpha_bar: f64, method: FitMethod) -> Result<(f64, f64), TireError> {
    if !(alpha_bar > 0.0 && alpha_bar.is_finite()) {
        return Err(TireError::Range(alpha_bar));
    }
    // work in s = α/ᾱ
    let g = |s: f64| target(s * alpha_bar);
    let (a, b) = match method {
        FitMethod::LeastSquares => least_squares(g),
        FitMethod::Minimax => minimax(g),
    };
    Ok((a / alpha_bar, b / alpha_bar.powi(3)))
}

fn least_squares(g: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = 1001;
    let (mut s11, mut s13, mut s33, mut y1, mut y3) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let s = 2.0 * i as f64 / (n - 1) as f64 - 1.0;
        let (p1, p3) = (s, s * s * s);
        let y = g(s);
        s11 += p1 * p1;
        s13 += p1 * p3;
        s33 += p3 * p3;
        y1 += p1 * y;
        y3 += p3 * y;
    }
    let det = s11 * s33 - s13 * s13;
    ((y1 * s33 - y3 * s13) / det, (s11 * y3 - s13 * y1) / det)
}

/// Discrete Remez exchange on `(0, 1]`; oddness covers `[−1, 0)`.
fn minimax(g: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = 2001;
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let y: Vec<f64> = grid.iter().map(|&s| g(s)).collect();
    let mut refs = [n / 3 - 1, 2 * n / 3 - 1, n - 1];
    let mut coef = (0.0, 0.0);
    for _ in 0..200 {
        let rows: Vec<[f64; 4]> = refs
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let s = grid[i];
                [s, s * s * s, if k % 2 == 0 { 1.0 } else { -1.0 }, y[i]]
            })
            .collect();
        let Some([a, b, h]) = solve3(&rows) else { break };
        coef = (a, b);
        let err = |i: usize| y[i] - (a * grid[i] + b * grid[i].powi(3));
        let (imax, emax) = (0..n)
            .map(|i| (i, err(i)))
            .max_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
            .unwrap();
        if emax.abs() <= h.abs() * (1.0 + 1e-10) || refs.contains(&imax) {
            break;
        }
        let sign = |i: usize| err(i).signum();
        let sg = emax.signum();
        if imax < refs[0] {
            if sign(refs[0]) == sg {
                refs[0] = imax;
            } else {
                refs = [imax, refs[0], refs[1]];
            }
        } else if imax > refs[2] {
            if sign(refs[2]) == sg {
                refs[2] = imax;
            } else {
                refs = [refs[1], refs[2], imax];
            }
        } else {
            let k = if imax < refs[1] { 0 } else { 1 };
            if sign(refs[k]) == sg {
                refs[k] = imax;
            } else {
                refs[k + 1] = imax;
            }
        }
    }
    coef
}

/// Gaussian elimination with partial pivoting on an augmented 3×4 system.
fn solve3(rows: &[[f64; 4]]) -> Option<[f64; 3]> {
    let mut m: Vec<[f64; 4]> = rows.to_vec();
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            for k in c..4 {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let s: f64 = (c + 1..3).map(|k| m[c][k] * x[k]).sum();
        x[c] = (m[c][3] - s) / m[c][c];
    }
    Some(x)
}
