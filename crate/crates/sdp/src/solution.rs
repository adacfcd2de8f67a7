use faer::{Mat, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Optimal,
    /// No `(x, X)` satisfies the constraints; `y` holds a Farkas-type ray.
    PrimalInfeasible,
    /// The objective is unbounded below, or the dual has no feasible point.
    DualInfeasible,
    NumericalFailure,
}

impl SdpStatus {
    pub fn is_optimal(self) -> bool {
        self == SdpStatus::Optimal
    }

    pub fn is_infeasible(self) -> bool {
        matches!(self, SdpStatus::PrimalInfeasible | SdpStatus::DualInfeasible)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::PrimalInfeasible => "infeasible",
            SdpStatus::DualInfeasible => "dual_infeasible",
            SdpStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub(crate) fn from_mat(m: &Mat<f64>) -> Self {
        let n = m.nrows();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let m = Mat::from_fn(self.n, self.n, |i, j| self.get(i, j));
        m.self_adjoint_eigenvalues(Side::Lower)
            .unwrap_or_else(|_| vec![f64::NAN; self.n])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub free: Vec<f64>,
    pub blocks: Vec<SymMatrix>,
    /// Equality multipliers. Rows eliminated during presolve report 0.
    pub dual: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub message: String,
}

impl SdpSolution {
    pub(crate) fn failed(status: SdpStatus, message: impl Into<String>, n_free: usize, sizes: &[usize], m: usize) -> Self {
        Self {
            status,
            free: vec![0.0; n_free],
            blocks: sizes.iter().map(|&n| SymMatrix::zeros(n)).collect(),
            dual: vec![0.0; m],
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            iterations: 0,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            gap: f64::NAN,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative primal and dual residual bound for `Optimal`.
    pub feasibility_tol: f64,
    /// Relative duality gap bound for `Optimal`.
    pub gap_tol: f64,
    pub infeasibility_tol: f64,
    /// Accepted residual level when progress stalls before reaching the
    /// tolerances above.
    pub reduced_tol: f64,
    pub step_fraction: f64,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 120,
            feasibility_tol: 1e-8,
            gap_tol: 1e-8,
            infeasibility_tol: 1e-8,
            reduced_tol: 1e-6,
            step_fraction: 0.99,
            verbose: false,
        }
    }
}
