use std::collections::{BTreeMap, BTreeSet};

use sosroa_poly::{monomials_up_to, Monomial, Polynomial, VarSet};
use sosroa_sdp::{
    Constraint, PsdEntry, SdpProblem, SdpSolution, SdpSolver, SdpStatus, SymMatrix,
};

use crate::basis::{basis_for_support, Parity};
use crate::{DecisionVar, LinExpr, PolyExpr, SosError};

/// Largest accepted coefficient mismatch between an asserted polynomial and
/// its Gram reconstruction, relative to `max(1, max |coefficient|)`.
pub const GRAM_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SosOptions {
    /// Newton-polytope style basis reduction.
    pub prune: bool,
    /// Split Gram matrices of even polynomials into even and odd blocks.
    pub split_parity: bool,
}

impl Default for SosOptions {
    fn default() -> Self {
        Self {
            prune: true,
            split_parity: true,
        }
    }
}

/// Polynomial unknown: one free coefficient per monomial.
#[derive(Clone, Debug)]
pub struct PolyVar {
    vars: VarSet,
    coeffs: Vec<(Monomial, usize)>,
}

impl PolyVar {
    pub fn expr(&self) -> PolyExpr {
        let mut e = PolyExpr::zero(&self.vars);
        for &(m, v) in &self.coeffs {
            e.add_lin(m, &LinExpr::var(DecisionVar::Free(v)), 1.0);
        }
        e
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.coeffs.iter().map(|(m, _)| m)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarVar(usize);

impl ScalarVar {
    pub fn lin(&self) -> LinExpr {
        LinExpr::var(DecisionVar::Free(self.0))
    }
}

/// Symmetric matrix unknown constrained positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixVar {
    block: usize,
    n: usize,
}

impl MatrixVar {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> LinExpr {
        let (row, col) = if i <= j { (i, j) } else { (j, i) };
        LinExpr::var(DecisionVar::Psd {
            block: self.block,
            row,
            col,
        })
    }

    pub fn trace(&self) -> LinExpr {
        let mut t = LinExpr::zero();
        for i in 0..self.n {
            t.add_scaled(&self.entry(i, i), 1.0);
        }
        t
    }

    /// `xᵀ P x` over the given variables (which must number `dim()`).
    pub fn quadratic_form(&self, vars: &VarSet) -> PolyExpr {
        assert_eq!(vars.len(), self.n, "dimension mismatch");
        let mut e = PolyExpr::zero(vars);
        for i in 0..self.n {
            for j in i..self.n {
                let m = Monomial::var(i).mul(&Monomial::var(j));
                e.add_lin(m, &self.entry(i, j), if i == j { 1.0 } else { 2.0 });
            }
        }
        e
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GramHandle(usize);

#[derive(Clone, Debug)]
struct GramRecord {
    expr: PolyExpr,
    blocks: Vec<(usize, Vec<Monomial>)>,
}

/// Declarative SOS program over one variable set.
#[derive(Clone, Debug)]
pub struct SosProgram {
    vars: VarSet,
    options: SosOptions,
    sdp: SdpProblem,
    zero_vars: BTreeSet<usize>,
    grams: Vec<GramRecord>,
    objective: LinExpr,
}

impl SosProgram {
    pub fn new(vars: &VarSet) -> Self {
        Self::with_options(vars, SosOptions::default())
    }

    pub fn with_options(vars: &VarSet, options: SosOptions) -> Self {
        Self {
            vars: vars.clone(),
            options,
            sdp: SdpProblem::new(),
            zero_vars: BTreeSet::new(),
            grams: Vec::new(),
            objective: LinExpr::zero(),
        }
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    /// Polynomial unknown with all monomials of degree in
    /// `min_degree..=max_degree`.
    pub fn new_poly(&mut self, min_degree: u32, max_degree: u32) -> PolyVar {
        let monos = if min_degree <= max_degree {
            monomials_up_to(self.vars.len(), min_degree, max_degree)
        } else {
            Vec::new()
        };
        let first = self.sdp.add_free(monos.len());
        PolyVar {
            vars: self.vars.clone(),
            coeffs: monos.into_iter().enumerate().map(|(k, m)| (m, first + k)).collect(),
        }
    }

    pub fn new_scalar(&mut self) -> ScalarVar {
        ScalarVar(self.sdp.add_free(1))
    }

    pub fn new_psd_matrix(&mut self, n: usize) -> MatrixVar {
        MatrixVar {
            block: self.sdp.add_psd_block(n),
            n,
        }
    }

    /// Forces every odd-degree coefficient of `p` to zero.
    pub fn restrict_parity(&mut self, p: &PolyVar, parity: Parity) {
        if parity == Parity::None {
            return;
        }
        for &(m, v) in &p.coeffs {
            if !m.is_even() {
                self.add_equality(&LinExpr::var(DecisionVar::Free(v)), Vec::new(), 0.0);
            }
        }
    }

    /// Coefficients of `p` not forced to zero.
    pub fn surviving_coefficients(&self, p: &PolyVar) -> usize {
        p.coeffs
            .iter()
            .filter(|(_, v)| !self.zero_vars.contains(v))
            .count()
    }

    /// `lin + Σ gram = rhs`
    fn add_equality(&mut self, lin: &LinExpr, gram: Vec<PsdEntry>, rhs: f64) {
        let mut free = Vec::new();
        let mut psd = gram;
        for (&v, &c) in lin.terms() {
            match v {
                DecisionVar::Free(i) => free.push((i, c)),
                DecisionVar::Psd { block, row, col } => psd.push(PsdEntry::new(block, row, col, c)),
            }
        }
        let rhs = rhs - lin.constant_value();
        if psd.is_empty() && free.len() == 1 && rhs == 0.0 {
            self.zero_vars.insert(free[0].0);
        }
        self.sdp.add_constraint(Constraint { free, psd, rhs });
    }

    /// Linear equality `lin = rhs` between decision variables.
    pub fn assert_equal(&mut self, lin: &LinExpr, rhs: f64) {
        self.add_equality(lin, Vec::new(), rhs);
    }

    /// `p(point) = value`, where `value` may itself be affine in unknowns.
    pub fn assert_point_value(&mut self, p: &PolyExpr, point: &[f64], value: &LinExpr) -> Result<(), SosError> {
        if point.len() != self.vars.len() {
            return Err(SosError::PointDimension {
                expected: self.vars.len(),
                got: point.len(),
            });
        }
        let lhs = &p.evaluate_at(point) - value;
        self.add_equality(&lhs, Vec::new(), 0.0);
        Ok(())
    }

    fn live(&self, l: &LinExpr) -> bool {
        l.constant_value() != 0.0
            || l.terms().any(|(v, _)| match v {
                DecisionVar::Free(i) => !self.zero_vars.contains(i),
                DecisionVar::Psd { .. } => true,
            })
    }

    /// `p ∈ Σ[x]` through a Gram matrix representation.
    pub fn assert_sos(&mut self, p: &PolyExpr) -> Result<GramHandle, SosError> {
        if *p.vars() != self.vars {
            return Err(SosError::VarSetMismatch);
        }
        let support: Vec<Monomial> = p
            .terms()
            .filter(|(_, l)| self.live(l))
            .map(|(m, _)| *m)
            .collect();
        let degree = support.iter().map(Monomial::degree).max().unwrap_or(0);
        if degree % 2 == 1 {
            return Err(SosError::OddDegree { degree });
        }
        let nvars = self.vars.len();
        let basis = basis_for_support(nvars, &support, self.options.prune);
        let parts: Vec<Vec<Monomial>> = if self.options.split_parity && support.iter().all(Monomial::is_even) {
            let (even, odd): (Vec<_>, Vec<_>) = basis.into_iter().partition(Monomial::is_even);
            vec![even, odd]
        } else {
            vec![basis]
        };
        let mut blocks = Vec::new();
        let mut products: BTreeMap<Monomial, Vec<PsdEntry>> = BTreeMap::new();
        for part in parts.into_iter().filter(|b| !b.is_empty()) {
            let block = self.sdp.add_psd_block(part.len());
            for k in 0..part.len() {
                for l in k..part.len() {
                    let coef = if k == l { 1.0 } else { 2.0 };
                    products
                        .entry(part[k].mul(&part[l]))
                        .or_default()
                        .push(PsdEntry::new(block, k, l, coef));
                }
            }
            blocks.push((block, part));
        }
        let mut monos: BTreeSet<Monomial> = products.keys().copied().collect();
        monos.extend(p.terms().map(|(m, _)| *m));
        for m in monos {
            let coef = p.coefficient(&m);
            let gram = products.remove(&m).unwrap_or_default();
            self.add_equality(&(-&coef), gram, 0.0);
        }
        self.grams.push(GramRecord {
            expr: p.clone(),
            blocks,
        });
        Ok(GramHandle(self.grams.len() - 1))
    }

    /// `p − ε‖x‖² ∈ Σ[x]`
    pub fn assert_strict_sos(&mut self, p: &PolyExpr, epsilon: f64) -> Result<GramHandle, SosError> {
        if !(epsilon > 0.0) {
            return Err(SosError::NonPositiveEpsilon(epsilon));
        }
        let shifted = p - &Polynomial::norm_squared(&self.vars).scale(epsilon);
        self.assert_sos(&shifted)
    }

    /// Sets the linear objective to minimize.
    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    /// Scalar unknowns that survive presolve: free coefficients not forced
    /// to zero plus the upper triangle of every PSD block.
    pub fn n_decision_variables(&self) -> usize {
        self.sdp.n_variables() - self.zero_vars.len()
    }

    /// Compiled SDP with the objective attached.
    pub fn to_sdp(&self) -> SdpProblem {
        let mut sdp = self.sdp.clone();
        for (&v, &c) in self.objective.terms() {
            match v {
                DecisionVar::Free(i) => sdp.add_objective_free(i, c),
                DecisionVar::Psd { block, row, col } => {
                    sdp.add_objective_psd(PsdEntry::new(block, row, col, c))
                }
            }
        }
        sdp
    }

    pub fn solve(&self, solver: &dyn SdpSolver) -> Result<SosSolution, SosError> {
        let sdp = self.to_sdp();
        let raw = solver.solve(&sdp)?;
        let mut sol = SosSolution {
            vars: self.vars.clone(),
            status: raw.status,
            objective: raw.primal_objective + self.objective.constant_value(),
            message: raw.message.clone(),
            max_gram_residual: f64::NAN,
            grams: self.grams.iter().map(|g| g.blocks.clone()).collect(),
            raw,
        };
        if sol.status == SdpStatus::Optimal {
            let mut worst = 0.0f64;
            for (k, g) in self.grams.iter().enumerate() {
                let p = sol.expr(&g.expr);
                let q = sol.gram_polynomial(GramHandle(k));
                let scale = p.max_abs_coefficient().max(1.0);
                worst = worst.max(p.max_coefficient_distance(&q) / scale);
            }
            sol.max_gram_residual = worst;
            if worst > GRAM_RESIDUAL_TOL {
                sol.status = SdpStatus::NumericalFailure;
                sol.message = format!("Gram residual {worst:.3e} exceeds tolerance ({})", sol.message);
            }
        }
        Ok(sol)
    }
}

#[derive(Clone, Debug)]
pub struct SosSolution {
    vars: VarSet,
    pub status: SdpStatus,
    pub objective: f64,
    pub message: String,
    /// Worst relative coefficient mismatch over all SOS assertions; `NaN`
    /// unless the solver reported an optimum.
    pub max_gram_residual: f64,
    grams: Vec<Vec<(usize, Vec<Monomial>)>>,
    raw: SdpSolution,
}

impl SosSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    pub fn raw(&self) -> &SdpSolution {
        &self.raw
    }

    pub fn var_value(&self, v: DecisionVar) -> f64 {
        match v {
            DecisionVar::Free(i) => self.raw.free[i],
            DecisionVar::Psd { block, row, col } => self.raw.blocks[block].get(row, col),
        }
    }

    pub fn value(&self, lin: &LinExpr) -> f64 {
        lin.evaluate(|v| self.var_value(v))
    }

    pub fn scalar(&self, s: ScalarVar) -> f64 {
        self.raw.free[s.0]
    }

    pub fn poly(&self, p: &PolyVar) -> Polynomial<f64> {
        Polynomial::from_monomial_map(&p.vars, p.coeffs.iter().map(|&(m, v)| (m, self.raw.free[v])))
    }

    pub fn expr(&self, e: &PolyExpr) -> Polynomial<f64> {
        e.to_polynomial(|v| self.var_value(v))
    }

    pub fn matrix(&self, m: MatrixVar) -> SymMatrix {
        self.raw.blocks[m.block].clone()
    }

    /// Basis and Gram matrix of every block of one assertion.
    pub fn gram(&self, h: GramHandle) -> Vec<(Vec<Monomial>, SymMatrix)> {
        self.grams[h.0]
            .iter()
            .map(|(b, basis)| (basis.clone(), self.raw.blocks[*b].clone()))
            .collect()
    }

    /// `Σ_blocks z(x)ᵀ Q z(x)`
    pub fn gram_polynomial(&self, h: GramHandle) -> Polynomial<f64> {
        let mut out = Polynomial::zero(&self.vars);
        for (basis, q) in self.gram(h) {
            for k in 0..basis.len() {
                for l in 0..basis.len() {
                    out.add_term(basis[k].mul(&basis[l]), q.get(k, l));
                }
            }
        }
        out
    }
}
