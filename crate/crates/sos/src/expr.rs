use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use sosroa_poly::{Monomial, PolyVectorField, Polynomial, VarSet};

/// Scalar decision variable of the underlying SDP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DecisionVar {
    Free(usize),
    /// Entry `(row, col)` of a PSD matrix variable, `row ≤ col`.
    Psd { block: usize, row: usize, col: usize },
}

/// Affine function of decision variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    constant: f64,
    terms: BTreeMap<DecisionVar, f64>,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(v: DecisionVar) -> Self {
        let mut e = Self::zero();
        e.add_term(v, 1.0);
        e
    }

    pub fn add_term(&mut self, v: DecisionVar, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let slot = self.terms.entry(v).or_insert(0.0);
        *slot += coef;
        if *slot == 0.0 {
            self.terms.remove(&v);
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// `self += factor · other`
    pub fn add_scaled(&mut self, other: &LinExpr, factor: f64) {
        if factor == 0.0 {
            return;
        }
        self.constant += factor * other.constant;
        for (&v, &c) in &other.terms {
            self.add_term(v, factor * c);
        }
    }

    pub fn constant_value(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DecisionVar, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, factor);
        out
    }

    pub fn evaluate(&self, value: impl Fn(DecisionVar) -> f64) -> f64 {
        self.constant + self.terms.iter().map(|(&v, &c)| c * value(v)).sum::<f64>()
    }
}

impl Add<&LinExpr> for &LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, 1.0);
        out
    }
}

impl Sub<&LinExpr> for &LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, -1.0);
        out
    }
}

impl Mul<f64> for &LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scale(rhs)
    }
}

impl Neg for &LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(-1.0)
    }
}

/// Polynomial whose coefficients are affine in the decision variables.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyExpr {
    vars: VarSet,
    terms: BTreeMap<Monomial, LinExpr>,
}

impl PolyExpr {
    pub fn zero(vars: &VarSet) -> Self {
        Self {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_poly(p: &Polynomial<f64>) -> Self {
        let mut out = Self::zero(p.vars());
        for (m, &c) in p.terms() {
            out.add_lin(*m, &LinExpr::constant(c), 1.0);
        }
        out
    }

    /// The constant polynomial whose value is `lin`.
    pub fn from_lin(vars: &VarSet, lin: &LinExpr) -> Self {
        let mut out = Self::zero(vars);
        out.add_lin(Monomial::ONE, lin, 1.0);
        out
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &LinExpr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> LinExpr {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// `self += factor · lin · m`
    pub fn add_lin(&mut self, m: Monomial, lin: &LinExpr, factor: f64) {
        let slot = self.terms.entry(m).or_default();
        slot.add_scaled(lin, factor);
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = Self::zero(&self.vars);
        for (m, l) in &self.terms {
            out.add_lin(*m, l, factor);
        }
        out
    }

    /// Product with a known polynomial. Panics on a variable-set mismatch.
    pub fn mul_poly(&self, p: &Polynomial<f64>) -> Self {
        assert!(self.vars == *p.vars(), "variable set mismatch");
        let mut out = Self::zero(&self.vars);
        for (m1, l) in &self.terms {
            for (m2, &c) in p.terms() {
                out.add_lin(m1.mul(m2), l, c);
            }
        }
        out
    }

    /// `∇p · f`, affine in the same decision variables as `p`.
    pub fn lie_derivative(&self, field: &PolyVectorField<f64>) -> Self {
        assert!(self.vars == *field.vars(), "variable set mismatch");
        let mut out = Self::zero(&self.vars);
        for (m, l) in &self.terms {
            for (i, fi) in field.components().iter().enumerate() {
                let Some((e, dm)) = m.derivative(i) else { continue };
                for (fm, &c) in fi.terms() {
                    out.add_lin(dm.mul(fm), l, e as f64 * c);
                }
            }
        }
        out
    }

    /// Evaluates every coefficient.
    pub fn to_polynomial(&self, value: impl Fn(DecisionVar) -> f64) -> Polynomial<f64> {
        Polynomial::from_monomial_map(
            &self.vars,
            self.terms.iter().map(|(m, l)| (*m, l.evaluate(&value))),
        )
    }

    /// Affine expression for the value at `point`.
    pub fn evaluate_at(&self, point: &[f64]) -> LinExpr {
        let mut out = LinExpr::zero();
        for (m, l) in &self.terms {
            out.add_scaled(l, m.evaluate(point));
        }
        out
    }
}

impl Add<&PolyExpr> for &PolyExpr {
    type Output = PolyExpr;
    fn add(self, rhs: &PolyExpr) -> PolyExpr {
        assert!(self.vars == rhs.vars, "variable set mismatch");
        let mut out = self.clone();
        for (m, l) in &rhs.terms {
            out.add_lin(*m, l, 1.0);
        }
        out
    }
}

impl Sub<&PolyExpr> for &PolyExpr {
    type Output = PolyExpr;
    fn sub(self, rhs: &PolyExpr) -> PolyExpr {
        assert!(self.vars == rhs.vars, "variable set mismatch");
        let mut out = self.clone();
        for (m, l) in &rhs.terms {
            out.add_lin(*m, l, -1.0);
        }
        out
    }
}

impl Add<&Polynomial<f64>> for &PolyExpr {
    type Output = PolyExpr;
    fn add(self, rhs: &Polynomial<f64>) -> PolyExpr {
        self + &PolyExpr::from_poly(rhs)
    }
}

impl Sub<&Polynomial<f64>> for &PolyExpr {
    type Output = PolyExpr;
    fn sub(self, rhs: &Polynomial<f64>) -> PolyExpr {
        self - &PolyExpr::from_poly(rhs)
    }
}

impl Mul<&Polynomial<f64>> for &PolyExpr {
    type Output = PolyExpr;
    fn mul(self, rhs: &Polynomial<f64>) -> PolyExpr {
        self.mul_poly(rhs)
    }
}

impl Neg for &PolyExpr {
    type Output = PolyExpr;
    fn neg(self) -> PolyExpr {
        self.scale(-1.0)
    }
}
