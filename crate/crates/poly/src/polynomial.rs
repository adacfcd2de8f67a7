use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::{Coefficient, Monomial, PolyError, PolyVectorField, VarSet};

/// Sparse polynomial in canonical form: no stored zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C: Coefficient = f64> {
    vars: VarSet,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Polynomial<C> {
    pub fn zero(vars: &VarSet) -> Self {
        Self {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &VarSet, value: C) -> Self {
        Self::monomial(vars, Monomial::ONE, value)
    }

    pub fn monomial(vars: &VarSet, monomial: Monomial, coeff: C) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(monomial, coeff);
        p
    }

    /// The polynomial `x_index`.
    pub fn var(vars: &VarSet, index: usize) -> Self {
        assert!(index < vars.len(), "variable index out of range");
        Self::monomial(vars, Monomial::var(index), C::one())
    }

    /// Builds a polynomial from `(coefficient, exponent vector)` pairs,
    /// collecting repeated monomials.
    pub fn from_terms<I>(vars: &VarSet, terms: I) -> Self
    where
        I: IntoIterator<Item = (C, Vec<u32>)>,
    {
        let mut p = Self::zero(vars);
        for (c, exps) in terms {
            assert_eq!(exps.len(), vars.len(), "exponent vector length");
            p.add_term(Monomial::new(&exps), c);
        }
        p
    }

    pub fn from_monomial_map(vars: &VarSet, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Sum of squares of all variables, `‖x‖²`.
    pub fn norm_squared(vars: &VarSet) -> Self {
        let mut p = Self::zero(vars);
        for i in 0..vars.len() {
            p.add_term(Monomial::var(i).mul(&Monomial::var(i)), C::one());
        }
        p
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, monomial: &Monomial) -> C {
        self.terms.get(monomial).cloned().unwrap_or_else(C::zero)
    }

    /// Maximum total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Minimum total degree over stored terms; 0 for the zero polynomial.
    pub fn min_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).min().unwrap_or(0)
    }

    /// True when every stored term has even total degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(Monomial::is_even)
    }

    /// True when every stored term has odd total degree.
    pub fn is_odd(&self) -> bool {
        self.terms.keys().all(|m| !m.is_even())
    }

    pub fn add_term(&mut self, monomial: Monomial, coeff: C) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(monomial) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.vars.ensure_same(&other.vars)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.vars.ensure_same(&other.vars)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.vars.ensure_same(&other.vars)?;
        let mut out = Self::zero(&self.vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: C) -> Self {
        if factor.is_zero() {
            return Self::zero(&self.vars);
        }
        Self {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*m, c.clone() * factor.clone()))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// `p / c`.
    pub fn scale_down(&self, divisor: C) -> Result<Self, PolyError> {
        if divisor.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        Ok(self.scale(C::one() / divisor))
    }

    pub fn pow(&self, exponent: u32) -> Self {
        let mut out = Self::constant(&self.vars, C::one());
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    pub fn evaluate(&self, point: &[C]) -> Result<C, PolyError> {
        self.check_point(point.len())?;
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, x) in point.iter().enumerate() {
                for _ in 0..m.exponent(i) {
                    term = term * x.clone();
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Float evaluation regardless of coefficient type.
    pub fn evaluate_f64(&self, point: &[f64]) -> Result<f64, PolyError> {
        self.check_point(point.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| c.to_f64() * m.evaluate(point))
            .sum())
    }

    fn check_point(&self, len: usize) -> Result<(), PolyError> {
        if len == self.vars.len() {
            Ok(())
        } else {
            Err(PolyError::DimensionMismatch {
                expected: self.vars.len(),
                got: len,
            })
        }
    }

    pub fn partial_derivative(&self, index: usize) -> Self {
        let mut out = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            if let Some((e, dm)) = m.derivative(index) {
                out.add_term(dm, c.clone() * C::from_i64(i64::from(e)));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars())
            .map(|i| self.partial_derivative(i))
            .collect()
    }

    /// `∇p · f`.
    pub fn lie_derivative(&self, field: &PolyVectorField<C>) -> Result<Self, PolyError> {
        self.vars.ensure_same(field.vars())?;
        let mut out = Self::zero(&self.vars);
        for (i, fi) in field.components().iter().enumerate() {
            let di = self.partial_derivative(i);
            if di.is_zero() {
                continue;
            }
            out = out.checked_add(&di.checked_mul(fi)?)?;
        }
        Ok(out)
    }

    /// Replaces each variable by a polynomial. `substitutions[i]` stands in
    /// for variable `i` and may live in a different variable set; all of
    /// them must share one.
    pub fn substitute(&self, substitutions: &[Self]) -> Result<Self, PolyError> {
        self.check_point(substitutions.len())?;
        let target = match substitutions.first() {
            Some(s) => s.vars.clone(),
            None => self.vars.clone(),
        };
        for s in substitutions {
            target.ensure_same(&s.vars)?;
        }
        // Powers are cached per variable to avoid repeated expansion.
        let mut powers: Vec<Vec<Self>> = substitutions
            .iter()
            .map(|_| vec![Self::constant(&target, C::one())])
            .collect();
        let mut out = Self::zero(&target);
        for (m, c) in &self.terms {
            let mut term = Self::constant(&target, c.clone());
            for (i, s) in substitutions.iter().enumerate() {
                let e = m.exponent(i) as usize;
                while powers[i].len() <= e {
                    let next = &powers[i][powers[i].len() - 1] * s;
                    powers[i].push(next);
                }
                if e > 0 {
                    term = &term * &powers[i][e];
                }
            }
            out = out.checked_add(&term)?;
        }
        Ok(out)
    }

    /// `p(-x)`.
    pub fn reflect(&self) -> Self {
        Self {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    if m.is_even() {
                        (*m, c.clone())
                    } else {
                        (*m, -c.clone())
                    }
                })
                .collect(),
        }
    }

    /// Terms of odd total degree only.
    pub fn odd_part(&self) -> Self {
        self.filter_terms(|m| !m.is_even())
    }

    /// Terms of even total degree only.
    pub fn even_part(&self) -> Self {
        self.filter_terms(Monomial::is_even)
    }

    /// Terms of exactly the given total degree.
    pub fn homogeneous_part(&self, degree: u32) -> Self {
        self.filter_terms(|m| m.degree() == degree)
    }

    fn filter_terms(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        Self {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_monomial_map(&self.vars, self.terms.iter().map(|(m, c)| (*m, f(c))))
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map_coefficients(Coefficient::to_f64)
    }
}

impl Polynomial<f64> {
    /// Drops terms with `|c| <= tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Self {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(m, c)| (*m, *c))
                .collect(),
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// `‖coeffs(self) − coeffs(other)‖∞`.
    pub fn max_coefficient_distance(&self, other: &Self) -> f64 {
        (self - other).max_abs_coefficient()
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl<C: Coefficient> $trait<&Polynomial<C>> for &Polynomial<C> {
            type Output = Polynomial<C>;

            /// Panics when the operands live in different variable sets.
            fn $method(self, rhs: &Polynomial<C>) -> Polynomial<C> {
                self.$checked(rhs).expect("polynomial operands must share a VarSet")
            }
        }

        impl<C: Coefficient> $trait<Polynomial<C>> for Polynomial<C> {
            type Output = Polynomial<C>;

            fn $method(self, rhs: Polynomial<C>) -> Polynomial<C> {
                (&self).$method(&rhs)
            }
        }

        impl<C: Coefficient> $trait<&Polynomial<C>> for Polynomial<C> {
            type Output = Polynomial<C>;

            fn $method(self, rhs: &Polynomial<C>) -> Polynomial<C> {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl<C: Coefficient> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;

    fn neg(self) -> Polynomial<C> {
        self.scale(-C::one())
    }
}

impl<C: Coefficient> Neg for Polynomial<C> {
    type Output = Polynomial<C>;

    fn neg(self) -> Polynomial<C> {
        -&self
    }
}
