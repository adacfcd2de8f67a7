use crate::{Coefficient, Monomial, PolyError, Polynomial, VarSet};

/// Polynomial vector field `ẋ = f(x)`, one component per state variable.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField<C: Coefficient = f64> {
    vars: VarSet,
    components: Vec<Polynomial<C>>,
}

impl<C: Coefficient> PolyVectorField<C> {
    pub fn new(vars: &VarSet, components: Vec<Polynomial<C>>) -> Result<Self, PolyError> {
        if components.len() != vars.len() {
            return Err(PolyError::DimensionMismatch {
                expected: vars.len(),
                got: components.len(),
            });
        }
        for c in &components {
            vars.ensure_same(c.vars())?;
        }
        Ok(Self {
            vars: vars.clone(),
            components,
        })
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial<C>] {
        &self.components
    }

    pub fn degree(&self) -> u32 {
        self.components
            .iter()
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, point: &[C]) -> Result<Vec<C>, PolyError> {
        self.components.iter().map(|c| c.evaluate(point)).collect()
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.components
            .iter()
            .map(|c| c.evaluate_f64(point))
            .collect()
    }

    /// True when every component is odd, i.e. `f(−x) = −f(x)`.
    pub fn is_odd(&self) -> bool {
        self.components.iter().all(Polynomial::is_odd)
    }

    /// Jacobian at the origin: `A[i][j]` is the coefficient of `x_j` in `f_i`.
    pub fn linear_part(&self) -> Result<Vec<Vec<C>>, PolyError> {
        let n = self.dim();
        self.components
            .iter()
            .enumerate()
            .map(|(i, fi)| {
                if !fi.coefficient(&Monomial::ONE).is_zero() {
                    return Err(PolyError::NonZeroConstant { component: i });
                }
                Ok((0..n).map(|j| fi.coefficient(&Monomial::var(j))).collect())
            })
            .collect()
    }

    /// The linear field `x ↦ A x` for this field's [`linear_part`](Self::linear_part).
    pub fn linearization(&self) -> Result<Self, PolyError> {
        let a = self.linear_part()?;
        let components = a
            .iter()
            .map(|row| {
                Polynomial::from_monomial_map(
                    &self.vars,
                    row.iter()
                        .enumerate()
                        .map(|(j, c)| (Monomial::var(j), c.clone())),
                )
            })
            .collect();
        Self::new(&self.vars, components)
    }

    pub fn to_f64(&self) -> PolyVectorField<f64> {
        PolyVectorField {
            vars: self.vars.clone(),
            components: self.components.iter().map(Polynomial::to_f64).collect(),
        }
    }
}
