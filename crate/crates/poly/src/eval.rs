use crate::{Coefficient, Polynomial};

/// Flattened polynomial for repeated float evaluation in hot loops.
#[derive(Clone, Debug)]
pub struct PolyEvaluator {
    nvars: usize,
    max_exp: Vec<usize>,
    coeffs: Vec<f64>,
    exps: Vec<u8>,
}

impl PolyEvaluator {
    pub fn new<C: Coefficient>(p: &Polynomial<C>) -> Self {
        let nvars = p.nvars();
        let mut max_exp = vec![0usize; nvars];
        let mut coeffs = Vec::with_capacity(p.len());
        let mut exps = Vec::with_capacity(p.len() * nvars);
        for (m, c) in p.terms() {
            coeffs.push(c.to_f64());
            for (i, &e) in m.exponents(nvars).iter().enumerate() {
                max_exp[i] = max_exp[i].max(e as usize);
                exps.push(e);
            }
        }
        Self {
            nvars,
            max_exp,
            coeffs,
            exps,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Panics if `point.len()` differs from the variable count.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars, "point dimension");
        let powers = self.powers(point);
        self.evaluate_with(&powers)
    }

    /// Per-variable power tables for [`evaluate_with`](Self::evaluate_with).
    pub fn powers(&self, point: &[f64]) -> Vec<Vec<f64>> {
        point
            .iter()
            .zip(&self.max_exp)
            .map(|(&x, &k)| {
                let mut row = Vec::with_capacity(k + 1);
                let mut acc = 1.0;
                row.push(acc);
                for _ in 0..k {
                    acc *= x;
                    row.push(acc);
                }
                row
            })
            .collect()
    }

    pub fn evaluate_with(&self, powers: &[Vec<f64>]) -> f64 {
        let mut sum = 0.0;
        for (t, c) in self.coeffs.iter().enumerate() {
            let mut term = *c;
            let exps = &self.exps[t * self.nvars..(t + 1) * self.nvars];
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term *= powers[i][e as usize];
                }
            }
            sum += term;
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::VarSet;

    #[test]
    fn matches_direct_evaluation() {
        let vars = VarSet::new(["x", "y", "z"]).unwrap();
        let p = Polynomial::<f64>::from_terms(
            &vars,
            [
                (1.5, vec![2, 0, 1]),
                (-0.25, vec![0, 3, 0]),
                (2.0, vec![0, 0, 0]),
                (4.0, vec![1, 1, 1]),
            ],
        );
        let e = PolyEvaluator::new(&p);
        for point in [[0.3, -1.2, 2.0], [0.0, 0.0, 0.0], [1.0, 2.0, -3.0]] {
            let direct = p.evaluate_f64(&point).unwrap();
            assert!((e.evaluate(&point) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }
}
