use std::collections::HashSet;

use sosroa_poly::{monomials_up_to, Monomial};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    #[default]
    None,
    Even,
}

/// All monomials of total degree `≤ half_degree`, graded-lex ordered.
///
/// With [`Parity::Even`] the list is split into its even-degree and
/// odd-degree parts, in that order; an even polynomial always has a Gram
/// matrix that is block diagonal over the two parts.
pub fn gram_basis(nvars: usize, half_degree: u32, parity: Parity) -> Vec<Vec<Monomial>> {
    let all = monomials_up_to(nvars, 0, half_degree);
    match parity {
        Parity::None => vec![all],
        Parity::Even => {
            let (even, odd): (Vec<_>, Vec<_>) = all.into_iter().partition(Monomial::is_even);
            vec![even, odd]
        }
    }
}

/// Basis candidates for a polynomial with the given support.
///
/// Degrees are bounded by half the minimum and maximum total degree. With
/// `prune`, every per-variable exponent is also bounded by half the
/// per-variable range of the support, and monomials whose square cannot
/// occur in the support are removed until the set is stable.
pub(crate) fn basis_for_support(nvars: usize, support: &[Monomial], prune: bool) -> Vec<Monomial> {
    if support.is_empty() {
        return Vec::new();
    }
    let maxdeg = support.iter().map(Monomial::degree).max().unwrap();
    let mindeg = support.iter().map(Monomial::degree).min().unwrap();
    let lo = mindeg.div_ceil(2);
    let hi = maxdeg / 2;
    let mut basis = monomials_up_to(nvars, lo, hi);
    if !prune {
        return basis;
    }
    let mut emax = vec![0u32; nvars];
    let mut emin = vec![u32::MAX; nvars];
    for m in support {
        for i in 0..nvars {
            emax[i] = emax[i].max(m.exponent(i));
            emin[i] = emin[i].min(m.exponent(i));
        }
    }
    basis.retain(|z| (0..nvars).all(|i| 2 * z.exponent(i) <= emax[i] && 2 * z.exponent(i) >= emin[i]));

    let support: HashSet<Monomial> = support.iter().copied().collect();
    loop {
        let set: HashSet<Monomial> = basis.iter().copied().collect();
        let before = basis.len();
        basis.retain(|z| {
            let sq = z.mul(z);
            if support.contains(&sq) {
                return true;
            }
            basis_pairs_to(&set, z, &sq)
        });
        if basis.len() == before {
            return basis;
        }
    }
}

/// True if `target = a·b` for two distinct basis members.
fn basis_pairs_to(set: &HashSet<Monomial>, z: &Monomial, target: &Monomial) -> bool {
    set.iter().any(|a| {
        a != z
            && target
                .div(a)
                .is_some_and(|b| b != *a && set.contains(&b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_basis_in_two_variables() {
        let b = gram_basis(2, 2, Parity::None);
        let expected: Vec<Monomial> = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
            .iter()
            .map(|e| Monomial::new(e))
            .collect();
        assert_eq!(b, vec![expected]);
    }

    #[test]
    fn constant_basis() {
        assert_eq!(gram_basis(1, 0, Parity::None), vec![vec![Monomial::ONE]]);
    }

    #[test]
    fn seven_variable_quadratic_basis_size() {
        assert_eq!(gram_basis(7, 2, Parity::None)[0].len(), 36);
        let split = gram_basis(7, 2, Parity::Even);
        assert_eq!(split[0].len(), 1 + 28);
        assert_eq!(split[1].len(), 7);
    }

    #[test]
    fn pruning_drops_unsupported_squares() {
        // x⁴y² + x²y⁴ − 3x²y² + 1: the half Newton polytope is
        // {1, xy, x²y, xy²}.
        let s: Vec<Monomial> = [[4, 2], [2, 4], [2, 2], [0, 0]]
            .iter()
            .map(|e| Monomial::new(e))
            .collect();
        let b = basis_for_support(2, &s, true);
        assert!(b.contains(&Monomial::new(&[1, 1])));
        assert!(!b.contains(&Monomial::new(&[3, 0])));
        assert!(!b.contains(&Monomial::new(&[2, 0])));
        assert!(b.len() <= 8);
    }

    #[test]
    fn degree_window_from_support() {
        let s = vec![Monomial::new(&[2, 0]), Monomial::new(&[0, 4])];
        let b = basis_for_support(2, &s, false);
        assert!(b.iter().all(|m| (1..=2).contains(&m.degree())));
    }
}
