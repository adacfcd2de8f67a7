use std::cmp::Ordering;

/// Largest number of state variables a [`crate::VarSet`] may hold.
pub const MAX_VARS: usize = 8;

/// Dense exponent vector. Unused trailing slots are always zero.
///
/// Ordering is graded lexicographic: lower total degree first; within a
/// degree, a larger exponent on an earlier variable comes first, so the
/// quadratic basis in `(x, y)` is `[1, x, y, x², xy, y²]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    exps: [u8; MAX_VARS],
}

impl Monomial {
    pub const ONE: Monomial = Monomial {
        exps: [0; MAX_VARS],
    };

    /// Panics if `exps` is longer than [`MAX_VARS`] or an exponent exceeds 255.
    pub fn new(exps: &[u32]) -> Self {
        assert!(exps.len() <= MAX_VARS, "too many exponents");
        let mut m = Self::ONE;
        for (slot, &e) in m.exps.iter_mut().zip(exps) {
            *slot = u8::try_from(e).expect("exponent exceeds 255");
        }
        m
    }

    pub fn var(index: usize) -> Self {
        let mut m = Self::ONE;
        m.exps[index] = 1;
        m
    }

    pub fn exponent(&self, index: usize) -> u32 {
        u32::from(self.exps[index])
    }

    pub fn exponents(&self, nvars: usize) -> &[u8] {
        &self.exps[..nvars]
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| u32::from(e)).sum()
    }

    pub fn is_even(&self) -> bool {
        self.degree() % 2 == 0
    }

    pub fn is_constant(&self) -> bool {
        self.exps == [0; MAX_VARS]
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = *self;
        for (a, b) in out.exps.iter_mut().zip(other.exps) {
            *a = a.checked_add(b).expect("exponent overflow");
        }
        out
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = *self;
        for (a, b) in out.exps.iter_mut().zip(other.exps) {
            *a = a.checked_sub(b)?;
        }
        Some(out)
    }

    /// Derivative with respect to variable `index`: `(exponent, monomial)`.
    pub fn derivative(&self, index: usize) -> Option<(u32, Monomial)> {
        let e = self.exps[index];
        if e == 0 {
            return None;
        }
        let mut out = *self;
        out.exps[index] -= 1;
        Some((u32::from(e), out))
    }

    pub fn with_exponent(&self, index: usize, e: u32) -> Monomial {
        let mut out = *self;
        out.exps[index] = u8::try_from(e).expect("exponent exceeds 255");
        out
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        point
            .iter()
            .zip(self.exps)
            .filter(|(_, e)| *e > 0)
            .map(|(x, e)| x.powi(i32::from(e)))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Debug for Monomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Monomial({:?})", self.exps)
    }
}

/// All monomials in `nvars` variables with total degree in
/// `min_degree..=max_degree`, in graded-lex order.
pub fn monomials_up_to(nvars: usize, min_degree: u32, max_degree: u32) -> Vec<Monomial> {
    assert!(nvars <= MAX_VARS, "too many variables");
    let mut out = Vec::new();
    for degree in min_degree..=max_degree {
        let mut exps = vec![0u32; nvars];
        push_degree(&mut out, &mut exps, 0, degree);
    }
    out
}

// Enumerates exponent vectors of exactly `remaining` total degree, earlier
// variables taking the largest share first (graded-lex order).
fn push_degree(out: &mut Vec<Monomial>, exps: &mut [u32], index: usize, remaining: u32) {
    if exps.is_empty() {
        if remaining == 0 {
            out.push(Monomial::ONE);
        }
        return;
    }
    if index == exps.len() - 1 {
        exps[index] = remaining;
        out.push(Monomial::new(exps));
        exps[index] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[index] = e;
        push_degree(out, exps, index + 1, remaining - e);
    }
    exps[index] = 0;
}
