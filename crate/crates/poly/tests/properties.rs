use proptest::prelude::*;
use sosroa_poly::{Monomial, PolyVectorField, Polynomial, Rational, VarSet};

fn vars3() -> VarSet {
    VarSet::new(["x", "y", "z"]).unwrap()
}

fn small_rational_poly() -> impl Strategy<Value = Vec<(i64, i64, [u32; 3])>> {
    prop::collection::vec((-9i64..=9, 1i64..=4, [0u32..=3, 0u32..=3, 0u32..=2]), 0..8)
}

fn build_rational(vars: &VarSet, terms: &[(i64, i64, [u32; 3])]) -> Polynomial<Rational> {
    Polynomial::from_terms(
        vars,
        terms
            .iter()
            .map(|(n, d, e)| (Rational::new(*n, *d), e.to_vec())),
    )
}

fn float_poly() -> impl Strategy<Value = Vec<(f64, [u32; 3])>> {
    prop::collection::vec((-5.0f64..5.0, [0u32..=3, 0u32..=3, 0u32..=2]), 0..10)
}

fn build_float(vars: &VarSet, terms: &[(f64, [u32; 3])]) -> Polynomial<f64> {
    Polynomial::from_terms(vars, terms.iter().map(|(c, e)| (*c, e.to_vec())))
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rational_ring_homomorphism(
        a in small_rational_poly(),
        b in small_rational_poly(),
        pt in [(-5i64..=5, 1i64..=3), (-5i64..=5, 1i64..=3), (-5i64..=5, 1i64..=3)],
    ) {
        let vars = vars3();
        let p = build_rational(&vars, &a);
        let q = build_rational(&vars, &b);
        let x: Vec<Rational> = pt.iter().map(|(n, d)| Rational::new(*n, *d)).collect();
        let pv = p.evaluate(&x).unwrap();
        let qv = q.evaluate(&x).unwrap();
        prop_assert_eq!((&p + &q).evaluate(&x).unwrap(), pv + qv);
        prop_assert_eq!((&p * &q).evaluate(&x).unwrap(), pv * qv);
    }

    #[test]
    fn float_ring_homomorphism(a in float_poly(), b in float_poly(), x in point()) {
        let vars = vars3();
        let p = build_float(&vars, &a);
        let q = build_float(&vars, &b);
        let pv = p.evaluate(&x).unwrap();
        let qv = q.evaluate(&x).unwrap();
        // Relative to the magnitude of the summands, not the possibly
        // cancelled result.
        let scale_sum = pv.abs() + qv.abs() + 1.0;
        prop_assert!(((&p + &q).evaluate(&x).unwrap() - (pv + qv)).abs() <= 1e-10 * scale_sum);
        let abs_p = Polynomial::from_monomial_map(&vars, p.terms().map(|(m, c)| (*m, c.abs())));
        let abs_q = Polynomial::from_monomial_map(&vars, q.terms().map(|(m, c)| (*m, c.abs())));
        let ax = x.map(f64::abs);
        let scale_prod = abs_p.evaluate(&ax).unwrap() * abs_q.evaluate(&ax).unwrap() + 1.0;
        prop_assert!(((&p * &q).evaluate(&x).unwrap() - pv * qv).abs() <= 1e-10 * scale_prod);
    }

    #[test]
    fn gradient_matches_central_differences(a in float_poly(), x in point()) {
        let vars = vars3();
        let p = build_float(&vars, &a);
        let h = 1e-5;
        for (i, gi) in p.gradient().iter().enumerate() {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.evaluate(&xp).unwrap() - p.evaluate(&xm).unwrap()) / (2.0 * h);
            let exact = gi.evaluate(&x).unwrap();
            // Truncation error of the stencil is O(h²·|p'''|); scale by the
            // coefficient magnitude to stay relative.
            let scale = p.max_abs_coefficient().max(1.0) * 50.0;
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(scale), "fd={fd} exact={exact}");
        }
    }

    #[test]
    fn even_polynomials_are_symmetric(a in float_poly(), x in point()) {
        let vars = vars3();
        let p = build_float(&vars, &a).even_part();
        prop_assert!(p.is_even());
        let neg = x.map(|v| -v);
        prop_assert!(close(p.evaluate(&x).unwrap(), p.evaluate(&neg).unwrap(), 1e-12));
        prop_assert_eq!(p.reflect(), p);
    }

    #[test]
    fn lie_derivative_of_even_along_odd_is_even(
        v in float_poly(),
        f0 in float_poly(),
        f1 in float_poly(),
        f2 in float_poly(),
    ) {
        let vars = vars3();
        let v = build_float(&vars, &v).even_part();
        let field = PolyVectorField::new(
            &vars,
            vec![
                build_float(&vars, &f0).odd_part(),
                build_float(&vars, &f1).odd_part(),
                build_float(&vars, &f2).odd_part(),
            ],
        )
        .unwrap();
        prop_assert!(field.is_odd());
        let vdot = v.lie_derivative(&field).unwrap();
        prop_assert!(vdot.is_even());
    }

    #[test]
    fn text_round_trip_is_bit_identical(a in prop::collection::vec((any::<f64>(), [0u32..=4, 0u32..=4, 0u32..=4]), 0..12)) {
        let vars = vars3();
        let terms: Vec<_> = a.into_iter().filter(|(c, _)| c.is_finite()).collect();
        let p = build_float(&vars, &terms);
        let text = p.to_string();
        let back = Polynomial::parse(&vars, &text).unwrap();
        prop_assert_eq!(back.len(), p.len());
        for ((m1, c1), (m2, c2)) in p.terms().zip(back.terms()) {
            prop_assert_eq!(m1, m2);
            prop_assert_eq!(c1.to_bits(), c2.to_bits());
        }
    }
}

#[test]
fn substitution_composes_with_evaluation() {
    let vars = VarSet::new(["a", "b"]).unwrap();
    let a = Polynomial::<f64>::var(&vars, 0);
    let b = Polynomial::<f64>::var(&vars, 1);
    let target = vars3();
    let sub = [
        &Polynomial::var(&target, 0) * &Polynomial::var(&target, 1),
        &Polynomial::var(&target, 2) - &Polynomial::constant(&target, 1.0),
    ];
    let p = &(&a * &a) + &(&b.pow(3)).scale(2.0);
    let composed = p.substitute(&sub).unwrap();
    let x = [0.7, -1.3, 0.4];
    let inner = [x[0] * x[1], x[2] - 1.0];
    let expected = p.evaluate(&inner).unwrap();
    assert!(close(composed.evaluate(&x).unwrap(), expected, 1e-12));
    assert_eq!(composed.coefficient(&Monomial::new(&[2, 2, 0])), 1.0);
}
