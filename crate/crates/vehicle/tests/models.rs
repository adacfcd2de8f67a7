use std::path::PathBuf;

use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sosroa_vehicle::{
    fit_cubic, slip_angles, FitMethod, MagicFormula, TireFit, VehicleModel, VehicleScenario,
};

fn scenario(name: &str) -> VehicleScenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    VehicleScenario::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn axles() -> Vec<MagicFormula> {
    let (ov, un) = (scenario("ov.cfg"), scenario("un.cfg"));
    vec![ov.front, ov.rear, un.front, un.rear]
}

fn model(name: &str) -> VehicleModel {
    VehicleModel::new(scenario(name), FitMethod::Minimax).unwrap()
}

/// Peak by dense sampling, limit by plain bisection.
fn oracle_limit(mf: &MagicFormula) -> (f64, f64) {
    let n = 200_000;
    let (mut ap, mut fp) = (0.0, 0.0);
    for i in 1..=n {
        let a = i as f64 * 1.0 / n as f64;
        if mf.force(a) > fp {
            ap = a;
            fp = mf.force(a);
        }
    }
    let (mut lo, mut hi) = (0.0, ap);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mf.force(mid) < 0.95 * fp {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), fp)
}

#[test]
fn slip_limits_hit_ninety_five_percent() {
    for mf in axles() {
        let ab = mf.slip_limit(0.95).unwrap();
        let (_, fp) = mf.peak().unwrap();
        assert!((mf.force(ab) / fp - 0.95).abs() <= 1e-6);
        let (ob, ofp) = oracle_limit(&mf);
        assert!((ab - ob).abs() < 1e-6, "{ab} vs {ob}");
        assert!((fp - ofp).abs() / fp < 1e-6);
    }
}

#[test]
fn slip_limit_ignores_force_scale() {
    for mf in axles() {
        let big = MagicFormula { d: 2.0 * mf.d, ..mf };
        let (a, b) = (mf.slip_limit(0.95).unwrap(), big.slip_limit(0.95).unwrap());
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn cubic_fits_stay_within_five_percent() {
    for mf in axles() {
        let fit = TireFit::new(&mf, FitMethod::Minimax).unwrap();
        let res = fit.max_residual(|a| mf.force(a), 100_001);
        assert!(res <= 0.05 * fit.peak_force, "{}", res / fit.peak_force);
        assert!(fit.c1 > 0.0 && fit.c3 < 0.0);
    }
}

#[test]
fn exact_cubics_are_recovered() {
    let (c, d) = (2.1e5, -3.3e7);
    for method in [FitMethod::Minimax, FitMethod::LeastSquares] {
        let (c1, c3) = fit_cubic(|a| c * a + d * a * a * a, 0.07, method).unwrap();
        assert!((c1 - c).abs() / c.abs() < 1e-9, "{method:?}");
        assert!((c3 - d).abs() / d.abs() < 1e-9, "{method:?}");
    }
    assert!(fit_cubic(|a| a, 0.0, FitMethod::Minimax).is_err());
}

#[test]
fn slip_angle_examples() {
    let mut s = scenario("un.cfg");
    let (af, ar) = slip_angles(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], &s);
    assert!((af + 0.04).abs() < 1e-12 && (ar + 0.04).abs() < 1e-12);
    let (af, ar) = slip_angles(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &s);
    assert!((af + 0.048).abs() < 1e-12 && (ar - 0.056).abs() < 1e-12);
    s.a1 = 7.0;
    assert_eq!(slip_angles(&[0.0; 7], &s), (0.0, 0.0));
}

#[test]
fn origin_is_an_equilibrium() {
    for name in ["ov.cfg", "un.cfg"] {
        let m = model(name);
        let mut dx = [1.0; 7];
        m.full_field(&[0.0; 7], &mut dx);
        assert_eq!(dx, [0.0; 7]);
        m.poly_field_eval(&[0.0; 7], &mut dx);
        assert_eq!(dx, [0.0; 7]);
    }
}

#[test]
fn polynomial_field_is_odd_cubic() {
    let m = model("ov.cfg");
    let f = m.polynomial_field();
    assert_eq!(f.degree(), 3);
    assert!(f.is_odd());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let x: Vec<f64> = (0..7).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let sym = f.evaluate_f64(&x).unwrap();
        let mut num = [0.0; 7];
        m.poly_field_eval(&x, &mut num);
        for i in 0..7 {
            assert!((sym[i] - num[i]).abs() <= 1e-9 * (1.0 + num[i].abs()));
        }
    }
}

fn jacobian(f: impl Fn(&[f64], &mut [f64])) -> Mat<f64> {
    let h = 1e-6;
    Mat::from_fn(7, 7, |i, j| {
        let mut xp = [0.0; 7];
        let mut xm = [0.0; 7];
        xp[j] = h;
        xm[j] = -h;
        let (mut fp, mut fm) = ([0.0; 7], [0.0; 7]);
        f(&xp, &mut fp);
        f(&xm, &mut fm);
        (fp[i] - fm[i]) / (2.0 * h)
    })
}

#[test]
fn polynomial_linear_part_matches_its_jacobian() {
    let m = model("un.cfg");
    let a = m.polynomial_field().linear_part().unwrap();
    let j = jacobian(|x, dx| m.poly_field_eval(x, dx));
    for r in 0..7 {
        for c in 0..7 {
            assert!((a[r][c] - j[(r, c)]).abs() <= 1e-9 * (1.0 + a[r][c].abs()) * 1e3);
        }
    }
}

#[test]
fn linearizations_are_hurwitz() {
    for name in ["ov.cfg", "un.cfg"] {
        let m = model(name);
        let full = jacobian(|x, dx| m.full_field(x, dx));
        let lin = m.polynomial_field().linear_part().unwrap();
        let poly = Mat::from_fn(7, 7, |i, j| lin[i][j]);
        for a in [full, poly] {
            let ev = a.eigenvalues().unwrap();
            let worst = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            assert!(worst < 0.0, "{name}: {worst}");
        }
    }
}

#[test]
fn polynomial_tracks_full_field_in_validity_range() {
    for name in ["ov.cfg", "un.cfg"] {
        let m = model(name);
        let (abf, abr) = (m.front_fit.alpha_bar, m.rear_fit.alpha_bar);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut errs = Vec::new();
        while errs.len() < 4000 {
            let x = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-30f64..30.0).to_radians(),
                rng.gen_range(-5f64..5.0).to_radians(),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-10.0..10.0),
            ];
            let (af, ar) = slip_angles(&x, &m.scenario);
            if af.abs() > 0.8 * abf || ar.abs() > 0.8 * abr {
                continue;
            }
            let (mut fp, mut ff) = ([0.0; 7], [0.0; 7]);
            m.poly_field_eval(&x, &mut fp);
            m.full_field(&x, &mut ff);
            let num: f64 = fp.iter().zip(&ff).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = ff.iter().map(|a| a * a).sum::<f64>().sqrt();
            errs.push(num / den);
        }
        errs.sort_by(f64::total_cmp);
        let p95 = errs[errs.len() * 95 / 100];
        let worst = *errs.last().unwrap();
        // the cubic's slope at zero slip is a range fit, not B·C·D, so the
        // force rows alone carry a few percent where the rest of f is small
        assert!(p95 <= 0.02, "{name}: {p95}");
        assert!(worst <= 0.15, "{name}: {worst}");
    }
}

#[test]
fn steady_steering_matches_pd_law() {
    let m = model("un.cfg");
    let s = &m.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let (v, r, yg, psi) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-0.2..0.2),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-0.3..0.3),
        );
        let l = s.preview_distance();
        let e = yg + l * f64::sin(psi);
        let ed = s.u * f64::sin(psi) + v * f64::cos(psi) + l * r * f64::cos(psi);
        let de = -s.k * e - s.kd * ed;
        let mut dx = [0.0; 7];
        m.full_field(&[v, r, yg, psi, de, 0.0, 0.0], &mut dx);
        assert!(dx[6].abs() < 1e-10, "{}", dx[6]);
    }
}

proptest! {
    #[test]
    fn magic_formula_is_odd(a in -1.0f64..1.0) {
        for mf in axles() {
            prop_assert_eq!(mf.force(-a), -mf.force(a));
        }
    }

    #[test]
    fn full_field_is_odd(x in prop::array::uniform7(-1.0f64..1.0)) {
        let m = model("ov.cfg");
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (mut a, mut b) = ([0.0; 7], [0.0; 7]);
        m.full_field(&x, &mut a);
        m.full_field(&neg, &mut b);
        for i in 0..7 {
            prop_assert!((a[i] + b[i]).abs() <= 1e-12 * (1.0 + a[i].abs()));
        }
    }
}
