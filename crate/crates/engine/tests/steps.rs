mod common;

use common::{field, poly, vdp, xy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sosroa_engine::{normalize, Parity, RoaConfig, RoaError, RoaProblem};
use sosroa_poly::{PolyVectorField, VarSet};
use sosroa_sos::InteriorPointSolver;

fn solver() -> InteriorPointSolver {
    InteriorPointSolver::default()
}

fn decoupled() -> PolyVectorField<f64> {
    field(&xy(), &["-1*x", "-1*y"])
}

fn quadratic_config() -> RoaConfig {
    RoaConfig {
        lyapunov_degree: 2,
        lambda_degree: 0,
        mu_degree: 0,
        ..RoaConfig::default()
    }
}

#[test]
fn init_scalar_decay_gives_square() {
    let vars = VarSet::new(["x"]).unwrap();
    let f = field(&vars, &["-1*x"]);
    let cfg = RoaConfig {
        scaling_points: vec![vec![1.0]],
        ..quadratic_config()
    };
    let (v, _) = RoaProblem::new(f, cfg).unwrap().init_lyapunov(&solver()).unwrap();
    assert!(v.max_coefficient_distance(&poly(&vars, "x^2")) < 1e-6, "{v}");
}

#[test]
fn init_rejects_saddle() {
    let f = field(&xy(), &["1*x", "-1*y"]);
    let cfg = RoaConfig {
        scaling_points: vec![vec![1.0, 1.0]],
        ..quadratic_config()
    };
    let err = RoaProblem::new(f, cfg).unwrap().init_lyapunov(&solver()).unwrap_err();
    assert!(matches!(err, RoaError::InitInfeasible(_)), "{err:?}");
}

#[test]
fn init_van_der_pol_is_feasible_and_scaled() {
    let problem = RoaProblem::new(vdp(), RoaConfig::van_der_pol()).unwrap();
    let (v, report) = problem.init_lyapunov(&solver()).unwrap();
    assert_eq!(report.status, "optimal");
    assert!((v.evaluate_f64(&[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-6);
    assert!(v.evaluate_f64(&[0.0, 0.0]).unwrap().abs() < 1e-12);
    assert!(v.degree() <= 6);
}

#[test]
fn level_is_capped_when_unbounded() {
    let vars = xy();
    let cfg = RoaConfig {
        rho_max: Some(100.0),
        ..quadratic_config()
    };
    let problem = RoaProblem::new(decoupled(), cfg).unwrap();
    let step = problem.lambda_step(&poly(&vars, "x^2 + y^2"), 0, &solver()).unwrap();
    assert!(step.rho > 99.0, "rho = {}", step.rho);

    let uncapped = RoaProblem::new(decoupled(), quadratic_config()).unwrap();
    let err = uncapped.lambda_step(&poly(&vars, "x^2 + y^2"), 0, &solver()).unwrap_err();
    assert!(matches!(err, RoaError::UnboundedLevel), "{err:?}");
}

#[test]
fn box_constraint_limits_level_to_one() {
    let vars = xy();
    let cfg = quadratic_config().with_constraint("box", "x^2 - 1");
    let problem = RoaProblem::new(decoupled(), cfg).unwrap();
    let step = problem.lambda_step(&poly(&vars, "x^2 + y^2"), 0, &solver()).unwrap();
    assert!((step.rho - 1.0).abs() < 1e-3, "rho = {}", step.rho);
    assert_eq!(step.etas.len(), 1);
}

#[test]
fn van_der_pol_level_positive_and_shrinks_under_strip() {
    let free = RoaProblem::new(vdp(), RoaConfig::van_der_pol()).unwrap();
    let (v, _) = free.init_lyapunov(&solver()).unwrap();
    let rho = free.lambda_step(&v, 4, &solver()).unwrap().rho;
    assert!(rho > 0.0);

    let strip = RoaProblem::new(vdp(), RoaConfig::van_der_pol().with_constraint("strip", "x^2 - 1")).unwrap();
    let rho_strip = strip.lambda_step(&v, 4, &solver()).unwrap().rho;
    assert!(rho_strip > 0.0 && rho_strip < rho, "{rho_strip} vs {rho}");

    let renorm = free.lambda_step(&normalize(&v, rho).unwrap(), 4, &solver()).unwrap().rho;
    assert!((renorm - 1.0).abs() <= 1e-3, "{renorm}");
}

#[test]
fn normalize_examples() {
    let vars = VarSet::new(["x"]).unwrap();
    let v = normalize(&poly(&vars, "2*x^2"), 2.0).unwrap();
    assert!(v.max_coefficient_distance(&poly(&vars, "x^2")) < 1e-15);
    assert!(matches!(normalize(&v, 0.0), Err(RoaError::NonPositiveLevel(_))));
    assert!(matches!(normalize(&v, -1.0), Err(RoaError::NonPositiveLevel(_))));
}

#[test]
fn shape_of_round_level_set_is_identity() {
    let vars = xy();
    let problem = RoaProblem::new(decoupled(), quadratic_config()).unwrap();
    let mu = problem.mu_step(&poly(&vars, "x^2 + y^2"), 0, &solver()).unwrap();
    let expected = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((mu.p[i][j] - expected[i][j]).abs() < 1e-4, "{:?}", mu.p);
        }
    }
}

#[test]
fn shape_of_elliptic_level_set_and_containment() {
    let vars = xy();
    let problem = RoaProblem::new(decoupled(), quadratic_config()).unwrap();
    let v = poly(&vars, "x^2 + 4*y^2");
    // the exact certificate needs μ = −‖x‖²
    let mu = problem.mu_step(&v, 2, &solver()).unwrap();
    let expected = [[1.0, 0.0], [0.0, 4.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((mu.p[i][j] - expected[i][j]).abs() < 1e-4, "{:?}", mu.p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 10_000 {
        let x = [rng.gen_range(-1.2..1.2), rng.gen_range(-0.6..0.6)];
        let q = mu.p[0][0] * x[0] * x[0] + 2.0 * mu.p[0][1] * x[0] * x[1] + mu.p[1][1] * x[1] * x[1];
        if q <= 1.0 {
            assert!(v.evaluate_f64(&x).unwrap() <= 1.0 + 1e-6);
            checked += 1;
        }
    }
}

#[test]
fn van_der_pol_shape_inside_level_set() {
    let problem = RoaProblem::new(vdp(), RoaConfig::van_der_pol()).unwrap();
    let (v, _) = problem.init_lyapunov(&solver()).unwrap();
    let rho = problem.lambda_step(&v, 4, &solver()).unwrap().rho;
    let v = normalize(&v, rho).unwrap();
    let mu = problem.mu_step(&v, 2, &solver()).unwrap();
    let p = &mu.p;
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    assert!(p[0][0] > 0.0 && det > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let r = 1.0 / p[0][0].min(p[1][1]).sqrt();
    let mut checked = 0;
    while checked < 10_000 {
        let x = [rng.gen_range(-r..r), rng.gen_range(-r..r)];
        let q = p[0][0] * x[0] * x[0] + 2.0 * p[0][1] * x[0] * x[1] + p[1][1] * x[1] * x[1];
        if q <= 1.0 {
            assert!(v.evaluate_f64(&x).unwrap() <= 1.0 + 1e-6, "{x:?}");
            checked += 1;
        }
    }
}

#[test]
fn even_parity_gives_symmetric_initial_function() {
    let cfg = RoaConfig {
        parity: Parity::Even,
        ..RoaConfig::van_der_pol()
    };
    let (v, _) = RoaProblem::new(vdp(), cfg).unwrap().init_lyapunov(&solver()).unwrap();
    assert!(v.odd_part().is_zero());
    assert_eq!(v, v.reflect());
}

#[test]
fn constraint_must_hold_at_origin() {
    let cfg = quadratic_config().with_constraint("bad", "1 - x^2");
    assert!(matches!(RoaProblem::new(decoupled(), cfg), Err(RoaError::Config(_))));
}
