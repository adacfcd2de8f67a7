use sosroa_poly::{Polynomial, PolyVectorField, VarSet};

use crate::{FitMethod, TireError, TireFit, VehicleScenario};

pub const STATE_NAMES: [&str; 7] = ["v", "r", "yG", "psi", "de", "de1", "de2"];

/// Characteristic magnitude of each state, used to scale norms.
pub const STATE_SCALES: [f64; 7] = [5.0, 1.0, 5.0, 1.0, 0.1, 1.0, 10.0];

/// Front and rear axle slip angles.
pub fn slip_angles(x: &[f64], s: &VehicleScenario) -> (f64, f64) {
    let (v, r, de) = (x[0], x[1], x[4]);
    (de - (v + s.a1 * r) / s.u, -(v - s.a2 * r) / s.u)
}

/// Scenario plus cubic tire fits; immutable once built.
#[derive(Clone, Debug)]
pub struct VehicleModel {
    pub scenario: VehicleScenario,
    pub front_fit: TireFit,
    pub rear_fit: TireFit,
    vars: VarSet,
}

impl VehicleModel {
    pub fn new(scenario: VehicleScenario, method: FitMethod) -> Result<Self, TireError> {
        Ok(Self {
            front_fit: TireFit::new(&scenario.front, method)?,
            rear_fit: TireFit::new(&scenario.rear, method)?,
            scenario,
            vars: VarSet::new(STATE_NAMES).expect("valid names"),
        })
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    /// Exact dynamics with Magic Formula forces and full trigonometry.
    pub fn full_field(&self, x: &[f64], dx: &mut [f64]) {
        let s = &self.scenario;
        let (af, ar) = slip_angles(x, s);
        let ff = s.front.force(af);
        let fr = s.rear.force(ar);
        let [v, r, yg, psi, de, de1, de2] = [x[0], x[1], x[2], x[3], x[4], x[5], x[6]];
        let (sp, cp) = psi.sin_cos();
        let cd = de.cos();
        let l = s.preview_distance();
        let e = yg + l * sp;
        let ed = s.u * sp + v * cp + l * r * cp;
        dx[0] = -s.u * r + (ff * cd + fr) / s.m;
        dx[1] = (s.a1 * ff * cd - s.a2 * fr) / s.j;
        dx[2] = s.u * sp + v * cp;
        dx[3] = r;
        dx[4] = de1;
        dx[5] = de2;
        dx[6] = self.driver(de, de1, de2, e, ed);
    }

    /// Dynamics with cubic tires, `cos δ ≈ 1` and third-order trig in ψ.
    pub fn poly_field_eval(&self, x: &[f64], dx: &mut [f64]) {
        let s = &self.scenario;
        let (af, ar) = slip_angles(x, s);
        let ff = self.front_fit.force(af);
        let fr = self.rear_fit.force(ar);
        let [v, r, yg, psi, de, de1, de2] = [x[0], x[1], x[2], x[3], x[4], x[5], x[6]];
        let sp = psi - psi.powi(3) / 6.0;
        let cp = 1.0 - psi * psi / 2.0;
        let l = s.preview_distance();
        let e = yg + l * sp;
        let ed = s.u * sp + v * cp + l * r * cp;
        dx[0] = -s.u * r + (ff + fr) / s.m;
        dx[1] = (s.a1 * ff - s.a2 * fr) / s.j;
        dx[2] = s.u * sp + v * cp;
        dx[3] = r;
        dx[4] = de1;
        dx[5] = de2;
        dx[6] = self.driver(de, de1, de2, e, ed);
    }

    fn driver(&self, de: f64, de1: f64, de2: f64, e: f64, ed: f64) -> f64 {
        let s = &self.scenario;
        let t = s.tau;
        6.0 / t.powi(3) * (-de - t * de1 - t * t / 2.0 * de2 - s.k * e - s.kd * ed)
    }

    /// Symbolic form of [`VehicleModel::poly_field_eval`].
    pub fn polynomial_field(&self) -> PolyVectorField<f64> {
        let s = &self.scenario;
        let vs = &self.vars;
        let x = |i: usize| Polynomial::var(vs, i);
        let lin = |terms: &[(usize, f64)]| {
            let mut p = Polynomial::zero(vs);
            for &(i, c) in terms {
                p = add(&p, &x(i).scale(c));
            }
            p
        };
        let af = lin(&[(4, 1.0), (0, -1.0 / s.u), (1, -s.a1 / s.u)]);
        let ar = lin(&[(0, -1.0 / s.u), (1, s.a2 / s.u)]);
        let tire = |a: &Polynomial<f64>, fit: &TireFit| add(&a.scale(fit.c1), &a.pow(3).scale(fit.c3));
        let ff = tire(&af, &self.front_fit);
        let fr = tire(&ar, &self.rear_fit);
        let psi = x(3);
        let sp = add(&psi, &psi.pow(3).scale(-1.0 / 6.0));
        let cp = add(&Polynomial::constant(vs, 1.0), &psi.pow(2).scale(-0.5));
        let l = s.preview_distance();
        let e = add(&x(2), &sp.scale(l));
        let ed = add(
            &add(&sp.scale(s.u), &mul(&x(0), &cp)),
            &mul(&x(1), &cp).scale(l),
        );
        let t = s.tau;
        let g = 6.0 / t.powi(3);
        let f0 = add(&x(1).scale(-s.u), &add(&ff, &fr).scale(1.0 / s.m));
        let f1 = add(&ff.scale(s.a1 / s.j), &fr.scale(-s.a2 / s.j));
        let f2 = add(&sp.scale(s.u), &mul(&x(0), &cp));
        let mut f6 = lin(&[(4, -g), (5, -g * t), (6, -g * t * t / 2.0)]);
        f6 = add(&f6, &e.scale(-g * s.k));
        f6 = add(&f6, &ed.scale(-g * s.kd));
        PolyVectorField::new(vs, vec![f0, f1, f2, x(1), x(5), x(6), f6]).expect("seven components")
    }

    /// Constraint polynomials `α_i − ᾱ_i ≤ 0`, front then rear.
    pub fn slip_constraints(&self) -> Vec<(String, Polynomial<f64>)> {
        let s = &self.scenario;
        let vs = &self.vars;
        let x = |i: usize| Polynomial::var(vs, i);
        let bar = |a: f64| Polynomial::constant(vs, -a);
        let af = add(
            &add(&x(4), &x(0).scale(-1.0 / s.u)),
            &add(&x(1).scale(-s.a1 / s.u), &bar(self.front_fit.alpha_bar)),
        );
        let ar = add(
            &add(&x(0).scale(-1.0 / s.u), &x(1).scale(s.a2 / s.u)),
            &bar(self.rear_fit.alpha_bar),
        );
        vec![("alpha_f".into(), af), ("alpha_r".into(), ar)]
    }

    /// Slip lines in the `v–r` plane with all other states zero: each entry
    /// `(cv, cr, ᾱ)` describes the pair `cv·v + cr·r = ±ᾱ`.
    pub fn slip_lines(&self) -> [(f64, f64, f64); 2] {
        let s = &self.scenario;
        [
            (-1.0 / s.u, -s.a1 / s.u, self.front_fit.alpha_bar),
            (-1.0 / s.u, s.a2 / s.u, self.rear_fit.alpha_bar),
        ]
    }

    /// Indices of violated slip limits at a state, front first.
    pub fn violated_limit(&self, x: &[f64]) -> Option<usize> {
        let (af, ar) = slip_angles(x, &self.scenario);
        if af.abs() > self.front_fit.alpha_bar {
            Some(0)
        } else if ar.abs() > self.rear_fit.alpha_bar {
            Some(1)
        } else {
            None
        }
    }
}

fn add(a: &Polynomial<f64>, b: &Polynomial<f64>) -> Polynomial<f64> {
    a.checked_add(b).expect("shared variable set")
}

fn mul(a: &Polynomial<f64>, b: &Polynomial<f64>) -> Polynomial<f64> {
    a.checked_mul(b).expect("shared variable set")
}
