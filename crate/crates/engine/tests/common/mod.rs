#![allow(dead_code)]

use sosroa_poly::{PolyVectorField, Polynomial, VarSet};

pub fn xy() -> VarSet {
    VarSet::new(["x", "y"]).unwrap()
}

pub fn field(vars: &VarSet, comps: &[&str]) -> PolyVectorField<f64> {
    PolyVectorField::new(vars, comps.iter().map(|c| Polynomial::parse(vars, c).unwrap()).collect()).unwrap()
}

/// Time-reversed Van der Pol, μ = 1.
pub fn vdp() -> PolyVectorField<f64> {
    field(&xy(), &["-1*y", "1*x - 1*y + 1*x^2*y"])
}

pub fn poly(vars: &VarSet, text: &str) -> Polynomial<f64> {
    Polynomial::parse(vars, text).unwrap()
}
