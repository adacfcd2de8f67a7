//! Sparse multivariate polynomials over a fixed, ordered set of state
//! variables.
//!
//! Every [`Polynomial`] carries the [`VarSet`] it lives in. Terms are kept in
//! a map keyed by dense exponent vectors ([`Monomial`]) under a single global
//! graded-lexicographic order, so term listings, Gram bases and the text
//! format are reproducible.
//!
//! Coefficients are generic over [`Coefficient`]: the numerical pipeline
//! uses `f64`, while exact fixtures use [`Rational`] (or `BigRational`).
//! In float mode every arithmetic operation rounds once per accumulated
//! product, in the same order as the sorted term map, and terms whose sum
//! cancels to exactly `0.0` are removed.

mod coeff;
mod error;
mod eval;
mod field;
mod monomial;
mod polynomial;
mod text;
mod varset;

pub use coeff::{Coefficient, Rational};
pub use error::PolyError;
pub use eval::PolyEvaluator;
pub use field::PolyVectorField;
pub use monomial::{monomials_up_to, Monomial, MAX_VARS};
pub use polynomial::Polynomial;
pub use varset::VarSet;
