//! Text form used in certificate files.
//!
//! Terms appear in ascending graded-lex order as `coeff*x1^a1*...*xn^an`,
//! joined by ` + ` or ` - `. Unit exponents are written without `^1`,
//! constant terms as a bare coefficient and the zero polynomial as `0`.
//! Coefficients use Rust's shortest round-trip float formatting, so
//! printing and parsing reproduce every `f64` bit-for-bit.

use std::fmt;

use crate::{Monomial, PolyError, Polynomial, VarSet};

impl fmt::Display for Polynomial<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms().enumerate() {
            if k == 0 {
                write!(f, "{c:?}")?;
            } else if c.is_sign_negative() {
                write!(f, " - {:?}", -c)?;
            } else {
                write!(f, " + {c:?}")?;
            }
            for (i, &e) in m.exponents(self.nvars()).iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*{}", self.vars().name(i))?,
                    _ => write!(f, "*{}^{}", self.vars().name(i), e)?,
                }
            }
        }
        Ok(())
    }
}

impl Polynomial<f64> {
    pub fn parse(vars: &VarSet, text: &str) -> Result<Self, PolyError> {
        let text = text.trim();
        if text == "0" {
            return Ok(Self::zero(vars));
        }
        let mut poly = Self::zero(vars);
        let mut sign = 1.0;
        let mut expect_term = true;
        for token in text.split_whitespace() {
            if expect_term {
                let (coeff, monomial) = parse_term(vars, token)?;
                poly.add_term(monomial, sign * coeff);
                expect_term = false;
            } else {
                sign = match token {
                    "+" => 1.0,
                    "-" => -1.0,
                    other => return Err(PolyError::Parse(format!("expected `+` or `-`, got `{other}`"))),
                };
                expect_term = true;
            }
        }
        if expect_term {
            return Err(PolyError::Parse("dangling operator".into()));
        }
        Ok(poly)
    }
}

fn parse_term(vars: &VarSet, token: &str) -> Result<(f64, Monomial), PolyError> {
    let mut pieces = token.split('*').peekable();
    let first = pieces.peek().copied().unwrap_or("");
    let coeff = match first.parse::<f64>() {
        Ok(c) => {
            pieces.next();
            c
        }
        Err(_) => 1.0,
    };
    let mut exps = vec![0u32; vars.len()];
    for factor in pieces {
        let (name, e) = match factor.split_once('^') {
            Some((name, e)) => (
                name,
                e.parse::<u32>()
                    .map_err(|_| PolyError::Parse(format!("bad exponent in `{factor}`")))?,
            ),
            None => (factor, 1),
        };
        let i = vars
            .index_of(name)
            .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))?;
        exps[i] += e;
    }
    Ok((coeff, Monomial::new(&exps)))
}
