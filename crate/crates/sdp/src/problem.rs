use std::fmt::Write as _;

use crate::SdpError;

/// One entry `coef · X[k][l]` of a PSD block, with `k ≤ l`.
///
/// Off-diagonal entries contribute `coef` times the single matrix element,
/// so the symmetric coefficient matrix holds `coef / 2` in both mirrored
/// positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coef: f64,
}

impl PsdEntry {
    pub fn new(block: usize, row: usize, col: usize, coef: f64) -> Self {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        Self {
            block,
            row,
            col,
            coef,
        }
    }
}

/// Linear equality `Σ a_i x_i + Σ coef · X_b[k][l] = rhs`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraint {
    pub free: Vec<(usize, f64)>,
    pub psd: Vec<PsdEntry>,
    pub rhs: f64,
}

/// Standard-form semidefinite program
///
/// ```text
/// minimize    cᵀx + Σ_b ⟨C_b, X_b⟩
/// subject to  row_i(x, X) = b_i
///             X_b ⪰ 0
/// ```
///
/// with `x` free. Constraint and objective entries may repeat; repeats are
/// summed.
#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    n_free: usize,
    block_sizes: Vec<usize>,
    constraints: Vec<Constraint>,
    objective_free: Vec<(usize, f64)>,
    objective_psd: Vec<PsdEntry>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` free scalar variables and returns the index of the first.
    pub fn add_free(&mut self, count: usize) -> usize {
        let first = self.n_free;
        self.n_free += count;
        first
    }

    pub fn add_psd_block(&mut self, size: usize) -> usize {
        self.block_sizes.push(size);
        self.block_sizes.len() - 1
    }

    pub fn add_constraint(&mut self, constraint: Constraint) -> usize {
        self.constraints.push(constraint);
        self.constraints.len() - 1
    }

    pub fn add_objective_free(&mut self, var: usize, coef: f64) {
        self.objective_free.push((var, coef));
    }

    pub fn add_objective_psd(&mut self, entry: PsdEntry) {
        self.objective_psd.push(entry);
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_free(&self) -> &[(usize, f64)] {
        &self.objective_free
    }

    pub fn objective_psd(&self) -> &[PsdEntry] {
        &self.objective_psd
    }

    /// Scalar decision variables: free variables plus the upper triangle of
    /// every PSD block.
    pub fn n_variables(&self) -> usize {
        self.n_free
            + self
                .block_sizes
                .iter()
                .map(|n| n * (n + 1) / 2)
                .sum::<usize>()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let check_free = |i: usize, c: f64| -> Result<(), SdpError> {
            if i >= self.n_free {
                return Err(SdpError::FreeIndex {
                    index: i,
                    count: self.n_free,
                });
            }
            if !c.is_finite() {
                return Err(SdpError::NonFinite);
            }
            Ok(())
        };
        let check_psd = |e: &PsdEntry| -> Result<(), SdpError> {
            let size = *self
                .block_sizes
                .get(e.block)
                .ok_or(SdpError::BlockIndex {
                    index: e.block,
                    count: self.block_sizes.len(),
                })?;
            if e.row > e.col || e.col >= size {
                return Err(SdpError::EntryIndex {
                    block: e.block,
                    row: e.row,
                    col: e.col,
                    size,
                });
            }
            if !e.coef.is_finite() {
                return Err(SdpError::NonFinite);
            }
            Ok(())
        };
        for c in &self.constraints {
            for &(i, a) in &c.free {
                check_free(i, a)?;
            }
            for e in &c.psd {
                check_psd(e)?;
            }
            if !c.rhs.is_finite() {
                return Err(SdpError::NonFinite);
            }
        }
        for &(i, a) in &self.objective_free {
            check_free(i, a)?;
        }
        for e in &self.objective_psd {
            check_psd(e)?;
        }
        Ok(())
    }

    /// Sparse SDPA-like text dump.
    ///
    /// Free variables are written as one extra diagonal (LP) block of size
    /// `n_free` in the split `x = x⁺ − x⁻` form, so the layout is
    /// `"* comments"`, `m`, `nblocks`, block sizes (negative for LP blocks),
    /// `b`, then entry lines `matno block i j value` with 1-based indices and
    /// `matno = 0` for the objective.
    pub fn to_sdpa_string(&self) -> String {
        let mut out = String::new();
        let m = self.constraints.len();
        let _ = writeln!(out, "* sosroa sdp export");
        let _ = writeln!(
            out,
            "* free variables as LP block pair x = xp - xn; objective is minimized"
        );
        let _ = writeln!(out, "{m}");
        let lp_blocks = if self.n_free > 0 { 1 } else { 0 };
        let _ = writeln!(out, "{}", self.block_sizes.len() + lp_blocks);
        let mut sizes: Vec<String> = self.block_sizes.iter().map(|n| n.to_string()).collect();
        if self.n_free > 0 {
            sizes.push(format!("-{}", 2 * self.n_free));
        }
        let _ = writeln!(out, "{}", sizes.join(" "));
        let b: Vec<String> = self.constraints.iter().map(|c| format!("{:?}", c.rhs)).collect();
        let _ = writeln!(out, "{}", b.join(" "));
        let lp = self.block_sizes.len() + 1;
        let mut emit = |matno: usize, free: &[(usize, f64)], psd: &[PsdEntry]| {
            for e in psd {
                let v = if e.row == e.col { e.coef } else { e.coef / 2.0 };
                let _ = writeln!(
                    out,
                    "{matno} {} {} {} {v:?}",
                    e.block + 1,
                    e.row + 1,
                    e.col + 1
                );
            }
            for &(i, a) in free {
                let _ = writeln!(out, "{matno} {lp} {} {} {a:?}", 2 * i + 1, 2 * i + 1);
                let _ = writeln!(out, "{matno} {lp} {} {} {:?}", 2 * i + 2, 2 * i + 2, -a);
            }
        };
        emit(0, &self.objective_free, &self.objective_psd);
        for (i, c) in self.constraints.iter().enumerate() {
            emit(i + 1, &c.free, &c.psd);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_are_stored_upper_triangular() {
        let e = PsdEntry::new(0, 3, 1, 2.0);
        assert_eq!((e.row, e.col), (1, 3));
    }

    #[test]
    fn validation_catches_bad_indices() {
        let mut p = SdpProblem::new();
        let b = p.add_psd_block(2);
        p.add_constraint(Constraint {
            free: vec![],
            psd: vec![PsdEntry::new(b, 0, 2, 1.0)],
            rhs: 1.0,
        });
        assert!(matches!(p.validate(), Err(SdpError::EntryIndex { .. })));

        let mut p = SdpProblem::new();
        p.add_free(1);
        p.add_objective_free(1, 1.0);
        assert!(matches!(p.validate(), Err(SdpError::FreeIndex { .. })));
    }

    #[test]
    fn counts_variables() {
        let mut p = SdpProblem::new();
        p.add_free(3);
        p.add_psd_block(4);
        p.add_psd_block(1);
        assert_eq!(p.n_variables(), 3 + 10 + 1);
    }

    #[test]
    fn sdpa_export_layout() {
        let mut p = SdpProblem::new();
        let x = p.add_free(1);
        let b = p.add_psd_block(2);
        p.add_constraint(Constraint {
            free: vec![(x, 1.0)],
            psd: vec![PsdEntry::new(b, 0, 1, 2.0)],
            rhs: 3.0,
        });
        p.add_objective_psd(PsdEntry::new(b, 0, 0, 1.0));
        let text = p.to_sdpa_string();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('*')).collect();
        assert_eq!(lines[0], "1");
        assert_eq!(lines[1], "2");
        assert_eq!(lines[2], "2 -2");
        assert_eq!(lines[3], "3.0");
        assert_eq!(lines[4], "0 1 1 1 1.0");
        assert_eq!(lines[5], "1 1 1 2 1.0");
        assert_eq!(lines[6], "1 2 1 1 1.0");
        assert_eq!(lines[7], "1 2 2 2 -1.0");
    }
}
