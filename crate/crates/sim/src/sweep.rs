use std::collections::VecDeque;
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{classify, Classification, Constraint, SimOptions, Verdict};

/// Two active coordinates of a state space; all others held at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub dim: usize,
    pub axes: (usize, usize),
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl PlaneSpec {
    pub fn new(dim: usize, axes: (usize, usize), x_range: (f64, f64), y_range: (f64, f64), n: usize) -> Self {
        Self {
            dim,
            axes,
            x_range,
            y_range,
            nx: n,
            ny: n,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / (self.ny - 1) as f64
    }

    /// Plane coordinates of node `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x_range.0 + i as f64 * self.dx(),
            self.y_range.0 + j as f64 * self.dy(),
        )
    }

    /// Full state of node `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        let (a, b) = self.coords(i, j);
        x[self.axes.0] = a;
        x[self.axes.1] = b;
        x
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.nx < 2 || self.ny < 2 {
            return Err(SweepError::Resolution);
        }
        if self.axes.0 == self.axes.1 || self.axes.0 >= self.dim || self.axes.1 >= self.dim {
            return Err(SweepError::Axes);
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SweepError {
    #[error("grid needs at least two nodes per axis")]
    Resolution,
    #[error("plane axes must be two distinct state indices")]
    Axes,
}

/// Per-node verdicts of a plane sweep, `x` index fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationGrid {
    pub plane: PlaneSpec,
    pub constraint_names: Vec<String>,
    pub cells: Vec<Classification>,
}

/// Category used to label boundary segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Safe,
    Violates(usize),
    Unstable,
}

impl From<Verdict> for Region {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::ConvergedSafe => Region::Safe,
            Verdict::ConvergedUnsafe(i) => Region::Violates(i),
            Verdict::Diverged => Region::Unstable,
        }
    }
}

/// Dual-grid edge between two differently labelled neighbours.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub inner: Region,
    pub outer: Region,
}

pub fn sweep_plane<F>(
    plane: &PlaneSpec,
    field: &F,
    constraints: &[Constraint],
    opts: &SimOptions,
) -> Result<ClassificationGrid, SweepError>
where
    F: Fn(&[f64], &mut [f64]) + Sync + ?Sized,
{
    plane.validate()?;
    let cells = (0..plane.nx * plane.ny)
        .into_par_iter()
        .map(|k| classify(field, &plane.point(k % plane.nx, k / plane.nx), constraints, opts))
        .collect();
    Ok(ClassificationGrid {
        plane: plane.clone(),
        constraint_names: constraints.iter().map(|c| c.name.clone()).collect(),
        cells,
    })
}

impl ClassificationGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Classification {
        &self.cells[j * self.plane.nx + i]
    }

    pub fn region(&self, i: usize, j: usize) -> Region {
        self.cell(i, j).verdict.into()
    }

    fn cell_area(&self) -> f64 {
        self.plane.dx() * self.plane.dy()
    }

    /// Area of nodes that converged (SB-ROA).
    pub fn converged_area(&self) -> f64 {
        self.cells.iter().filter(|c| c.verdict.converged()).count() as f64 * self.cell_area()
    }

    /// Area of nodes that converged without violations (SB-S-ROA).
    pub fn safe_area(&self) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.verdict == Verdict::ConvergedSafe)
            .count() as f64
            * self.cell_area()
    }

    /// Mask of the 4-connected component of nodes satisfying `keep` that
    /// contains the node closest to the origin.
    pub fn origin_component(&self, keep: impl Fn(Verdict) -> bool) -> Vec<bool> {
        let (nx, ny) = (self.plane.nx, self.plane.ny);
        let mut mask = vec![false; nx * ny];
        let closest = |lo: f64, d: f64, n: usize| ((-lo / d).round().max(0.0) as usize).min(n - 1);
        let i0 = closest(self.plane.x_range.0, self.plane.dx(), nx);
        let j0 = closest(self.plane.y_range.0, self.plane.dy(), ny);
        if !keep(self.cell(i0, j0).verdict) {
            return mask;
        }
        let mut queue = VecDeque::from([(i0, j0)]);
        mask[j0 * nx + i0] = true;
        while let Some((i, j)) = queue.pop_front() {
            let mut push = |a: usize, b: usize| {
                let k = b * nx + a;
                if !mask[k] && keep(self.cells[k].verdict) {
                    mask[k] = true;
                    queue.push_back((a, b));
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < ny {
                push(i, j + 1);
            }
        }
        mask
    }

    /// Every dual-grid edge separating different regions. `inner` is the
    /// region ranked first in `Safe < Violates < Unstable`.
    pub fn boundaries(&self) -> Vec<BoundarySegment> {
        let (nx, ny) = (self.plane.nx, self.plane.ny);
        let (hx, hy) = (0.5 * self.plane.dx(), 0.5 * self.plane.dy());
        let mut out = Vec::new();
        let mut edge = |p: Region, q: Region, a: (f64, f64), b: (f64, f64)| {
            if p != q {
                let (inner, outer) = if p < q { (p, q) } else { (q, p) };
                out.push(BoundarySegment { a, b, inner, outer });
            }
        };
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = self.plane.coords(i, j);
                if i + 1 < nx {
                    edge(self.region(i, j), self.region(i + 1, j), (x + hx, y - hy), (x + hx, y + hy));
                }
                if j + 1 < ny {
                    edge(self.region(i, j), self.region(i, j + 1), (x - hx, y + hy), (x + hx, y + hy));
                }
            }
        }
        out
    }

    /// Boundary of the safe set, labelled by what lies just outside:
    /// `stability` or the name of the violated constraint.
    pub fn safe_boundary_labels(&self) -> Vec<(BoundarySegment, String)> {
        self.boundaries()
            .into_iter()
            .filter(|s| s.inner == Region::Safe)
            .map(|s| {
                let label = self.region_label(s.outer);
                (s, label)
            })
            .collect()
    }

    pub fn region_label(&self, r: Region) -> String {
        match r {
            Region::Safe => "safe".into(),
            Region::Unstable => "stability".into(),
            Region::Violates(i) => self.constraint_names[i].clone(),
        }
    }

    /// CSV with a `#` header block.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut s = String::new();
        for h in header {
            let _ = writeln!(s, "# {h}");
        }
        s.push_str("axis1,axis2,verdict,first_violation,time_of_violation\n");
        for j in 0..self.plane.ny {
            for i in 0..self.plane.nx {
                let (a, b) = self.plane.coords(i, j);
                let c = self.cell(i, j);
                let (name, t) = match c.first_violation {
                    Some(v) => (self.constraint_names[v.constraint].as_str(), format!("{}", v.time)),
                    None => ("", String::new()),
                };
                let _ = writeln!(s, "{a},{b},{},{name},{t}", c.verdict.as_str());
            }
        }
        s
    }
}
