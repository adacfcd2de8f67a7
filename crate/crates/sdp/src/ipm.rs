//! Homogeneous self-dual interior-point method with Nesterov–Todd scaling
//! and Mehrotra predictor–corrector steps.
//!
//! The embedding works on the reduced, row-equilibrated problem produced by
//! presolve. Newton systems are reduced to the Schur complement
//! `M_ij = ⟨A_i, W A_j W⟩`, which is block diagonal over groups of rows that
//! share PSD blocks; free variables enter through a second, small Schur
//! complement `A_fᵀ M⁻¹ A_f`.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Llt;
use faer::prelude::*;
use faer::{Accum, Side};

use crate::presolve::{presolve, Presolved, Reduced};
use crate::{SdpError, SdpProblem, SdpSolution, SdpSolver, SdpStatus, SolverOptions, SymMatrix};

/// Iterations without improvement after which a reduced-accuracy iterate
/// is accepted.
const STALL_ITERATIONS: usize = 4;

/// Default back-end.
#[derive(Clone, Debug, Default)]
pub struct InteriorPointSolver {
    pub options: SolverOptions,
}

impl InteriorPointSolver {
    pub fn new(options: SolverOptions) -> Self {
        Self { options }
    }
}

impl SdpSolver for InteriorPointSolver {
    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution, SdpError> {
        problem.validate()?;
        let m_orig = problem.constraints().len();
        let red = match presolve(problem) {
            Presolved::Reduced(r) => r,
            Presolved::Trivial(status, msg) => {
                return Ok(SdpSolution::failed(
                    status,
                    msg,
                    problem.n_free(),
                    problem.block_sizes(),
                    m_orig,
                ))
            }
        };
        Ok(Ipm::new(red, &self.options).run(problem))
    }
}

struct Comp {
    rows: Vec<usize>,
    blocks: Vec<usize>,
}

struct Iterate {
    x: Vec<Mat<f64>>,
    s: Vec<Mat<f64>>,
    y: Vec<f64>,
    t: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Residuals {
    rp: Vec<f64>,
    rd: Vec<Mat<f64>>,
    rdf: Vec<f64>,
    rg: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct Metrics {
    pres: f64,
    dres: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
    primal_ray: f64,
    dual_ray: f64,
    mu: f64,
}

/// Nesterov–Todd scaling of one block: `W = G Gᵀ`, `W S W = X` and
/// `G⁻¹ X G⁻ᵀ = Gᵀ S G = diag(λ)`.
struct Nt {
    g: Mat<f64>,
    ginv: Mat<f64>,
    w: Mat<f64>,
    lam: Vec<f64>,
}

struct Direction {
    dx: Vec<Mat<f64>>,
    ds: Vec<Mat<f64>>,
    dy: Vec<f64>,
    dt: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

struct CompFactor {
    m: Mat<f64>,
    llt: Llt<f64>,
    z: Mat<f64>,
}

struct Factor {
    comps: Vec<CompFactor>,
    st: Option<Llt<f64>>,
}

struct Ipm<'a> {
    red: Reduced,
    opts: &'a SolverOptions,
    comps: Vec<Comp>,
    bscale: f64,
    cscale: f64,
    bnorm: f64,
    cnorm: f64,
    nu: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_dot(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    s
}

fn mat_norm2(a: &Mat<f64>) -> f64 {
    mat_dot(a, a)
}

fn symmetrize(a: &mut Mat<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

fn mul3(a: MatRef<'_, f64>, b: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Mat<f64> {
    let ab = a * b;
    &ab * c
}

fn nt_scaling(x: &Mat<f64>, s: &Mat<f64>) -> Option<Nt> {
    let n = x.nrows();
    let lx = x.llt(Side::Lower).ok()?.L().to_owned();
    let ls = s.llt(Side::Lower).ok()?.L().to_owned();
    let prod = ls.transpose() * &lx;
    let svd = prod.svd().ok()?;
    let lam: Vec<f64> = (0..n).map(|i| svd.S().column_vector()[i]).collect();
    if lam.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return None;
    }
    let lv = &lx * svd.V();
    let g = Mat::from_fn(n, n, |i, j| lv[(i, j)] / lam[j].sqrt());
    let ur = svd.U().transpose() * ls.transpose();
    let ginv = Mat::from_fn(n, n, |i, j| ur[(i, j)] / lam[i].sqrt());
    let mut w = &g * g.transpose();
    symmetrize(&mut w);
    Some(Nt { g, ginv, w, lam })
}

/// Largest `α` with `diag(λ) + α D ⪰ 0`.
fn max_step(lam: &[f64], d: &Mat<f64>) -> f64 {
    let n = lam.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let e = Mat::from_fn(n, n, |i, j| d[(i, j)] / (lam[i] * lam[j]).sqrt());
    let e = Mat::from_fn(n, n, |i, j| 0.5 * (e[(i, j)] + e[(j, i)]));
    match e.self_adjoint_eigenvalues(Side::Lower) {
        Ok(ev) => {
            let mn = ev[0];
            if mn < 0.0 {
                -1.0 / mn
            } else {
                f64::INFINITY
            }
        }
        Err(_) => 0.0,
    }
}

fn cholesky_regularized(m: &Mat<f64>) -> Option<Llt<f64>> {
    if let Ok(f) = m.llt(Side::Lower) {
        return Some(f);
    }
    let n = m.nrows();
    let dmax = (0..n).fold(0.0f64, |a, i| a.max(m[(i, i)].abs())).max(1e-300);
    let mut delta = 1e-14;
    while delta <= 1e-6 {
        let mut r = m.clone();
        for i in 0..n {
            r[(i, i)] += delta * dmax;
        }
        if let Ok(f) = r.llt(Side::Lower) {
            return Some(f);
        }
        delta *= 10.0;
    }
    None
}

impl<'a> Ipm<'a> {
    fn new(mut red: Reduced, opts: &'a SolverOptions) -> Self {
        let bmax = red.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut cmax = red.c_free.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for blk in &red.blocks {
            for j in 0..blk.n {
                for i in 0..blk.n {
                    cmax = cmax.max(blk.c[(i, j)].abs());
                }
            }
        }
        let bscale = bmax.max(1.0);
        let cscale = cmax.max(1.0);
        for v in &mut red.b {
            *v /= bscale;
        }
        for v in &mut red.c_free {
            *v /= cscale;
        }
        for blk in &mut red.blocks {
            for j in 0..blk.n {
                for i in 0..blk.n {
                    blk.c[(i, j)] /= cscale;
                }
            }
        }
        let bnorm = norm(&red.b);
        let cnorm = (dot(&red.c_free, &red.c_free)
            + red.blocks.iter().map(|b| mat_norm2(&b.c)).sum::<f64>())
        .sqrt();

        // Union rows that share a block.
        let mut parent: Vec<usize> = (0..red.m).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for blk in &red.blocks {
            if let Some(first) = blk.rows.first() {
                let r0 = find(&mut parent, first.row);
                for r in &blk.rows[1..] {
                    let ri = find(&mut parent, r.row);
                    if ri != r0 {
                        parent[ri] = r0;
                    }
                }
            }
        }
        let mut comp_of_root = vec![usize::MAX; red.m];
        let mut comps: Vec<Comp> = Vec::new();
        for i in 0..red.m {
            let r = find(&mut parent, i);
            if comp_of_root[r] == usize::MAX {
                comp_of_root[r] = comps.len();
                comps.push(Comp {
                    rows: Vec::new(),
                    blocks: Vec::new(),
                });
            }
            comps[comp_of_root[r]].rows.push(i);
        }
        for (j, blk) in red.blocks.iter().enumerate() {
            if let Some(first) = blk.rows.first() {
                let c = comp_of_root[find(&mut parent, first.row)];
                comps[c].blocks.push(j);
            }
        }
        let nu = red.blocks.iter().map(|b| b.n).sum();
        Self {
            red,
            opts,
            comps,
            bscale,
            cscale,
            bnorm,
            cnorm,
            nu,
        }
    }

    fn a_blocks(&self, xs: &[Mat<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.red.m];
        for (blk, x) in self.red.blocks.iter().zip(xs) {
            for r in &blk.rows {
                out[r.row] += r.upper.iter().map(|&(k, l, a)| a * x[(k, l)]).sum::<f64>();
            }
        }
        out
    }

    fn at_block(&self, j: usize, y: &[f64]) -> Mat<f64> {
        let blk = &self.red.blocks[j];
        let mut out = Mat::zeros(blk.n, blk.n);
        for r in &blk.rows {
            let yi = y[r.row];
            for &(k, l, a) in &r.upper {
                if k == l {
                    out[(k, k)] += a * yi;
                } else {
                    out[(k, l)] += 0.5 * a * yi;
                    out[(l, k)] += 0.5 * a * yi;
                }
            }
        }
        out
    }

    fn af_mul(&self, t: &[f64]) -> Vec<f64> {
        let a = &self.red.a_free;
        (0..self.red.m)
            .map(|i| (0..self.red.nt).map(|k| a[(i, k)] * t[k]).sum())
            .collect()
    }

    fn aft_mul(&self, y: &[f64]) -> Vec<f64> {
        let a = &self.red.a_free;
        (0..self.red.nt)
            .map(|k| (0..self.red.m).map(|i| a[(i, k)] * y[i]).sum())
            .collect()
    }

    fn primal_cost(&self, it: &Iterate) -> f64 {
        dot(&self.red.c_free, &it.t)
            + self
                .red
                .blocks
                .iter()
                .zip(&it.x)
                .map(|(b, x)| mat_dot(&b.c, x))
                .sum::<f64>()
    }

    fn residuals(&self, it: &Iterate) -> Residuals {
        let ax = self.a_blocks(&it.x);
        let aft = self.af_mul(&it.t);
        let rp = (0..self.red.m)
            .map(|i| self.red.b[i] * it.tau - ax[i] - aft[i])
            .collect();
        let rd = (0..self.red.blocks.len())
            .map(|j| {
                let aty = self.at_block(j, &it.y);
                let c = &self.red.blocks[j].c;
                let n = c.nrows();
                Mat::from_fn(n, n, |p, q| c[(p, q)] * it.tau - aty[(p, q)] - it.s[j][(p, q)])
            })
            .collect();
        let afy = self.aft_mul(&it.y);
        let rdf = (0..self.red.nt)
            .map(|k| self.red.c_free[k] * it.tau - afy[k])
            .collect();
        let rg = it.kappa + self.primal_cost(it) - dot(&self.red.b, &it.y);
        Residuals { rp, rd, rdf, rg }
    }

    fn metrics(&self, it: &Iterate, res: &Residuals) -> Metrics {
        let tau = it.tau;
        let rd2: f64 = res.rd.iter().map(mat_norm2).sum::<f64>() + dot(&res.rdf, &res.rdf);
        let cx = self.primal_cost(it);
        let by = dot(&self.red.b, &it.y);
        let pobj = cx / tau;
        let dobj = by / tau;
        let xs: f64 = it.x.iter().zip(&it.s).map(|(x, s)| mat_dot(x, s)).sum();
        let mu = (xs + it.tau * it.kappa) / (self.nu as f64 + 1.0);

        // Certificate quality, homogeneous in (y, S) and (x, X) respectively.
        let primal_ray = if by > 0.0 {
            let mut r2 = 0.0;
            for (j, blk) in self.red.blocks.iter().enumerate() {
                let n = blk.n;
                for q in 0..n {
                    for p in 0..n {
                        let v = blk.c[(p, q)] * tau - res.rd[j][(p, q)];
                        r2 += v * v;
                    }
                }
            }
            for k in 0..self.red.nt {
                let v = self.red.c_free[k] * tau - res.rdf[k];
                r2 += v * v;
            }
            r2.sqrt() / by
        } else {
            f64::INFINITY
        };
        let dual_ray = if cx < 0.0 {
            let r2: f64 = (0..self.red.m)
                .map(|i| (self.red.b[i] * tau - res.rp[i]).powi(2))
                .sum();
            r2.sqrt() / -cx
        } else {
            f64::INFINITY
        };
        Metrics {
            pres: norm(&res.rp) / tau / (1.0 + self.bnorm),
            dres: rd2.sqrt() / tau / (1.0 + self.cnorm),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            pobj,
            dobj,
            primal_ray,
            dual_ray,
            mu,
        }
    }

    fn factor(&self, nts: &[Nt]) -> Option<Factor> {
        let mut local = vec![0usize; self.red.m];
        let mut comps = Vec::with_capacity(self.comps.len());
        for comp in &self.comps {
            for (li, &r) in comp.rows.iter().enumerate() {
                local[r] = li;
            }
            let mc = comp.rows.len();
            let mut m = Mat::<f64>::zeros(mc, mc);
            for &j in &comp.blocks {
                let blk = &self.red.blocks[j];
                let w = &nts[j].w;
                let n = blk.n;
                let mut t = Mat::<f64>::zeros(n, n);
                for (ii, ri) in blk.rows.iter().enumerate() {
                    let e = ri.pair_k.len();
                    let p = Mat::from_fn(n, e, |r, q| w[(r, ri.pair_k[q])] * ri.pair_coef[q]);
                    let q = Mat::from_fn(e, n, |q, c| w[(ri.pair_l[q], c)]);
                    matmul(t.as_mut(), Accum::Replace, p.as_ref(), q.as_ref(), 1.0, Par::Seq);
                    let li = local[ri.row];
                    for rj in &blk.rows[ii..] {
                        let lj = local[rj.row];
                        let v: f64 = rj.upper.iter().map(|&(k, l, a)| a * t[(k, l)]).sum();
                        m[(li, lj)] += v;
                        if li != lj {
                            m[(lj, li)] += v;
                        }
                    }
                }
            }
            let llt = cholesky_regularized(&m)?;
            let mut z = Mat::from_fn(mc, self.red.nt, |i, k| self.red.a_free[(comp.rows[i], k)]);
            if self.red.nt > 0 {
                llt.solve_in_place(z.as_mut());
            }
            comps.push(CompFactor { m, llt, z });
        }
        let st = if self.red.nt > 0 {
            let nt = self.red.nt;
            let mut st = Mat::<f64>::zeros(nt, nt);
            for (comp, cf) in self.comps.iter().zip(&comps) {
                let af = Mat::from_fn(comp.rows.len(), nt, |i, k| self.red.a_free[(comp.rows[i], k)]);
                matmul(st.as_mut(), Accum::Add, af.transpose(), cf.z.as_ref(), 1.0, Par::Seq);
            }
            symmetrize(&mut st);
            let dmax = (0..nt).fold(0.0f64, |a, i| a.max(st[(i, i)]));
            for i in 0..nt {
                st[(i, i)] += 1e-13 * dmax;
            }
            Some(cholesky_regularized(&st)?)
        } else {
            None
        };
        Some(Factor { comps, st })
    }

    fn solve_once(&self, f: &Factor, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nt = self.red.nt;
        let mut y = vec![0.0; self.red.m];
        let mut y1s = Vec::with_capacity(self.comps.len());
        for (comp, cf) in self.comps.iter().zip(&f.comps) {
            let mut v = Mat::from_fn(comp.rows.len(), 1, |i, _| r1[comp.rows[i]]);
            cf.llt.solve_in_place(v.as_mut());
            y1s.push(v);
        }
        let mut t = vec![0.0; nt];
        if let Some(st) = &f.st {
            let mut rhs = Mat::from_fn(nt, 1, |k, _| -r2[k]);
            for (comp, y1) in self.comps.iter().zip(&y1s) {
                for k in 0..nt {
                    let mut s = 0.0;
                    for (i, &r) in comp.rows.iter().enumerate() {
                        s += self.red.a_free[(r, k)] * y1[(i, 0)];
                    }
                    rhs[(k, 0)] += s;
                }
            }
            st.solve_in_place(rhs.as_mut());
            for k in 0..nt {
                t[k] = rhs[(k, 0)];
            }
        }
        for ((comp, cf), y1) in self.comps.iter().zip(&f.comps).zip(&y1s) {
            for (i, &r) in comp.rows.iter().enumerate() {
                let zt: f64 = (0..nt).map(|k| cf.z[(i, k)] * t[k]).sum();
                y[r] = y1[(i, 0)] - zt;
            }
        }
        (y, t)
    }

    /// Solves `[M A_f; A_fᵀ 0] [y; t] = [r1; r2]` with one refinement pass.
    fn solve_k(&self, f: &Factor, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut y, mut t) = self.solve_once(f, r1, r2);
        let mut e1 = r1.to_vec();
        for (comp, cf) in self.comps.iter().zip(&f.comps) {
            let yc = Mat::from_fn(comp.rows.len(), 1, |i, _| y[comp.rows[i]]);
            let my = &cf.m * &yc;
            for (i, &r) in comp.rows.iter().enumerate() {
                e1[r] -= my[(i, 0)];
            }
        }
        let aft = self.af_mul(&t);
        for i in 0..self.red.m {
            e1[i] -= aft[i];
        }
        let afy = self.aft_mul(&y);
        let e2: Vec<f64> = (0..self.red.nt).map(|k| r2[k] - afy[k]).collect();
        let (dy, dt) = self.solve_once(f, &e1, &e2);
        for i in 0..y.len() {
            y[i] += dy[i];
        }
        for k in 0..t.len() {
            t[k] += dt[k];
        }
        (y, t)
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        f: &Factor,
        it: &Iterate,
        res: &Residuals,
        nts: &[Nt],
        wrdw: &[Mat<f64>],
        q: &(Vec<f64>, Vec<f64>),
        d: &[f64],
        cwc: f64,
        eta: f64,
        rc: &[Mat<f64>],
        rtau: f64,
    ) -> Direction {
        let nb = self.red.blocks.len();
        let tmp: Vec<Mat<f64>> = (0..nb)
            .map(|j| {
                let n = self.red.blocks[j].n;
                Mat::from_fn(n, n, |p, q| rc[j][(p, q)] - eta * wrdw[j][(p, q)])
            })
            .collect();
        let at = self.a_blocks(&tmp);
        let h1: Vec<f64> = (0..self.red.m).map(|i| eta * res.rp[i] - at[i]).collect();
        let h2: Vec<f64> = res.rdf.iter().map(|v| eta * v).collect();
        let (py, pt) = self.solve_k(f, &h1, &h2);
        let bd: Vec<f64> = (0..self.red.m).map(|i| self.red.b[i] - d[i]).collect();
        let ctmp: f64 = self
            .red
            .blocks
            .iter()
            .zip(&tmp)
            .map(|(b, t)| mat_dot(&b.c, t))
            .sum();
        let num = eta * res.rg - dot(&bd, &py) + dot(&self.red.c_free, &pt) + ctmp + rtau / it.tau;
        let den = dot(&bd, &q.0) - dot(&self.red.c_free, &q.1) + cwc + it.kappa / it.tau;
        let dtau = num / den;
        let dy: Vec<f64> = (0..self.red.m).map(|i| py[i] + dtau * q.0[i]).collect();
        let dt: Vec<f64> = (0..self.red.nt).map(|k| pt[k] + dtau * q.1[k]).collect();
        let mut dx = Vec::with_capacity(nb);
        let mut ds = Vec::with_capacity(nb);
        for j in 0..nb {
            let c = &self.red.blocks[j].c;
            let aty = self.at_block(j, &dy);
            let n = c.nrows();
            let dsj = Mat::from_fn(n, n, |p, q| {
                eta * res.rd[j][(p, q)] + c[(p, q)] * dtau - aty[(p, q)]
            });
            let w = &nts[j].w;
            let wdsw = mul3(w.as_ref(), dsj.as_ref(), w.as_ref());
            let mut dxj = Mat::from_fn(n, n, |p, q| rc[j][(p, q)] - wdsw[(p, q)]);
            symmetrize(&mut dxj);
            dx.push(dxj);
            ds.push(dsj);
        }
        let dkappa = (rtau - it.kappa * dtau) / it.tau;
        Direction {
            dx,
            ds,
            dy,
            dt,
            dtau,
            dkappa,
        }
    }

    /// Returns the maximal step and the scaled directions `(G⁻¹ΔXG⁻ᵀ, GᵀΔSG)`.
    fn step_length(&self, it: &Iterate, nts: &[Nt], dir: &Direction) -> (f64, Vec<(Mat<f64>, Mat<f64>)>) {
        let mut alpha = f64::INFINITY;
        let mut scaled = Vec::with_capacity(nts.len());
        for (j, nt) in nts.iter().enumerate() {
            let dxs = mul3(nt.ginv.as_ref(), dir.dx[j].as_ref(), nt.ginv.transpose());
            let dss = mul3(nt.g.transpose(), dir.ds[j].as_ref(), nt.g.as_ref());
            alpha = alpha.min(max_step(&nt.lam, &dxs)).min(max_step(&nt.lam, &dss));
            scaled.push((dxs, dss));
        }
        if dir.dtau < 0.0 {
            alpha = alpha.min(-it.tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-it.kappa / dir.dkappa);
        }
        (alpha, scaled)
    }

    fn run(&self, problem: &SdpProblem) -> SdpSolution {
        let nb = self.red.blocks.len();
        let mut it = Iterate {
            x: self.red.blocks.iter().map(|b| Mat::identity(b.n, b.n)).collect(),
            s: self.red.blocks.iter().map(|b| Mat::identity(b.n, b.n)).collect(),
            y: vec![0.0; self.red.m],
            t: vec![0.0; self.red.nt],
            tau: 1.0,
            kappa: 1.0,
        };
        let o = self.opts;
        let mut iterations = 0;
        let mut best: Option<(Metrics, Iterate)> = None;
        let started = std::time::Instant::now();
        let mut since_best = 0usize;
        if o.verbose {
            eprintln!(
                "ipm: {} rows, {} free, blocks {:?}",
                self.red.m,
                self.red.nt,
                self.red.blocks.iter().map(|b| b.n).collect::<Vec<_>>()
            );
        }
        let stalled: String = loop {
            let res = self.residuals(&it);
            let met = self.metrics(&it, &res);
            if o.verbose {
                eprintln!(
                    "{iterations:3} pobj {:+.6e} dobj {:+.6e} pres {:.1e} dres {:.1e} gap {:.1e} mu {:.1e} tau {:.1e} kappa {:.1e} [{:.1}s]",
                    met.pobj,
                    met.dobj,
                    met.pres,
                    met.dres,
                    met.gap,
                    met.mu,
                    it.tau,
                    it.kappa,
                    started.elapsed().as_secs_f64()
                );
            }
            if !(met.pres.is_finite() && met.dres.is_finite() && met.gap.is_finite()) {
                break "non-finite iterate".into();
            }
            let score = met.pres.max(met.dres).max(met.gap);
            since_best += 1;
            if best
                .as_ref()
                .map_or(true, |(b, _)| score < b.pres.max(b.dres).max(b.gap))
            {
                since_best = 0;
                best = Some((
                    met,
                    Iterate {
                        x: it.x.clone(),
                        s: it.s.clone(),
                        y: it.y.clone(),
                        t: it.t.clone(),
                        tau: it.tau,
                        kappa: it.kappa,
                    },
                ));
            }
            if met.pres <= o.feasibility_tol && met.dres <= o.feasibility_tol && met.gap <= o.gap_tol {
                return self.finish(problem, SdpStatus::Optimal, &it, &met, iterations, "converged".into());
            }
            if it.tau < it.kappa {
                if met.primal_ray <= o.infeasibility_tol {
                    return self.finish(problem, SdpStatus::PrimalInfeasible, &it, &met, iterations, "primal infeasibility certificate".into());
                }
                if met.dual_ray <= o.infeasibility_tol {
                    return self.finish(problem, SdpStatus::DualInfeasible, &it, &met, iterations, "dual infeasibility certificate".into());
                }
            }
            if iterations >= o.max_iterations {
                break "iteration limit".into();
            }
            if since_best >= STALL_ITERATIONS && best.as_ref().is_some_and(|(b, _)| b.pres.max(b.dres).max(b.gap) <= o.reduced_tol) {
                break "progress stalled".into();
            }
            iterations += 1;

            let nts: Option<Vec<Nt>> = it.x.iter().zip(&it.s).map(|(x, s)| nt_scaling(x, s)).collect();
            let Some(nts) = nts else {
                break "lost positive definiteness".into();
            };
            let Some(factor) = self.factor(&nts) else {
                break "Schur complement factorization failed".into();
            };
            let wcw: Vec<Mat<f64>> = (0..nb)
                .map(|j| {
                    let w = &nts[j].w;
                    mul3(w.as_ref(), self.red.blocks[j].c.as_ref(), w.as_ref())
                })
                .collect();
            let d = self.a_blocks(&wcw);
            let cwc: f64 = self.red.blocks.iter().zip(&wcw).map(|(b, m)| mat_dot(&b.c, m)).sum();
            let g1: Vec<f64> = (0..self.red.m).map(|i| self.red.b[i] + d[i]).collect();
            let q = self.solve_k(&factor, &g1, &self.red.c_free);
            let wrdw: Vec<Mat<f64>> = (0..nb)
                .map(|j| {
                    let w = &nts[j].w;
                    mul3(w.as_ref(), res.rd[j].as_ref(), w.as_ref())
                })
                .collect();

            // Predictor.
            let rc: Vec<Mat<f64>> = it.x.iter().map(|x| -x).collect();
            let aff = self.direction(&factor, &it, &res, &nts, &wrdw, &q, &d, cwc, 1.0, &rc, -it.tau * it.kappa);
            let (amax, scaled) = self.step_length(&it, &nts, &aff);
            let alpha_a = amax.min(1.0);
            let sigma = (1.0 - alpha_a).powi(3).clamp(0.0, 1.0);
            let mu = met.mu;

            // Corrector.
            let rc: Vec<Mat<f64>> = (0..nb)
                .map(|j| {
                    let nt = &nts[j];
                    let n = nt.lam.len();
                    let (dxs, dss) = &scaled[j];
                    let jp = dxs * dss;
                    let u = Mat::from_fn(n, n, |p, q| {
                        let mut r = -0.5 * (jp[(p, q)] + jp[(q, p)]);
                        if p == q {
                            r += sigma * mu - nt.lam[p] * nt.lam[p];
                        }
                        2.0 * r / (nt.lam[p] + nt.lam[q])
                    });
                    let mut out = mul3(nt.g.as_ref(), u.as_ref(), nt.g.transpose());
                    symmetrize(&mut out);
                    out
                })
                .collect();
            let rtau = sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa;
            let dir = self.direction(&factor, &it, &res, &nts, &wrdw, &q, &d, cwc, 1.0 - sigma, &rc, rtau);
            let (amax, _) = self.step_length(&it, &nts, &dir);
            let alpha = (o.step_fraction * amax).min(1.0);
            if !(alpha > 1e-10) {
                break "step length collapsed".into();
            }
            for j in 0..nb {
                let n = it.x[j].nrows();
                for q in 0..n {
                    for p in 0..n {
                        it.x[j][(p, q)] += alpha * dir.dx[j][(p, q)];
                        it.s[j][(p, q)] += alpha * dir.ds[j][(p, q)];
                    }
                }
                symmetrize(&mut it.x[j]);
                symmetrize(&mut it.s[j]);
            }
            for i in 0..self.red.m {
                it.y[i] += alpha * dir.dy[i];
            }
            for k in 0..self.red.nt {
                it.t[k] += alpha * dir.dt[k];
            }
            it.tau += alpha * dir.dtau;
            it.kappa += alpha * dir.dkappa;

            // Keep the embedding bounded when the iterate blows up along a ray.
            let scale = it.tau.max(it.kappa);
            if scale > 1e8 {
                let inv = 1.0 / scale;
                for j in 0..nb {
                    it.x[j] = &it.x[j] * Scale(inv);
                    it.s[j] = &it.s[j] * Scale(inv);
                }
                it.y.iter_mut().for_each(|v| *v *= inv);
                it.t.iter_mut().for_each(|v| *v *= inv);
                it.tau *= inv;
                it.kappa *= inv;
            }
        };

        let (met, best_it) = match best {
            Some((m, b)) => (m, b),
            None => {
                return SdpSolution::failed(
                    SdpStatus::NumericalFailure,
                    stalled,
                    problem.n_free(),
                    problem.block_sizes(),
                    problem.constraints().len(),
                )
            }
        };
        let r = o.reduced_tol;
        if met.pres <= r && met.dres <= r && met.gap <= r {
            return self.finish(problem, SdpStatus::Optimal, &best_it, &met, iterations, format!("reduced accuracy ({stalled})"));
        }
        let res = self.residuals(&it);
        let last = self.metrics(&it, &res);
        if last.primal_ray <= r && it.tau < it.kappa {
            return self.finish(problem, SdpStatus::PrimalInfeasible, &it, &last, iterations, format!("approximate infeasibility certificate ({stalled})"));
        }
        if last.dual_ray <= r && it.tau < it.kappa {
            return self.finish(problem, SdpStatus::DualInfeasible, &it, &last, iterations, format!("approximate unboundedness certificate ({stalled})"));
        }
        self.finish(problem, SdpStatus::NumericalFailure, &best_it, &met, iterations, stalled)
    }

    fn finish(
        &self,
        problem: &SdpProblem,
        status: SdpStatus,
        it: &Iterate,
        met: &Metrics,
        iterations: usize,
        message: String,
    ) -> SdpSolution {
        // Certificates are reported unnormalized by τ.
        let (pdiv, ddiv) = match status {
            SdpStatus::PrimalInfeasible => (1.0, dot(&self.red.b, &it.y).abs().max(1e-300)),
            SdpStatus::DualInfeasible => (self.primal_cost(it).abs().max(1e-300), 1.0),
            _ => (it.tau, it.tau),
        };
        let ps = self.bscale / pdiv;
        let ds = self.cscale / ddiv;
        let t: Vec<f64> = it.t.iter().map(|v| v * ps).collect();
        let free = self.red.recover_free(&t);
        let blocks: Vec<SymMatrix> = it.x.iter().map(|x| SymMatrix::from_mat(&(x * Scale(ps)))).collect();
        let mut dual = vec![0.0; problem.constraints().len()];
        for (i, &orig) in self.red.row_map.iter().enumerate() {
            dual[orig] = it.y[i] * ds * self.red.row_scale[i];
        }
        let mut primal_objective: f64 = problem.objective_free().iter().map(|&(i, c)| c * free[i]).sum();
        for e in problem.objective_psd() {
            primal_objective += e.coef * blocks[e.block].get(e.row, e.col);
        }
        let dual_objective = met.dobj * self.bscale * self.cscale + self.red.objective_offset;
        SdpSolution {
            status,
            free,
            blocks,
            dual,
            primal_objective,
            dual_objective,
            iterations,
            primal_residual: met.pres,
            dual_residual: met.dres,
            gap: met.gap,
            message,
        }
    }
}
