//! Elimination of rows that involve only free variables, followed by row
//! equilibration. Singleton rows fix their variable exactly; the remaining
//! free-only rows are solved through an SVD null-space parametrization.

use std::collections::BTreeMap;

use faer::Mat;

use crate::{SdpProblem, SdpStatus};

pub(crate) struct BlockRow {
    pub row: usize,
    /// Upper-triangle functional entries `(k, l, a)` meaning `a · X[k][l]`.
    pub upper: Vec<(usize, usize, f64)>,
    /// Mirrored rank-one pairs: `A = Σ coef · e_k e_lᵀ`.
    pub pair_k: Vec<usize>,
    pub pair_l: Vec<usize>,
    pub pair_coef: Vec<f64>,
}

pub(crate) struct Block {
    pub n: usize,
    pub rows: Vec<BlockRow>,
    pub c: Mat<f64>,
}

/// Affine map from reduced free variables back to one original variable.
#[derive(Clone, Debug)]
struct Affine {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

pub(crate) struct Reduced {
    pub m: usize,
    pub nt: usize,
    pub a_free: Mat<f64>,
    pub c_free: Vec<f64>,
    pub b: Vec<f64>,
    pub blocks: Vec<Block>,
    pub objective_offset: f64,
    /// Reduced row → original constraint index.
    pub row_map: Vec<usize>,
    pub row_scale: Vec<f64>,
    free_map: Vec<Affine>,
}

impl Reduced {
    pub fn recover_free(&self, t: &[f64]) -> Vec<f64> {
        self.free_map
            .iter()
            .map(|a| a.constant + a.terms.iter().map(|&(j, c)| c * t[j]).sum::<f64>())
            .collect()
    }
}

pub(crate) enum Presolved {
    Reduced(Reduced),
    Trivial(SdpStatus, String),
}

pub(crate) fn presolve(p: &SdpProblem) -> Presolved {
    let nf = p.n_free();
    let nblocks = p.block_sizes().len();

    struct Row {
        free: BTreeMap<usize, f64>,
        psd: BTreeMap<(usize, usize, usize), f64>,
        rhs: f64,
    }
    let rows: Vec<Row> = p
        .constraints()
        .iter()
        .map(|c| {
            let mut free = BTreeMap::new();
            for &(i, a) in &c.free {
                *free.entry(i).or_insert(0.0) += a;
            }
            free.retain(|_, a: &mut f64| *a != 0.0);
            let mut psd = BTreeMap::new();
            for e in &c.psd {
                *psd.entry((e.block, e.row, e.col)).or_insert(0.0) += e.coef;
            }
            psd.retain(|_, a: &mut f64| *a != 0.0);
            Row {
                free,
                psd,
                rhs: c.rhs,
            }
        })
        .collect();

    let mut fixed: Vec<Option<f64>> = vec![None; nf];
    let free_only: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].psd.is_empty()).collect();
    let mut done = vec![false; rows.len()];
    loop {
        let mut changed = false;
        for &i in &free_only {
            if done[i] {
                continue;
            }
            let row = &rows[i];
            let mut rhs = row.rhs;
            let mut scale = row.rhs.abs();
            let mut unfixed = Vec::new();
            for (&j, &a) in &row.free {
                match fixed[j] {
                    Some(v) => {
                        rhs -= a * v;
                        scale = scale.max((a * v).abs());
                    }
                    None => unfixed.push((j, a)),
                }
            }
            match unfixed.len() {
                0 => {
                    if rhs.abs() > 1e-9 * scale.max(1.0) {
                        return Presolved::Trivial(
                            SdpStatus::PrimalInfeasible,
                            format!("inconsistent free-variable equality in row {i}"),
                        );
                    }
                    done[i] = true;
                }
                1 => {
                    let (j, a) = unfixed[0];
                    fixed[j] = Some(rhs / a);
                    done[i] = true;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    // Dense null-space parametrization of whatever free-only rows remain.
    let rest: Vec<usize> = free_only.iter().copied().filter(|&i| !done[i]).collect();
    let mut j_index: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &rest {
        for &j in rows[i].free.keys() {
            if fixed[j].is_none() {
                let k = j_index.len();
                j_index.entry(j).or_insert(k);
            }
        }
    }
    let mut free_map: Vec<Affine> = vec![
        Affine {
            constant: 0.0,
            terms: Vec::new()
        };
        nf
    ];
    let mut nt0 = 0;
    for j in 0..nf {
        if let Some(v) = fixed[j] {
            free_map[j].constant = v;
        } else if !j_index.contains_key(&j) {
            free_map[j].terms.push((nt0, 1.0));
            nt0 += 1;
        }
    }
    if !rest.is_empty() {
        let nj = j_index.len();
        let mut f = Mat::<f64>::zeros(rest.len(), nj);
        let mut r = vec![0.0; rest.len()];
        for (ri, &i) in rest.iter().enumerate() {
            r[ri] = rows[i].rhs;
            for (&j, &a) in &rows[i].free {
                match fixed[j] {
                    Some(v) => r[ri] -= a * v,
                    None => f[(ri, j_index[&j])] += a,
                }
            }
        }
        let svd = match f.svd() {
            Ok(s) => s,
            Err(_) => {
                return Presolved::Trivial(
                    SdpStatus::NumericalFailure,
                    "SVD failed during presolve".into(),
                )
            }
        };
        let s = svd.S().column_vector();
        let u = svd.U();
        let v = svd.V();
        let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
        let rank = (0..s.nrows()).filter(|&k| s[k] > 1e-10 * smax).count();
        let mut x0 = vec![0.0; nj];
        for k in 0..rank {
            let coef: f64 = (0..rest.len()).map(|ri| u[(ri, k)] * r[ri]).sum::<f64>() / s[k];
            for (jj, x) in x0.iter_mut().enumerate() {
                *x += coef * v[(jj, k)];
            }
        }
        let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let resid = (0..rest.len())
            .map(|ri| {
                let fx: f64 = (0..nj).map(|jj| f[(ri, jj)] * x0[jj]).sum();
                (fx - r[ri]).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        if resid > 1e-8 * (1.0 + rnorm) {
            return Presolved::Trivial(
                SdpStatus::PrimalInfeasible,
                "inconsistent free-variable equalities".into(),
            );
        }
        for (&j, &jj) in &j_index {
            free_map[j].constant = x0[jj];
            for k in rank..nj {
                let c = v[(jj, k)];
                if c != 0.0 {
                    free_map[j].terms.push((nt0 + k - rank, c));
                }
            }
        }
        nt0 += nj - rank;
    }

    // Rows with PSD entries, expressed in the reduced free variables.
    let psd_rows: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].psd.is_empty()).collect();
    let mut row_free: Vec<BTreeMap<usize, f64>> = Vec::with_capacity(psd_rows.len());
    let mut b = Vec::with_capacity(psd_rows.len());
    for &i in &psd_rows {
        let mut acc = BTreeMap::new();
        let mut rhs = rows[i].rhs;
        let amax = rows[i].free.values().fold(0.0f64, |m, a| m.max(a.abs()));
        for (&j, &a) in &rows[i].free {
            rhs -= a * free_map[j].constant;
            for &(k, c) in &free_map[j].terms {
                *acc.entry(k).or_insert(0.0) += a * c;
            }
        }
        acc.retain(|_, a: &mut f64| a.abs() > 1e-14 * amax);
        row_free.push(acc);
        b.push(rhs);
    }
    let mut c0 = vec![0.0; nt0];
    let mut objective_offset = 0.0;
    for &(j, c) in p.objective_free() {
        objective_offset += c * free_map[j].constant;
        for &(k, a) in &free_map[j].terms {
            c0[k] += c * a;
        }
    }

    // Drop reduced variables that appear in no remaining row.
    let mut used = vec![false; nt0];
    for acc in &row_free {
        for (&k, &a) in acc {
            if a != 0.0 {
                used[k] = true;
            }
        }
    }
    let cmax = c0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut new_index = vec![usize::MAX; nt0];
    let mut nt = 0;
    for k in 0..nt0 {
        if used[k] {
            new_index[k] = nt;
            nt += 1;
        } else if c0[k].abs() > 1e-12 * (1.0 + cmax) {
            return Presolved::Trivial(
                SdpStatus::DualInfeasible,
                "objective depends on an unconstrained free variable".into(),
            );
        }
    }
    for a in &mut free_map {
        a.terms.retain(|&(k, _)| used[k]);
        for t in &mut a.terms {
            t.0 = new_index[t.0];
        }
    }
    let c_free: Vec<f64> = (0..nt0).filter(|&k| used[k]).map(|k| c0[k]).collect();

    // Row equilibration.
    let m = psd_rows.len();
    let mut row_scale = vec![1.0; m];
    for (ri, &i) in psd_rows.iter().enumerate() {
        let mut norm2: f64 = row_free[ri].values().map(|a| a * a).sum();
        for (&(_, k, l), &a) in &rows[i].psd {
            norm2 += if k == l { a * a } else { 0.5 * a * a };
        }
        row_scale[ri] = if norm2 > 0.0 { 1.0 / norm2.sqrt() } else { 1.0 };
    }
    let mut a_free = Mat::<f64>::zeros(m, nt);
    for (ri, acc) in row_free.iter().enumerate() {
        for (&k, &a) in acc {
            if used[k] {
                a_free[(ri, new_index[k])] = a * row_scale[ri];
            }
        }
        b[ri] *= row_scale[ri];
    }

    let mut blocks: Vec<Block> = p
        .block_sizes()
        .iter()
        .map(|&n| Block {
            n,
            rows: Vec::new(),
            c: Mat::zeros(n, n),
        })
        .collect();
    for (ri, &i) in psd_rows.iter().enumerate() {
        let s = row_scale[ri];
        let mut current: Option<BlockRow> = None;
        let mut current_block = usize::MAX;
        for (&(blk, k, l), &a) in &rows[i].psd {
            if blk != current_block {
                if let Some(r) = current.take() {
                    blocks[current_block].rows.push(r);
                }
                current_block = blk;
                current = Some(BlockRow {
                    row: ri,
                    upper: Vec::new(),
                    pair_k: Vec::new(),
                    pair_l: Vec::new(),
                    pair_coef: Vec::new(),
                });
            }
            let r = current.as_mut().unwrap();
            let a = a * s;
            r.upper.push((k, l, a));
            if k == l {
                r.pair_k.push(k);
                r.pair_l.push(k);
                r.pair_coef.push(a);
            } else {
                r.pair_k.extend([k, l]);
                r.pair_l.extend([l, k]);
                r.pair_coef.extend([0.5 * a, 0.5 * a]);
            }
        }
        if let Some(r) = current.take() {
            blocks[current_block].rows.push(r);
        }
    }
    for e in p.objective_psd() {
        let c = &mut blocks[e.block].c;
        if e.row == e.col {
            c[(e.row, e.row)] += e.coef;
        } else {
            c[(e.row, e.col)] += 0.5 * e.coef;
            c[(e.col, e.row)] += 0.5 * e.coef;
        }
    }
    debug_assert_eq!(blocks.len(), nblocks);

    Presolved::Reduced(Reduced {
        m,
        nt,
        a_free,
        c_free,
        b,
        blocks,
        objective_offset,
        row_map: psd_rows,
        row_scale,
        free_map,
    })
}
