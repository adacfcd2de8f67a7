/// Line piece of an extracted level curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// Marching squares with linear interpolation along cell edges.
///
/// `values[j * nx + i]` is sampled at `(xs[i], ys[j])`. Saddle cells are
/// resolved with the cell-centre average.
pub fn marching_squares(xs: &[f64], ys: &[f64], values: &[f64], level: f64) -> Vec<Segment> {
    let (nx, ny) = (xs.len(), ys.len());
    assert_eq!(values.len(), nx * ny, "grid size mismatch");
    let mut out = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            // corners counter-clockwise from the lower left
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: [f64; 4] = c.map(|(a, b)| values[b * nx + a] - level);
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let p: [[f64; 2]; 4] = c.map(|(a, b)| [xs[a], ys[b]]);
            let cross = |k: usize| {
                let l = (k + 1) % 4;
                let t = v[k] / (v[k] - v[l]);
                [p[k][0] + t * (p[l][0] - p[k][0]), p[k][1] + t * (p[l][1] - p[k][1])]
            };
            let inside: [bool; 4] = v.map(|x| x < 0.0);
            let edges: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
            match edges.len() {
                2 => out.push(Segment {
                    a: cross(edges[0]),
                    b: cross(edges[1]),
                }),
                4 => {
                    let centre_inside = v.iter().sum::<f64>() < 0.0;
                    // pair each crossing with a neighbour so the segments
                    // separate the corners that disagree with the centre
                    let pairs = if inside[0] == centre_inside {
                        [(0, 1), (2, 3)]
                    } else {
                        [(3, 0), (1, 2)]
                    };
                    for (s, t) in pairs {
                        out.push(Segment { a: cross(s), b: cross(t) });
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// Evenly spaced nodes including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}
