use crate::RoaError;

/// Corners of the parallelogram cut out by two pairs of parallel lines
/// `a·p + b·q = ±c` in the plane of state coordinates `axes`, in polygon
/// order, embedded in `dim` dimensions with zeros elsewhere.
pub fn vertex_anchors(
    lines: [(f64, f64, f64); 2],
    axes: (usize, usize),
    dim: usize,
) -> Result<Vec<Vec<f64>>, RoaError> {
    if axes.0 >= dim || axes.1 >= dim || axes.0 == axes.1 {
        return Err(RoaError::Config(format!("plane axes {axes:?} invalid in {dim} dimensions")));
    }
    let [(a1, b1, c1), (a2, b2, c2)] = lines;
    let det = a1 * b2 - b1 * a2;
    let scale = a1.hypot(b1) * a2.hypot(b2);
    if !(det.abs() > 1e-12 * scale) {
        return Err(RoaError::DegenerateLines);
    }
    let corners = [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)];
    Ok(corners
        .iter()
        .map(|(s1, s2)| {
            let (r1, r2) = (s1 * c1, s2 * c2);
            let mut x = vec![0.0; dim];
            x[axes.0] = (r1 * b2 - b1 * r2) / det;
            x[axes.1] = (a1 * r2 - r1 * a2) / det;
            x
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_diamond() {
        let pts = vertex_anchors([(-1.0, -1.0, 1.0), (-1.0, 1.0, 1.0)], (0, 1), 2).unwrap();
        let mut got: Vec<(i64, i64)> = pts
            .iter()
            .map(|p| (p[0].round() as i64, p[1].round() as i64))
            .collect();
        got.sort();
        assert_eq!(got, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
        for p in &pts {
            assert!(p.iter().all(|c| (c - c.round()).abs() < 1e-15));
        }
    }

    #[test]
    fn parallel_lines_rejected() {
        let r = vertex_anchors([(1.0, 2.0, 1.0), (2.0, 4.0, 3.0)], (0, 1), 7);
        assert!(matches!(r, Err(RoaError::DegenerateLines)));
    }

    #[test]
    fn embedding_places_zeros() {
        let pts = vertex_anchors([(1.0, 0.0, 2.0), (0.0, 1.0, 3.0)], (0, 1), 7).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0], vec![2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
