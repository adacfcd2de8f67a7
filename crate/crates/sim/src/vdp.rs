use crate::dopri::{Dopri5, StepOutcome};

/// Time-reversed Van der Pol: `ẋ = −y`, `ẏ = x + μ(x² − 1)y`.
pub fn vdp_field(mu: f64) -> impl Fn(&[f64], &mut [f64]) + Sync + Send + Copy {
    move |x: &[f64], dx: &mut [f64]| {
        dx[0] = -x[1];
        dx[1] = x[0] + mu * (x[0] * x[0] - 1.0) * x[1];
    }
}

/// One period of the unstable limit cycle, traced in backward time where
/// it attracts.
pub fn vdp_limit_cycle(mu: f64) -> Vec<[f64; 2]> {
    let f = vdp_field(mu);
    let back = move |x: &[f64], dx: &mut [f64]| {
        f(x, dx);
        dx[0] = -dx[0];
        dx[1] = -dx[1];
    };
    let integ = Dopri5 {
        rtol: 1e-11,
        atol: 1e-12,
        ..Dopri5::default()
    };
    let mut x = vec![2.0, 0.0];
    integ.run(&back, 0.0, &[2.0, 0.0], 100.0, |s| {
        x.copy_from_slice(s.x1);
        StepOutcome::Continue
    });
    // record until the orbit returns to the half line through the start
    let start = [x[0], x[1]];
    let mut pts = vec![start];
    let mut buf = [0.0; 2];
    let mut prev_side = 0.0f64;
    let mut travelled = 0.0;
    integ.run(&back, 0.0, &start, 100.0, |s| {
        let sub = 20;
        for k in 1..=sub {
            let t = s.t0 + (s.t1 - s.t0) * k as f64 / sub as f64;
            s.interpolate(t, &mut buf);
            let last = *pts.last().unwrap();
            travelled += ((buf[0] - last[0]).powi(2) + (buf[1] - last[1]).powi(2)).sqrt();
            // signed distance to the line through the origin and `start`
            let side = start[0] * buf[1] - start[1] * buf[0];
            let same_half = start[0] * buf[0] + start[1] * buf[1] > 0.0;
            if travelled > 1.0 && same_half && prev_side != 0.0 && side.signum() != prev_side.signum() {
                return StepOutcome::Stop;
            }
            prev_side = side;
            pts.push(buf);
        }
        StepOutcome::Continue
    });
    pts
}

/// Shoelace area of a closed polygon.
pub fn polygon_area(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    let s: f64 = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    0.5 * s.abs()
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}
