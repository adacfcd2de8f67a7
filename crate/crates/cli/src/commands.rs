use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sosroa_engine::{estimate_roa_with_progress, IterationRecord, LyapunovCertificate, StepReport};
use sosroa_poly::VarSet;
use sosroa_sim::{
    certificate_soundness, classify, simulate, sweep_plane, CertifiedSampler, ClassificationGrid, PlaneSpec,
    SoundnessReport, Trajectory,
};
use sosroa_sos::{InteriorPointSolver, SolverOptions};
use sosroa_vehicle::{slip_angles, STATE_SCALES};

use crate::config::TOOL_VERSION;
use crate::contour::{linspace, marching_squares, Segment};
use crate::output::{csv, write};
use crate::{CliError, Context};

/// Parses `a,b` as two variable names or two indices.
pub fn parse_plane(spec: &str, vars: &VarSet) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || CliError::Input(format!("--plane `{spec}`: expected two distinct states of {:?}", vars.names()));
    if parts.len() != 2 {
        return Err(bad());
    }
    let index = |p: &str| -> Result<usize, CliError> {
        if let Some(i) = vars.names().iter().position(|n| n == p) {
            return Ok(i);
        }
        p.parse::<usize>().ok().filter(|&i| i < vars.len()).ok_or_else(bad)
    };
    let (a, b) = (index(parts[0])?, index(parts[1])?);
    if a == b {
        return Err(bad());
    }
    Ok((a, b))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

// ---------------------------------------------------------------- estimate

/// Runs the iterative estimation; returns the certificate and wall time.
pub fn estimate(
    ctx: &Context,
    verbose: bool,
    progress: &mut dyn FnMut(&IterationRecord),
) -> Result<(LyapunovCertificate, f64), CliError> {
    let field = ctx.scenario.polynomial_field();
    let solver = InteriorPointSolver::new(SolverOptions {
        verbose,
        ..SolverOptions::default()
    });
    let start = Instant::now();
    let cert = estimate_roa_with_progress(&field, &ctx.roa, &solver, progress)?;
    Ok((cert, start.elapsed().as_secs_f64()))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    tool: &'a str,
    scenario: String,
    scenario_name: &'a str,
    seed: u64,
    config_hash: &'a str,
    roa: &'a sosroa_engine::RoaConfig,
    run: &'a crate::RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<String>,
    files: Vec<String>,
}

fn write_manifest(ctx: &Context, dir: &Path, command: &str, certificate: Option<&Path>, files: &[&str]) -> Result<(), CliError> {
    let m = Manifest {
        command,
        tool: TOOL_VERSION,
        scenario: ctx.scenario.path.display().to_string(),
        scenario_name: &ctx.scenario.name,
        seed: ctx.seed,
        config_hash: &ctx.config_hash,
        roa: &ctx.roa,
        run: &ctx.run,
        certificate: certificate.map(|p| p.display().to_string()),
        files: files.iter().map(|s| s.to_string()).collect(),
    };
    write(dir, "manifest.json", &serde_json::to_string_pretty(&m).expect("manifest serializes"))?;
    Ok(())
}

fn step_row(iteration: usize, s: &StepReport, r: Option<&IterationRecord>) -> Vec<String> {
    vec![
        iteration.to_string(),
        s.step.clone(),
        s.status.replace(',', ";"),
        s.degree.map(|d| d.to_string()).unwrap_or_default(),
        num(s.objective),
        s.decision_variables.to_string(),
        format!("{:.3}", s.seconds),
        r.map(|r| num(r.rho)).unwrap_or_default(),
        opt(r.and_then(|r| r.trace_p_shape)),
        opt(r.and_then(|r| r.trace_p)),
        opt(r.and_then(|r| r.gamma)),
        r.map(|r| r.accepted.to_string()).unwrap_or_default(),
    ]
}

pub fn write_estimate(ctx: &Context, dir: &Path, cert: &LyapunovCertificate, seconds: f64) -> Result<(), CliError> {
    write(dir, "certificate.json", &cert.to_json())?;
    let mut rows = Vec::new();
    if let Some(init) = &cert.init {
        rows.push(step_row(0, init, None));
    }
    for r in &cert.trace {
        for s in &r.steps {
            rows.push(step_row(r.iteration, s, Some(r)));
        }
    }
    let mut header = ctx.header();
    header.push(format!("converged {} after {} iterations in {seconds:.1} s", cert.converged, cert.trace.len()));
    let cols = [
        "iteration",
        "step",
        "status",
        "degree",
        "objective",
        "decision_variables",
        "seconds",
        "rho",
        "trace_p_shape",
        "trace_p",
        "gamma",
        "accepted",
    ];
    write(dir, "trace.csv", &csv(&header, &cols, rows))?;
    write_manifest(ctx, dir, "estimate", None, &["certificate.json", "trace.csv"])
}

// ------------------------------------------------------------------- slice

pub struct SliceResult {
    pub axes: (usize, usize),
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[j * nx + i]` is `V` at `(xs[i], ys[j])`.
    pub values: Vec<f64>,
    pub contour: Vec<Segment>,
}

/// Bounding box of `{V ≤ 1}` in a plane, found along rays from the origin
/// and padded by 20 %.
pub fn slice_extent(cert: &LyapunovCertificate, axes: (usize, usize)) -> ([f64; 2], [f64; 2]) {
    let ev = cert.evaluator();
    let n = cert.vars().len();
    let mut x = vec![0.0; n];
    let (mut bx, mut by) = (0.0f64, 0.0f64);
    for k in 0..720 {
        let th = std::f64::consts::TAU * k as f64 / 720.0;
        let (c, s) = (th.cos(), th.sin());
        let mut at = |r: f64| {
            x[axes.0] = r * c;
            x[axes.1] = r * s;
            ev.evaluate(&x)
        };
        let (mut lo, mut hi) = (0.0, 1e-6);
        while at(hi) <= 1.0 && hi < 1e6 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if at(mid) <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        bx = bx.max((hi * c).abs());
        by = by.max((hi * s).abs());
    }
    ([-1.2 * bx, 1.2 * bx], [-1.2 * by, 1.2 * by])
}

pub fn slice(
    cert: &LyapunovCertificate,
    axes: (usize, usize),
    x_range: [f64; 2],
    y_range: [f64; 2],
    grid: usize,
) -> Result<SliceResult, CliError> {
    let n = cert.vars().len();
    if axes.0 >= n || axes.1 >= n || axes.0 == axes.1 {
        return Err(CliError::Input(format!("plane {axes:?} invalid for {n} states")));
    }
    if grid < 2 {
        return Err(CliError::Input("--grid must be at least 2".into()));
    }
    let ev = cert.evaluator();
    let xs = linspace(x_range[0], x_range[1], grid);
    let ys = linspace(y_range[0], y_range[1], grid);
    let mut x = vec![0.0; n];
    let mut values = Vec::with_capacity(grid * grid);
    for &b in &ys {
        for &a in &xs {
            x[axes.0] = a;
            x[axes.1] = b;
            values.push(ev.evaluate(&x));
        }
    }
    let contour = marching_squares(&xs, &ys, &values, 1.0);
    Ok(SliceResult {
        axes,
        xs,
        ys,
        values,
        contour,
    })
}

pub fn write_slice(ctx: &Context, dir: &Path, cert_path: &Path, s: &SliceResult) -> Result<(), CliError> {
    let names = ctx.scenario.vars().names().to_vec();
    let (a, b) = (names[s.axes.0].as_str(), names[s.axes.1].as_str());
    let header = ctx.header();
    let nx = s.xs.len();
    let grid_rows = s.values.iter().enumerate().map(|(k, v)| vec![num(s.xs[k % nx]), num(s.ys[k / nx]), num(*v)]);
    write(dir, "slice.csv", &csv(&header, &[a, b, "V"], grid_rows))?;
    let seg_rows = s.contour.iter().enumerate().map(|(k, g)| {
        vec![k.to_string(), num(g.a[0]), num(g.a[1]), num(g.b[0]), num(g.b[1])]
    });
    let c1 = format!("{a}1");
    let c2 = format!("{b}1");
    let c3 = format!("{a}2");
    let c4 = format!("{b}2");
    write(dir, "contour.csv", &csv(&header, &["segment", &c1, &c2, &c3, &c4], seg_rows))?;
    let mut files = vec!["slice.csv", "contour.csv"];
    if let (Some(par), (0, 1)) = (ctx.scenario.slip_parallelogram(), s.axes) {
        let rows = par.iter().map(|p| vec![num(p[0]), num(p[1])]);
        write(dir, "parallelogram.csv", &csv(&header, &["v", "r"], rows))?;
        files.push("parallelogram.csv");
    }
    write_manifest(ctx, dir, "slice", Some(cert_path), &files)
}

// ------------------------------------------------------------------- sweep

pub fn default_sweep_ranges(ctx: &Context, axes: (usize, usize)) -> ([f64; 2], [f64; 2]) {
    let half = |i: usize| -> f64 {
        match ctx.scenario.slip_parallelogram() {
            None => 3.0,
            Some(par) if i < 2 => 1.5 * par.iter().map(|p| p[i].abs()).fold(0.0, f64::max),
            Some(_) => 0.5 * STATE_SCALES[i],
        }
    };
    let (a, b) = (half(axes.0), half(axes.1));
    ([-a, a], [-b, b])
}

pub fn sweep_horizon(ctx: &Context) -> f64 {
    ctx.run.sweep.horizon.unwrap_or(if ctx.is_vehicle() { 10.0 } else { 30.0 })
}

pub fn sweep(ctx: &Context, axes: (usize, usize), grid: usize) -> Result<ClassificationGrid, CliError> {
    let (dx, dy) = default_sweep_ranges(ctx, axes);
    let x_range = ctx.run.sweep.x_range.unwrap_or(dx);
    let y_range = ctx.run.sweep.y_range.unwrap_or(dy);
    let plane = PlaneSpec::new(ctx.scenario.dim(), axes, (x_range[0], x_range[1]), (y_range[0], y_range[1]), grid);
    let field = if ctx.run.sweep.polynomial {
        ctx.scenario.poly_field()
    } else {
        ctx.scenario.full_field()
    };
    let constraints = ctx.scenario.sim_constraints(&ctx.roa)?;
    let opts = ctx.scenario.sim_options(sweep_horizon(ctx));
    sweep_plane(&plane, &*field, &constraints, &opts).map_err(|e| CliError::Input(e.to_string()))
}

pub fn write_sweep(ctx: &Context, dir: &Path, g: &ClassificationGrid) -> Result<(), CliError> {
    let header = ctx.header();
    write(dir, "sweep.csv", &g.to_csv(&header))?;
    let rows = g.boundaries().into_iter().map(|s| {
        let label = if s.inner == sosroa_sim::Region::Safe {
            g.region_label(s.outer)
        } else {
            format!("{}|{}", g.region_label(s.inner), g.region_label(s.outer))
        };
        vec![
            num(s.a.0),
            num(s.a.1),
            num(s.b.0),
            num(s.b.1),
            g.region_label(s.inner),
            g.region_label(s.outer),
            label,
        ]
    });
    let cols = ["x1", "y1", "x2", "y2", "inner", "outer", "label"];
    write(dir, "boundaries.csv", &csv(&header, &cols, rows))?;
    write_manifest(ctx, dir, "sweep", None, &["sweep.csv", "boundaries.csv"])
}

// ---------------------------------------------------------------- validate

#[derive(Clone, Debug, Serialize)]
pub struct FieldCheck {
    pub field: &'static str,
    pub threshold: f64,
    pub safe_fraction: f64,
    pub passed: bool,
    pub report: SoundnessReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub level: f64,
    pub horizon: f64,
    pub checks: Vec<FieldCheck>,
    pub passed: bool,
}

/// Samples `{V ≤ level}` and simulates the polynomial field (and, for the
/// vehicle, the exact field) from every sample.
pub fn validate(ctx: &Context, cert: &LyapunovCertificate) -> Result<ValidationReport, CliError> {
    if cert.vars() != &ctx.scenario.vars() {
        return Err(CliError::Input(format!(
            "certificate variables {:?} do not match the scenario {:?}",
            cert.vars().names(),
            ctx.scenario.vars().names()
        )));
    }
    let vc = &ctx.run.validate;
    if vc.samples == 0 {
        return Err(CliError::Input("validation sample budget is zero".into()));
    }
    let horizon = vc.horizon.unwrap_or(if ctx.is_vehicle() { 10.0 } else { 20.0 });
    let opts = ctx.scenario.sim_options(horizon);
    let constraints = ctx.scenario.sim_constraints(&cert.config)?;
    let mut fields: Vec<(&'static str, f64, Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync + '_>)> =
        vec![("polynomial", 1.0, ctx.scenario.poly_field())];
    if ctx.is_vehicle() {
        fields.push(("full", vc.full_threshold.unwrap_or(0.99), ctx.scenario.full_field()));
    }
    let mut checks = Vec::new();
    for (name, threshold, f) in fields {
        let report = certificate_soundness(&cert.v, Some(&cert.p), vc.level, &*f, &constraints, &opts, vc.samples, ctx.seed)
            .map_err(|e| CliError::Pipeline(format!("sampling: {e}")))?;
        let safe_fraction = report.safe_fraction();
        checks.push(FieldCheck {
            field: name,
            threshold,
            safe_fraction,
            passed: safe_fraction >= threshold,
            report,
        });
    }
    Ok(ValidationReport {
        level: vc.level,
        horizon,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

pub fn write_validation(
    ctx: &Context,
    dir: &Path,
    cert_path: &Path,
    cert: &LyapunovCertificate,
    r: &ValidationReport,
) -> Result<(), CliError> {
    write(dir, "report.json", &serde_json::to_string_pretty(r).expect("report serializes"))?;
    let mut files = vec!["report.json".to_string()];
    let header = ctx.header();
    let names: Vec<String> = ctx.scenario.vars().names().to_vec();
    for check in &r.checks {
        let rows = check.report.counterexamples.iter().map(|c| {
            let mut row: Vec<String> = c.x0.iter().map(|x| num(*x)).collect();
            row.push(c.classification.verdict.as_str().into());
            row.push(num(cert.value(&c.x0).unwrap_or(f64::NAN)));
            row
        });
        let mut cols: Vec<&str> = names.iter().map(String::as_str).collect();
        cols.extend(["verdict", "V"]);
        let name = format!("counterexamples_{}.csv", check.field);
        write(dir, &name, &csv(&header, &cols, rows))?;
        files.push(name);
        let field = if check.field == "full" {
            ctx.scenario.full_field()
        } else {
            ctx.scenario.poly_field()
        };
        let constraints = ctx.scenario.sim_constraints(&cert.config)?;
        let opts = sosroa_sim::SimOptions {
            stop_on_convergence: false,
            ..ctx.scenario.sim_options(r.horizon)
        };
        for (k, c) in check.report.counterexamples.iter().take(ctx.run.validate.counterexample_trajectories).enumerate() {
            let t = simulate(&*field, &c.x0, &constraints, &opts, true);
            let name = format!("counterexample_{}_{k:03}.csv", check.field);
            write(dir, &name, &trajectory_csv(ctx, &header, &t))?;
            files.push(name);
        }
    }
    let refs: Vec<&str> = files.iter().map(String::as_str).collect();
    write_manifest(ctx, dir, "validate", Some(cert_path), &refs)
}

// ------------------------------------------------------------ trajectories

#[derive(Clone, Debug)]
pub struct TrajectoryPair {
    pub x0: Vec<f64>,
    pub full: Trajectory,
    /// Absent when the start lies outside the fitted tire range.
    pub poly: Option<Trajectory>,
    /// `‖Δ/s‖` over `‖x_full/s‖`, both root-mean-square over time.
    pub relative_rms: Option<f64>,
}

/// Uniform samples from `{V ≤ level}`.
pub fn certified_points(cert: &LyapunovCertificate, level: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
    let sampler =
        CertifiedSampler::new(&cert.v, Some(&cert.p), level, seed).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let (pts, _) = sampler
        .sample(n, seed, n.saturating_mul(100_000))
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    Ok(pts)
}

/// Reads initial states, one comma-separated row per point; `#` lines and a
/// non-numeric first row are skipped.
pub fn read_points(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read points {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(p) if p.len() == dim => out.push(p),
            Ok(p) => {
                return Err(CliError::Input(format!(
                    "{} line {}: {} values, expected {dim}",
                    path.display(),
                    i + 1,
                    p.len()
                )))
            }
            Err(_) if out.is_empty() => continue,
            Err(_) => return Err(CliError::Input(format!("{} line {}: not a number", path.display(), i + 1))),
        }
    }
    Ok(out)
}

fn scales(ctx: &Context) -> Vec<f64> {
    if ctx.is_vehicle() {
        STATE_SCALES.to_vec()
    } else {
        vec![1.0; ctx.scenario.dim()]
    }
}

pub fn relative_rms(a: &Trajectory, b: &Trajectory, scales: &[f64]) -> f64 {
    let n = a.states.len().min(b.states.len());
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..n {
        for (i, s) in scales.iter().enumerate() {
            num += ((a.states[k][i] - b.states[k][i]) / s).powi(2);
            den += (a.states[k][i] / s).powi(2);
        }
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

pub fn trajectories(ctx: &Context, points: &[Vec<f64>]) -> Result<Vec<TrajectoryPair>, CliError> {
    let tc = &ctx.run.trajectories;
    let base = ctx.scenario.sim_options(tc.horizon);
    let opts = sosroa_sim::SimOptions {
        sample_rate: tc.sample_rate,
        stop_on_convergence: false,
        ..base
    };
    let verdict_opts = ctx.scenario.sim_options(if ctx.is_vehicle() { 10.0 } else { 20.0 });
    let constraints = ctx.scenario.sim_constraints(&ctx.roa)?;
    let full = ctx.scenario.full_field();
    let poly = ctx.scenario.poly_field();
    let s = scales(ctx);
    let mut out = Vec::new();
    for x0 in points {
        if x0.len() != ctx.scenario.dim() {
            return Err(CliError::Input(format!("point {x0:?} has the wrong dimension")));
        }
        let mut f = simulate(&*full, x0, &constraints, &opts, true);
        f.classification = classify(&*full, x0, &constraints, &verdict_opts);
        let p = ctx.scenario.in_polynomial_range(x0).then(|| {
            let mut t = simulate(&*poly, x0, &constraints, &opts, true);
            t.classification = classify(&*poly, x0, &constraints, &verdict_opts);
            t
        });
        let relative_rms = p.as_ref().map(|p| relative_rms(&f, p, &s));
        out.push(TrajectoryPair {
            x0: x0.clone(),
            full: f,
            poly: p,
            relative_rms,
        });
    }
    Ok(out)
}

fn trajectory_csv(ctx: &Context, header: &[String], t: &Trajectory) -> String {
    let names = ctx.scenario.vars().names().to_vec();
    let mut cols: Vec<&str> = vec!["t"];
    cols.extend(names.iter().map(String::as_str));
    let vehicle = ctx.scenario.vehicle();
    if vehicle.is_some() {
        cols.extend(["alpha_f", "alpha_r"]);
    }
    let rows = t.times.iter().zip(&t.states).map(|(time, x)| {
        let mut row = vec![num(*time)];
        row.extend(x.iter().map(|v| num(*v)));
        if let Some(m) = vehicle {
            let (af, ar) = slip_angles(x, &m.scenario);
            row.push(num(af));
            row.push(num(ar));
        }
        row
    });
    csv(header, &cols, rows)
}

pub fn write_trajectories(ctx: &Context, dir: &Path, pairs: &[TrajectoryPair]) -> Result<(), CliError> {
    let header = ctx.header();
    let mut files = vec!["summary.csv".to_string()];
    for (k, p) in pairs.iter().enumerate() {
        let name = format!("point_{k:03}_full.csv");
        write(dir, &name, &trajectory_csv(ctx, &header, &p.full))?;
        files.push(name);
        if let Some(t) = &p.poly {
            let name = format!("point_{k:03}_poly.csv");
            write(dir, &name, &trajectory_csv(ctx, &header, t))?;
            files.push(name);
        }
    }
    let names = ctx.scenario.vars().names().to_vec();
    let mut cols: Vec<String> = vec!["point".into()];
    cols.extend(names.iter().map(|n| format!("{n}0")));
    cols.extend(["full_verdict", "poly_verdict", "relative_rms"].map(String::from));
    let rows = pairs.iter().enumerate().map(|(k, p)| {
        let mut row = vec![k.to_string()];
        row.extend(p.x0.iter().map(|v| num(*v)));
        row.push(p.full.classification.verdict.as_str().into());
        row.push(p.poly.as_ref().map(|t| t.classification.verdict.as_str().to_string()).unwrap_or_default());
        row.push(opt(p.relative_rms));
        row
    });
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    write(dir, "summary.csv", &csv(&header, &col_refs, rows))?;
    let refs: Vec<&str> = files.iter().map(String::as_str).collect();
    write_manifest(ctx, dir, "trajectories", None, &refs)
}
