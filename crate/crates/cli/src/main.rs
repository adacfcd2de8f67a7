use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sosroa_cli::commands::{self, parse_plane};
use sosroa_cli::output::run_directory;
use sosroa_cli::{CliError, Context, RunConfig, Scenario};
use sosroa_engine::LyapunovCertificate;

/// Safe region-of-attraction estimation with sum-of-squares certificates.
#[derive(Parser)]
#[command(name = "sosroa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the iterative SOS procedure and write a certificate.
    Estimate(Shared),
    /// Evaluate V on a planar grid and extract the unit level curve.
    Slice(Shared),
    /// Classify a planar grid of initial states by simulation.
    Sweep(Shared),
    /// Check a certificate by sampling and simulation.
    Validate(Shared),
    /// Integrate the exact and the polynomial field side by side.
    Trajectories(Shared),
}

#[derive(Args)]
struct Shared {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    scenario: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root directory for run outputs.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Two states, by name or index, e.g. `v,r`.
    #[arg(long)]
    plane: Option<String>,
    /// Nodes per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Certificate written by `estimate`.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Initial states for `trajectories`, one comma-separated row each.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Print solver iterations.
    #[arg(long)]
    verbose: bool,
}

fn context(a: &Shared) -> Result<Context, CliError> {
    let scenario = Scenario::load(&a.scenario)?;
    let run = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Context::new(scenario, run, a.seed)
}

fn load_certificate(a: &Shared) -> Result<(PathBuf, LyapunovCertificate), CliError> {
    let path = a
        .certificate
        .clone()
        .ok_or_else(|| CliError::Input("--certificate is required".into()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("cannot read certificate {}: {e}", path.display())))?;
    let cert = LyapunovCertificate::from_json(&text).map_err(|e| CliError::Input(e.to_string()))?;
    Ok((path, cert))
}

fn plane(a: &Shared, ctx: &Context) -> Result<(usize, usize), CliError> {
    match &a.plane {
        Some(p) => parse_plane(p, &ctx.scenario.vars()),
        None => Ok((0, 1)),
    }
}

fn done(dir: &Path) {
    println!("{}", dir.display());
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(a) => {
            let ctx = context(&a)?;
            let dir = run_directory(&a.out, &ctx.scenario.name, "estimate")?;
            let (cert, secs) = commands::estimate(&ctx, a.verbose, &mut |r| {
                eprintln!(
                    "iteration {}: rho {:.6} tr P {} gamma {} {}",
                    r.iteration,
                    r.rho,
                    r.trace_p.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into()),
                    r.gamma.map(|g| format!("{g:.4}")).unwrap_or_else(|| "-".into()),
                    if r.accepted { "accepted" } else { "rejected" }
                )
            })?;
            commands::write_estimate(&ctx, &dir, &cert, secs)?;
            eprintln!("converged: {} ({:.1} s)", cert.converged, secs);
            done(&dir);
        }
        Command::Slice(a) => {
            let ctx = context(&a)?;
            let (path, cert) = load_certificate(&a)?;
            if cert.vars() != &ctx.scenario.vars() {
                return Err(CliError::Input("certificate variables do not match the scenario".into()));
            }
            let axes = plane(&a, &ctx)?;
            let (dx, dy) = commands::slice_extent(&cert, axes);
            let xr = ctx.run.slice.x_range.unwrap_or(dx);
            let yr = ctx.run.slice.y_range.unwrap_or(dy);
            let s = commands::slice(&cert, axes, xr, yr, a.grid.unwrap_or(401))?;
            let dir = run_directory(&a.out, &ctx.scenario.name, "slice")?;
            commands::write_slice(&ctx, &dir, &path, &s)?;
            done(&dir);
        }
        Command::Sweep(a) => {
            let ctx = context(&a)?;
            let axes = plane(&a, &ctx)?;
            let g = commands::sweep(&ctx, axes, a.grid.unwrap_or(101))?;
            let dir = run_directory(&a.out, &ctx.scenario.name, "sweep")?;
            commands::write_sweep(&ctx, &dir, &g)?;
            done(&dir);
        }
        Command::Validate(a) => {
            let ctx = context(&a)?;
            let (path, cert) = load_certificate(&a)?;
            let r = commands::validate(&ctx, &cert)?;
            let dir = run_directory(&a.out, &ctx.scenario.name, "validate")?;
            commands::write_validation(&ctx, &dir, &path, &cert, &r)?;
            for c in &r.checks {
                eprintln!(
                    "{} field: {:.2}% safe (threshold {:.2}%) {}",
                    c.field,
                    100.0 * c.safe_fraction,
                    100.0 * c.threshold,
                    if c.passed { "pass" } else { "FAIL" }
                );
            }
            done(&dir);
            if !r.passed {
                return Err(CliError::Pipeline("certificate failed validation".into()));
            }
        }
        Command::Trajectories(a) => {
            let ctx = context(&a)?;
            let points = match (&a.points, &a.certificate) {
                (Some(p), _) => commands::read_points(p, ctx.scenario.dim())?,
                (None, Some(_)) => {
                    let (_, cert) = load_certificate(&a)?;
                    commands::certified_points(&cert, 0.99, ctx.run.trajectories.count, ctx.seed)?
                }
                (None, None) => return Err(CliError::Input("--points or --certificate is required".into())),
            };
            let pairs = commands::trajectories(&ctx, &points)?;
            let dir = run_directory(&a.out, &ctx.scenario.name, "trajectories")?;
            commands::write_trajectories(&ctx, &dir, &pairs)?;
            done(&dir);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
