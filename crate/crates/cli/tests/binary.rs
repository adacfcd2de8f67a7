use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use sosroa_engine::LyapunovCertificate;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sosroa-bin-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn sosroa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sosroa")).args(args).output().unwrap()
}

fn run_dir(out: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8_lossy(&out.stdout).trim())
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Numeric rows of a CSV written by the tool, comments and column row skipped.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

struct Estimated {
    root: PathBuf,
    certificate: PathBuf,
}

fn estimated() -> &'static Estimated {
    static RUN: OnceLock<Estimated> = OnceLock::new();
    RUN.get_or_init(|| {
        let root = scratch("estimate");
        let vdp = scenarios().join("vdp.cfg");
        let out = sosroa(&["estimate", "--scenario", vdp.to_str().unwrap(), "--out", root.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        let dir = run_dir(&out);
        for f in ["certificate.json", "trace.csv", "manifest.json"] {
            assert!(dir.join(f).is_file(), "missing {f}");
        }
        Estimated {
            root,
            certificate: dir.join("certificate.json"),
        }
    })
}

fn certificate() -> LyapunovCertificate {
    LyapunovCertificate::from_json(&std::fs::read_to_string(&estimated().certificate).unwrap()).unwrap()
}

#[test]
fn missing_key_is_an_input_error() {
    let dir = scratch("missing");
    let cfg = dir.join("broken.cfg");
    std::fs::write(&cfg, "model = vdp\nname = broken\n").unwrap();
    let out = sosroa(&["estimate", "--scenario", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`mu`"), "{}", stderr(&out));
}

#[test]
fn unknown_run_config_key_is_an_input_error() {
    let dir = scratch("unknown");
    let toml = dir.join("run.toml");
    std::fs::write(&toml, "[validate]\nsampels = 10\n").unwrap();
    let vdp = scenarios().join("vdp.cfg");
    let out = sosroa(&[
        "sweep",
        "--scenario",
        vdp.to_str().unwrap(),
        "--config",
        toml.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sampels"), "{}", stderr(&out));
}

#[test]
fn estimate_writes_a_degree_six_certificate() {
    let c = certificate();
    assert_eq!(c.config.lyapunov_degree, 6);
    assert_eq!(c.v.degree(), 6);
    assert!(c.converged);
    assert!(c.value(&[0.0, 0.0]).unwrap().abs() < 1e-9);
}

#[test]
fn slice_contour_lies_on_the_unit_level() {
    let e = estimated();
    let vdp = scenarios().join("vdp.cfg");
    let out = sosroa(&[
        "slice",
        "--scenario",
        vdp.to_str().unwrap(),
        "--certificate",
        e.certificate.to_str().unwrap(),
        "--grid",
        "201",
        "--out",
        e.root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let c = certificate();
    let segs = rows(&run_dir(&out).join("contour.csv"));
    assert!(segs.len() > 50);
    for s in &segs {
        for p in [[s[1], s[2]], [s[3], s[4]]] {
            assert!((c.value(&p).unwrap() - 1.0).abs() < 0.05, "{p:?}");
        }
    }
}

fn validate(cert: &Path, samples: usize, name: &str) -> Output {
    let dir = scratch(name);
    let toml = dir.join("run.toml");
    std::fs::write(&toml, format!("[validate]\nsamples = {samples}\nhorizon = 60.0\n")).unwrap();
    let vdp = scenarios().join("vdp.cfg");
    sosroa(&[
        "validate",
        "--scenario",
        vdp.to_str().unwrap(),
        "--certificate",
        cert.to_str().unwrap(),
        "--config",
        toml.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn validate_accepts_the_estimate_and_rejects_an_inflated_level() {
    let out = validate(&estimated().certificate, 1000, "validate-ok");
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(run_dir(&out).join("report.json").is_file());

    let dir = scratch("tampered");
    let tampered = dir.join("certificate.json");
    std::fs::write(&tampered, certificate().with_inflated_level(2.0).unwrap().to_json()).unwrap();
    let out = validate(&tampered, 1000, "validate-bad");
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("FAIL"));
}

#[test]
fn validate_needs_a_sample_budget() {
    let out = validate(&estimated().certificate, 0, "validate-empty");
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn trajectories_from_the_origin_stay_there() {
    let dir = scratch("origin");
    let points = dir.join("points.csv");
    std::fs::write(&points, "0,0\n").unwrap();
    let vdp = scenarios().join("vdp.cfg");
    let out = sosroa(&[
        "trajectories",
        "--scenario",
        vdp.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let t = rows(&run_dir(&out).join("point_000_full.csv"));
    assert!(t.len() > 1);
    assert!(t.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
}
