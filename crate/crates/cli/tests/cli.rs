use std::path::Path;
use std::process::{Command, Output};

use gmtlab_core::geometry::{GeometryContext, Plane, Vector};
use gmtlab_core::harness::VerificationReport;
use gmtlab_core::varifold::io::save_varifold;
use gmtlab_core::varifold::shapes;

fn gmtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmtlab"))
        .args(args)
        .env_remove("GMTLAB_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// The JSON report printed after the per-check lines.
fn printed_report(out: &Output) -> VerificationReport {
    let text = stdout(out);
    let start = text.find('{').expect("json on stdout");
    VerificationReport::from_json(&text[start..]).unwrap()
}

fn plane_dvf(dir: &Path, slope: f64) -> String {
    let ctx = GeometryContext::new(3, 2).unwrap();
    let v = if slope == 0.0 {
        let s = Plane::horizontal(3, 2).unwrap();
        shapes::flat_lattice(ctx, &s, 0.02, 0.6, &Vector::zeros(3)).unwrap()
    } else {
        shapes::tilted_plane(ctx, slope, 0.02, 0.6).unwrap()
    };
    let path = dir.join("plane.dvf");
    save_varifold(&v, &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn scenario_run_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = gmtlab(&["scenario", "run", "half-plane-barrier", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("half-plane-barrier.json")).unwrap();
    let rep = VerificationReport::from_json(&text).unwrap();
    assert_eq!(rep.scenario, "half-plane-barrier");
    assert!(!rep.checks.is_empty());
    assert_eq!(rep.provenance.config["seed"], "42");
}

#[test]
fn csv_format_and_seed_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = gmtlab(&["scenario", "run", "plane", "--out", d, "--format", "csv", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("plane.csv")).unwrap();
    assert!(csv.lines().count() > 5);
}

#[test]
fn env_seed_overrides_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gmtlab"))
        .args(["scenario", "run", "half-plane-barrier", "--out", dir.path().to_str().unwrap()])
        .env("GMTLAB_SEED", "1234")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("half-plane-barrier.json")).unwrap();
    let rep = VerificationReport::from_json(&text).unwrap();
    assert_eq!(rep.provenance.config["seed"], "1234");
}

#[test]
fn failing_check_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("coarse.cfg");
    std::fs::write(&cfg, "# too coarse for the amplitude check\nspacing = 0.6\nradius = 1\n").unwrap();
    let out = gmtlab(&[
        "scenario",
        "run",
        "graph-heat",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(dir.path().join("graph-heat.json").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&gmtlab(&["scenario", "run", "no-such-scenario"])), 2);
    assert_eq!(code(&gmtlab(&["scenario", "run", "plane", "--seed", "abc"])), 2);
    assert_eq!(code(&gmtlab(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "spacing = 0.02\nthis line is wrong\n").unwrap();
    let out = gmtlab(&["scenario", "run", "plane", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn allard_mono_on_a_plane() {
    let dir = tempfile::tempdir().unwrap();
    let input = plane_dvf(dir.path(), 0.0);
    let out = gmtlab(&["verify", "allard-mono", "--input", &input, "--f", "abslin 1 0 0", "--c0", "10", "--radii", "0.1:0.5:5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rep = printed_report(&out);
    assert!(rep.checks.iter().any(|c| c.name.contains("abslin")));

    let bad = gmtlab(&["verify", "allard-mono", "--input", &input, "--radii", "0.5:0.1"]);
    assert_eq!(code(&bad), 2);
    let missing = gmtlab(&["verify", "allard-mono", "--input", "/nonexistent.dvf", "--radii", "0.1:0.5:5"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn malformed_dvf_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dvf");
    std::fs::write(&path, "DVF 1\ndim 3 2\nlambda 0\natoms 2\n0 0 0 1 1 0 0 0 1 0 0 0 1 0\n").unwrap();
    let out = gmtlab(&["verify", "allard-mono", "--input", path.to_str().unwrap(), "--radii", "0.1:0.5:5"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn decay_fit_on_a_tilted_plane() {
    let dir = tempfile::tempdir().unwrap();
    let input = plane_dvf(dir.path(), 0.01);
    let out = gmtlab(&["decay", "fit", "--input", &input, "--plane", "auto", "--R", "0.5", "--scales", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rep = printed_report(&out);
    // the best-fit plane is the plane itself: nothing left to decay
    assert!(rep.fitted.beta.is_none() || rep.fitted.beta.unwrap() >= 0.99);
}

#[test]
fn graph_extract_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let input = plane_dvf(dir.path(), 0.0);
    let csv = dir.path().join("graph.csv");
    let out = gmtlab(&["graph", "extract", "--input", &input, "--ball", "0,0,0,0.3", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x1,x2,u1"));
    assert!(text.lines().count() > 1);
}

#[test]
fn flow_run_then_huisken() {
    let dir = tempfile::tempdir().unwrap();
    let flow = dir.path().join("sphere.dvflow");
    let out = gmtlab(&["flow", "run", "--scenario", "shrinking-sphere", "--out", flow.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = gmtlab(&["verify", "huisken", "--flow", flow.to_str().unwrap(), "--x0", "0,0,0", "--t0", "0", "--r", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rep = printed_report(&out);
    assert!(rep.checks[0].name.starts_with("huisken min slack"));

    let wrong = gmtlab(&["flow", "run", "--scenario", "plane", "--out", flow.to_str().unwrap()]);
    assert_eq!(code(&wrong), 2);
}
