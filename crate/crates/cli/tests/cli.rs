use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_radial-sle"));
    c.env_remove("RADIAL_SLE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    v["report"].clone()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn ground_two_curve_nullvec() {
    let out = run(&["verify", "nullvec", "--family", "ground", "--n", "2", "--m", "0", "--kappa", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["h"].as_f64().unwrap() + 0.375).abs() < 1e-6);
    assert_eq!(r["pass"], true);
}

#[test]
fn meander_invertible() {
    let out = run(&["meander", "--n", "4", "--m", "2", "--kappa", "3.9", "--check-invertible"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_ne!(r["determinant"].as_f64().unwrap(), 0.0);
    assert_eq!(r["patterns"].as_array().unwrap().len(), 6);
}

#[test]
fn meander_condition_bound_is_a_tolerance_failure() {
    let out = run(&["meander", "--n", "4", "--m", "2", "--kappa", "3.9", "--check-invertible", "--max-condition", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--n", "1", "--kappa", "2", "--T", "0.2", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    let csv = String::from_utf8(a.stdout).unwrap();
    assert!(csv.starts_with("# schema_id=radial-sle.trace.v1\nt,curve_id,re_tip,im_tip,theta\n"));
}

#[test]
fn seed_from_environment() {
    let args = ["simulate", "--n", "2", "--kappa", "3", "--T", "0.05", "--no-tips"];
    let flag = bin().args(args).args(["--seed", "11"]).output().unwrap();
    let env = bin().args(args).env("RADIAL_SLE_SEED", "11").output().unwrap();
    assert_eq!(flag.stdout, env.stdout);
    let other = bin().args(args).env("RADIAL_SLE_SEED", "12").output().unwrap();
    assert_ne!(flag.stdout, other.stdout);
}

#[test]
fn manifest_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run(&["simulate", "--n", "2", "--kappa", "2", "--T", "0.1", "--seed", "5", "--nu", "1,0.5", "--out", a.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0));
    let manifest = a.join("manifest.json");
    assert_eq!(read_json(&manifest)["args"]["dt"], 0.001);
    let second = run(&["--config", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0), "{}", String::from_utf8_lossy(&second.stderr));
    for f in ["traces.csv", "diagnostics.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_run_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    std::fs::write(
        &p,
        r#"{"schema_id": "radial-sle.run.v1", "version": "0.1.0", "command": "params", "args": {"kappa": 4, "sigma": [1]}}"#,
    )
    .unwrap();
    let out = run(&["--config", p.to_str().unwrap(), "--kappa", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["params"]["kappa"], 2.0);
    assert_eq!(v["manifest"]["args"]["sigma"], serde_json::json!([1.0]));
}

#[test]
fn run_file_errors_cite_lines() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.json");
    std::fs::write(&p, "{\"schema_id\": \"radial-sle.run.v1\",\n\"version\": \"0.1.0\",\n\"command\": \"params\",\n\"args\": {\"kappa\": 4,\n \"nope\": 1}}\n")
        .unwrap();
    let out = run(&["--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.json:5: unknown key `nope`"));

    std::fs::write(&p, "{\"schema_id\": \"radial-sle.run.v1\",\n\"version\": \"0.1.0\",\n\"command\": \"params\",\n\"args\": {\"kappa\": \"four\"}}\n")
        .unwrap();
    let out = run(&["--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.json:4: `kappa`"));

    std::fs::write(&p, "{\"schema_id\": \"radial-sle.run.v1\",\n\"version\": \"0.1.0\",\n\"command\": \"params\"\n\"args\": {}}\n").unwrap();
    let out = run(&["--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.json:4:"));
}

#[test]
fn validation_errors_exit_two() {
    assert_eq!(run(&["verify", "nullvec", "--family", "ground", "--n", "2", "--m", "3", "--kappa", "4"]).status.code(), Some(2));
    assert_eq!(run(&["params", "--kappa", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--n", "2", "--kappa", "2", "--T", "0.1", "--initial", "0,0"]).status.code(), Some(2));
    assert_eq!(run(&["patterns", "--n", "3"]).status.code(), Some(2));
}

#[test]
fn falsified_ward_control_fails_tolerance() {
    let ok = run(&["verify", "ward", "--n", "3", "--m", "1", "--kappa", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(&["verify", "ward", "--n", "3", "--m", "1", "--kappa", "3", "--falsify", "0.1"]);
    assert_eq!(bad.status.code(), Some(3));
    assert_eq!(report(&bad)["pass"], false);
}

#[test]
fn collision_is_not_a_failure_but_blowup_is() {
    let out = run(&["simulate", "--n", "1", "--kappa", "1", "--T", "1", "--seed", "3", "--drift", "rho", "--marked", "0.05", "--rho", "-4", "--no-tips"]);
    assert_eq!(out.status.code(), Some(0));
    let side: Value = serde_json::from_slice(out.stderr.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(side["diagnostics"]["halt_reason"], "collision");
    let out = run(&["simulate", "--n", "1", "--kappa", "8", "--T", "20", "--dt", "1", "--seed", "1", "--no-tips"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn jobs_do_not_change_results() {
    let args = ["verify", "cs", "--family", "fermionic", "--n", "3", "--kappa", "2", "--samples", "8"];
    let one = bin().args(args).args(["--jobs", "1"]).output().unwrap();
    let many = bin().args(args).args(["--jobs", "4"]).output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn ensemble_writes_one_trace_per_member() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--n", "2", "--kappa", "2", "--T", "0.05", "--ensemble", "3", "--jobs", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for i in 0..3 {
        assert!(dir.path().join(format!("traces_{i:04}.csv")).exists());
    }
    assert_eq!(read_json(&dir.path().join("diagnostics.json"))["members"].as_array().unwrap().len(), 3);
    assert_eq!(run(&["simulate", "--n", "2", "--kappa", "2", "--T", "0.05", "--ensemble", "3"]).status.code(), Some(2));
}

#[test]
fn patterns_listing_is_canonical_text() {
    let out = run(&["patterns", "--n", "3", "--m", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    let json = report(&run(&["patterns", "--n", "3", "--m", "1", "--format", "json"]));
    let listed: Vec<&str> = json["patterns"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(listed, text.lines().collect::<Vec<_>>());
}

#[test]
fn calibrations_pass() {
    assert_eq!(run(&["calibrate", "pochhammer", "--alpha", "0.3", "--beta", "-0.6"]).status.code(), Some(0));
    let r = report(&run(&["calibrate", "fd-order"]));
    let orders = r["orders"].as_array().unwrap();
    assert!((orders[0]["observed"].as_f64().unwrap() - 2.0).abs() < 0.2);
    assert!((orders[1]["observed"].as_f64().unwrap() - 4.0).abs() < 0.3);
}
