use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
iterations = 20
replications = 2

[instance]
kind = "synthetic-affine"
dimension = 2
eta = 1.0
lipschitz = 1.5
nu = 1.0

[[schemes]]
name = "DASA"
kind = "dasa"

[[schemes]]
name = "HSA-1"
kind = "harmonic"
theta = 1.0
"#;

fn dasa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dasa"))
        .args(args)
        .env_remove("DASA_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn verify_passes() {
    let o = dasa(&["verify", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("bundle");
    let o = dasa(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2", "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("robustness"));
    for f in ["traces.csv", "summary.csv", "bounds.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(fs::read_to_string(out.join("manifest.json")).unwrap().contains("\"base_seed\": 9"));

    let s = dasa(&["summarize", "--out", out.to_str().unwrap()]);
    assert!(s.status.success());
    assert!(stdout(&s).contains("HSA-1"));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_dasa"))
        .args(["run", "--config", &cfg])
        .env("DASA_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("summary.csv").exists());
}

#[test]
fn failed_runs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("nu = 1.0", "nu = 0.0"));
    let out = dir.path().join("bundle");
    let o = dasa(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(out.join("manifest.json").exists());
    assert!(!dasa(&["summarize", "--out", out.to_str().unwrap()]).status.success());
}

#[test]
fn reference_prints_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = dasa(&["reference", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("x* = ["));
}

#[test]
fn argument_errors() {
    assert!(!dasa(&["run"]).status.success());
    assert!(!dasa(&["run", "--config", "a.toml", "--paper-protocol"]).status.success());
    assert!(!dasa(&["run", "--config", "/nonexistent/config.toml"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    assert!(!dasa(&["summarize", "--out", dir.path().to_str().unwrap()]).status.success());
}
