//! End-to-end tests of the `phsctl` binary: pipeline artifacts,
//! determinism, validation reporting and error formatting.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn phsctl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phsctl"))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("phsctl-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Small, fast experiment: p = 10, 2 ms horizon.
fn small_config() -> &'static str {
    r#"{
        "plant": {"length": 2.0, "tension": 1.4e6, "density": 1.225, "dissipation": 1e-3},
        "discretization": {"p": 10, "gamma": 0.5, "dt": 1e-4, "t_final": 2e-3},
        "actuation": {"mode": "patches", "m": 5},
        "shaping": {"alpha": 2000.0, "beta": 1e6},
        "initial_condition": {"mu": 1.5, "sigma2": 0.113, "amplitude": 1.0},
        "output": {"directory": "out", "stride": 2, "snapshots": false}
    }"#
}

fn write_config(dir: &Path, content: &str) -> PathBuf {
    let path = dir.join("experiment.json");
    fs::write(&path, content).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    phsctl().args(args).output().unwrap()
}

#[test]
fn validate_accepts_baseline() {
    let dir = scratch_dir("validate-ok");
    let config = write_config(&dir, small_config());
    let output = run(&["validate", "--config", config.to_str().unwrap()]);
    assert!(output.status.success());
    assert_eq!(String::from_utf8_lossy(&output.stdout).trim(), "ok");
}

#[test]
fn validate_reports_all_violations() {
    let dir = scratch_dir("validate-bad");
    let bad = small_config()
        .replace("\"m\": 5", "\"m\": 7")
        .replace("\"dt\": 1e-4", "\"dt\": -1e-4");
    let config = write_config(&dir, &bad);
    let output = run(&["validate", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().next().unwrap();
    assert!(line.starts_with("error[config]:"), "got: {line}");
    assert!(line.contains("must divide"));
    assert!(line.contains("dt must be positive"));
    assert_eq!(stderr.trim().lines().count(), 1, "single-line error contract");
}

#[test]
fn parse_error_reports_location() {
    let dir = scratch_dir("parse");
    let config = write_config(&dir, "{ not json");
    let output = run(&["validate", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.starts_with("error[parse]:"));
    assert!(stderr.contains("experiment.json:"));
}

#[test]
fn run_emits_all_artifacts() {
    let dir = scratch_dir("run");
    let config = write_config(&dir, small_config());
    let out = dir.join("artifacts");
    let output = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    for name in [
        "plant.json",
        "controller.json",
        "trajectory.csv",
        "poles.csv",
        "poles_meta.json",
        "report.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for field in [
        "settle_time",
        "settled",
        "settle_band",
        "final_hamiltonian",
        "casimir_drift",
        "stability_margin",
        "residual",
    ] {
        assert!(
            report.get(field).is_some_and(|v| !v.is_null()),
            "field {field} missing or null"
        );
    }
    // the shaped loop is stable and dissipative
    assert!(report["stability_margin"].as_f64().unwrap() < 0.0);
    assert!(report["casimir_drift"].as_f64().unwrap() < 1e-9);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("poles_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["p"], 10);
    assert_eq!(meta["m"], 5);
    assert_eq!(meta["gamma"], 0.5);

    let trajectory = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(trajectory.starts_with("t,H,endpoint,casimir_norm\n"));
    // stride 2 on 20 steps: t = 0 plus every other step
    assert_eq!(trajectory.trim().lines().count(), 1 + 11);
}

#[test]
fn pipeline_is_deterministic() {
    let dir = scratch_dir("determinism");
    let config = write_config(&dir, small_config());
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    for name in ["trajectory.csv", "poles.csv", "plant.json", "controller.json"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn simulate_stride_override() {
    let dir = scratch_dir("stride");
    let config = write_config(&dir, small_config());
    let out = dir.join("sim");
    let output = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--stride",
        "1",
    ]);
    assert!(output.status.success());
    let trajectory = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(trajectory.trim().lines().count(), 1 + 21);
}

#[test]
fn open_loop_run_without_shaping() {
    let dir = scratch_dir("open-loop");
    let open = small_config().replace(
        r#""shaping": {"alpha": 2000.0, "beta": 1e6},"#,
        "",
    );
    let config = write_config(&dir, &open);
    let out = dir.join("out");
    let output = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(!out.join("controller.json").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["residual"], 0.0);
    assert_eq!(report["casimir_drift"], 0.0);
    // open loop with tiny internal dissipation barely settles in 2 ms
    assert!(report["stability_margin"].as_f64().unwrap() < 0.0);
}

#[test]
fn design_without_shaping_is_a_config_error() {
    let dir = scratch_dir("design-open");
    let open = small_config().replace(
        r#""shaping": {"alpha": 2000.0, "beta": 1e6},"#,
        "",
    );
    let config = write_config(&dir, &open);
    let output = run(&["design", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("design requires a shaping"));
}

#[test]
fn sweep_fans_out_to_subdirectories() {
    let dir = scratch_dir("sweep");
    let config = write_config(&dir, small_config());
    let out = dir.join("sweep-out");
    let output = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--sweep",
        "alpha=1000,4000",
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    for label in ["alpha=1000", "alpha=4000"] {
        assert!(out.join(label).join("report.json").exists(), "missing {label}");
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("alpha=1000:"));
    assert!(stdout.contains("alpha=4000:"));
}

#[test]
fn snapshots_are_emitted_on_request() {
    let dir = scratch_dir("snapshots");
    let with_snapshots = small_config().replace("\"snapshots\": false", "\"snapshots\": true");
    let config = write_config(&dir, &with_snapshots);
    let out = dir.join("snap");
    let output = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--stride",
        "10",
    ]);
    assert!(output.status.success());
    let snapshot = fs::read_to_string(out.join("state_0.csv")).unwrap();
    assert!(snapshot.starts_with("zeta,x1,x2\n"));
    assert_eq!(snapshot.trim().lines().count(), 1 + 10);
}
