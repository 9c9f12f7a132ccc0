//! End-to-end checks of the `smc` binary: artifact layout, report shape,
//! exit codes, verbosity, and byte-level determinism across invocations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn smc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smc"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary spawns");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("binary spawns").status.code().expect("exit code")
}

const MINI_SCENARIO: &str = r#"
name = "mini"
description = "Two noisy contracting agents on a coarse mode set, for fast end-to-end checks."
agents = [[500.0, 700.0], [1400.0, 300.0]]

[domain]
lx = 2000.0
ly = 2000.0

[modes]
kx = 6
ky = 6

[quadrature]
nx = 64
ny = 64

[control]
variant = "stochastic_contraction"

[sim]
dt = 0.1
t_final = 5.0
seed = 9

[[analyses]]
kind = "stall"
agent = 0
window = 2.0
tol = 0.01
expect = false
"#;

fn write_mini(dir: &Path) -> PathBuf {
    let path = dir.join("mini.toml");
    fs::write(&path, MINI_SCENARIO).unwrap();
    path
}

#[test]
fn missing_scenario_file_is_a_usage_error() {
    let out = smc().args(["run", "--scenario", "/nonexistent/nope.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_figure_id_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = smc()
        .args(["--out", dir.path().to_str().unwrap(), "reproduce", "--figure", "fig9z"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig1a"), "error should list the known ids, got: {err}");
}

#[test]
fn ensemble_needs_at_least_two_members() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    let code = exit_code(smc().args([
        "--out",
        dir.path().to_str().unwrap(),
        "ensemble",
        "--scenario",
        scenario.to_str().unwrap(),
        "--ensemble",
        "1",
    ]));
    assert_eq!(code, 2);
}

#[test]
fn run_writes_csv_svg_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    run_ok(smc().args([
        "--out",
        dir.path().to_str().unwrap(),
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
    ]));

    let csv = fs::read_to_string(dir.path().join("mini.csv")).unwrap();
    assert!(csv.starts_with("t,agent_id,x,y,u_norm,metric\n"));
    assert_eq!(csv.lines().count(), 1 + 51 * 2, "51 samples for two agents plus header");

    let svg = fs::read_to_string(dir.path().join("mini.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mini_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["scenario"], "mini");
    assert_eq!(summary["variant"], "stochastic_contraction");
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["agent_count"], 2);
    assert_eq!(summary["samples"], 51);
    assert!(summary["final_metric"].as_f64().unwrap().is_finite());
}

#[test]
fn analyze_reports_declared_checks() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    let out = run_ok(smc().args([
        "--out",
        dir.path().to_str().unwrap(),
        "analyze",
        "--scenario",
        scenario.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"), "check line expected, got: {stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mini_analysis.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 1);
}

#[test]
fn failing_check_sets_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let impossible = MINI_SCENARIO.replace(
        "expect = false",
        "expect = true",
    );
    let path = dir.path().join("mini.toml");
    fs::write(&path, impossible).unwrap();
    let out = smc()
        .args(["--out", dir.path().to_str().unwrap(), "analyze", "--scenario", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mini_analysis.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_passed"], false);
}

#[test]
fn same_seed_runs_are_byte_identical_across_out_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        run_ok(smc().args([
            "--out",
            out.to_str().unwrap(),
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
        ]));
    }
    let bytes_a = fs::read(out_a.join("mini.csv")).unwrap();
    let bytes_b = fs::read(out_b.join("mini.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn seed_override_changes_the_noise_path() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "9"), (&out_b, "10")] {
        run_ok(smc().args([
            "--out",
            out.to_str().unwrap(),
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
            "--seed",
            seed,
        ]));
    }
    let bytes_a = fs::read(out_a.join("mini.csv")).unwrap();
    let bytes_b = fs::read(out_b.join("mini.csv")).unwrap();
    assert_ne!(bytes_a, bytes_b);
}

#[test]
fn quiet_silences_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    let out = run_ok(smc().args([
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
    ]));
    assert!(out.stdout.is_empty());
}

#[test]
fn out_dir_env_var_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_mini(dir.path());
    let out_dir = dir.path().join("from_env");
    run_ok(
        smc()
            .env("SMC_OUT_DIR", &out_dir)
            .args(["run", "--scenario", scenario.to_str().unwrap()]),
    );
    assert!(out_dir.join("mini.csv").exists());
}
