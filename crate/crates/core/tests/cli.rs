use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cbsa::harness::{write_csv, CSV_COLUMNS};

fn scenario(name: &str) -> String {
    let p: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    p.to_str().unwrap().to_string()
}

fn cbsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbsa")).args(args).env_remove("CBSA_OUT_DIR").output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(cbsa(&["validate", &scenario("reference.json")]).status.code(), Some(0));
    let out = cbsa(&["validate", &scenario("invalid/obstacle_separation.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("obstacle_separation"));
}

#[test]
fn run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cbsa(&["run", &scenario("reference.json"), "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for ext in ["csv", "events.jsonl", "summary.json", "svg"] {
        assert!(tmp.path().join(format!("reference.{ext}")).is_file(), "missing {ext}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("reference.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["stop"]["reason"], "mission_complete");
}

#[test]
fn no_plot_skips_the_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["run", &scenario("mc_feasible.json"), "--out", path_str(tmp.path()), "--no-plot"];
    assert_eq!(cbsa(&args).status.code(), Some(0));
    assert!(tmp.path().join("mc_feasible.csv").is_file());
    assert!(!tmp.path().join("mc_feasible.svg").exists());
}

#[test]
fn out_dir_defaults_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_cbsa"))
        .args(["run", &scenario("reference.json"), "--ticks", "5", "--no-plot"])
        .env("CBSA_OUT_DIR", tmp.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(tmp.path().join("reference.csv").is_file());
}

#[test]
fn violation_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cbsa(&["run", &scenario("es_no_margin.json"), "--out", path_str(tmp.path()), "--no-plot"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("VIOLATED"));
}

#[test]
fn csv_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let args = ["run", &scenario("reference.json"), "--out", path_str(d.path()), "--no-plot"];
        assert!(cbsa(&args).status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("reference.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn ticks_override_limits_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["run", &scenario("reference.json"), "--ticks", "10", "--out", path_str(tmp.path()), "--no-plot"];
    assert!(cbsa(&args).status.success());
    let text = std::fs::read_to_string(tmp.path().join("reference.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn discharge_passes_for_the_reference_wiring() {
    let out = cbsa(&["discharge", &scenario("reference.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("discharge: pass"));
}

#[test]
fn batch_reports_the_worst_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cbsa(&["batch", &scenario(""), "--parallel", "2", "--out", path_str(tmp.path()), "--no-plot"]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 5);
}

#[test]
fn empty_trace_writes_only_the_header() {
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, format!("{}\n", CSV_COLUMNS.join(",")));
}
