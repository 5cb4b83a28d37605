use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dirsens::plan::validate_report;

fn plans() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("plans")
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn dirsens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirsens"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn analyze(plan: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["analyze", plan.to_str().unwrap()];
    args.extend_from_slice(extra);
    dirsens(&args)
}

fn write_plan(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("t.plan");
    let problem = format!("problem {}/", fixtures().display());
    std::fs::write(&path, body.replace("problem ", &problem)).unwrap();
    path
}

#[test]
fn danskin_plan_exits_zero_with_valid_json() {
    let out = analyze(&plans().join("danskin.plan"), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = String::from_utf8(out.stdout).unwrap();
    let report = validate_report(&json).unwrap();
    assert_eq!(report.directions.len(), 2);
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let plan = plans().join("danskin.plan");
    let a = analyze(&plan, &[]);
    let b = analyze(&plan, &[]);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn violated_estimate_exits_two() {
    let out = analyze(&plans().join("degenerate.plan"), &["--format", "text"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Violated"));
}

#[test]
fn missing_plan_exits_one() {
    let out = analyze(Path::new("/nonexistent/none.plan"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_prerequisite_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(
        dir.path(),
        "problem gd_kink.prob\npoint [0]\ndirection [1]\nchecks Thm3_3\n",
    );
    let out = analyze(&plan, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires"));
}

#[test]
fn infeasible_point_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(
        dir.path(),
        "problem jump.prob\npoint [1]\ndirection [1]\nchecks Stability Dini\n",
    );
    let out = analyze(&plan, &[]);
    assert_eq!(out.status.code(), Some(1));
    validate_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
}

#[test]
fn seed_override_is_recorded() {
    let out = analyze(
        &plans().join("danskin.plan"),
        &["--seed", "99", "--shells", "10"],
    );
    assert_eq!(out.status.code(), Some(0));
    let report = validate_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.seed, 99);
    assert_eq!(report.config.schedule.shells, 10);
}

#[test]
fn out_directory_receives_each_format() {
    let dir = tempfile::tempdir().unwrap();
    let plan = plans().join("danskin.plan");
    for (format, file) in [
        ("json", "report.json"),
        ("csv", "report.csv"),
        ("text", "report.txt"),
    ] {
        let out = analyze(
            &plan,
            &["--out", dir.path().to_str().unwrap(), "--format", format],
        );
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
        let body = std::fs::read_to_string(dir.path().join(file)).unwrap();
        assert!(!body.is_empty(), "{file}");
    }
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    validate_report(&json).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("kind,direction,u,"));
}
