use std::path::PathBuf;

use dirsens::plan::{
    exit_code, parse_plan, render_csv, render_json, render_text, run_plan, validate_report,
    AnalysisPlan, Check, PlanError, RecordStatus,
};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn plan(text: &str) -> AnalysisPlan {
    parse_plan(text, &fixtures()).unwrap()
}

fn danskin_plan() -> AnalysisPlan {
    plan("plan d\nproblem danskin.prob\npoint [0]\ndirection [1]\ndirection [0]\nchecks Stability Subdiff Danskin\nset shells 14\n")
}

#[test]
fn danskin_record_has_gradient_hull_minus_one() {
    let report = run_plan(&danskin_plan());
    let rec = report.directions[0]
        .records
        .iter()
        .find(|r| r.check == Check::Danskin)
        .unwrap();
    assert_eq!(rec.status, RecordStatus::Ok);
    assert_eq!(rec.verdict, "Holds");
    assert_eq!(rec.detail["gradient_set"], serde_json::json!([[-1.0]]));
    assert_eq!(rec.detail["hull_vertices"], serde_json::json!([[-1.0]]));
    assert_eq!(exit_code(&report), 0);
}

#[test]
fn json_is_deterministic_and_validates() {
    let p = danskin_plan();
    let a = render_json(&run_plan(&p));
    let b = render_json(&run_plan(&p));
    assert_eq!(a, b);
    let back = validate_report(&a).unwrap();
    assert_eq!(render_json(&back), a);
}

#[test]
fn validator_rejects_tampering() {
    let json = render_json(&run_plan(&danskin_plan()));
    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["schema"] = "other/9".into();
    assert!(matches!(
        validate_report(&v.to_string()),
        Err(PlanError::Schema(_))
    ));

    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["directions"][0]["records"][1]["verdict"] = "NotLipschitz".into();
    v["directions"][0]["records"][1]["witness"] = serde_json::Value::Null;
    assert!(validate_report(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["directions"][0]["unexpected"] = 1.into();
    assert!(validate_report(&v.to_string()).is_err());
}

#[test]
fn csv_rows_are_ordered() {
    let report = run_plan(&danskin_plan());
    let csv = render_csv(&report);
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let shells: Vec<(usize, usize)> = rows
        .iter()
        .filter(|r| &r[0] == "shell")
        .map(|r| (r[1].parse().unwrap(), r[4].parse().unwrap()))
        .collect();
    assert!(!shells.is_empty());
    assert!(shells.windows(2).all(|w| w[0] <= w[1]));
    let first_verdict = rows.iter().position(|r| &r[0] == "verdict").unwrap();
    assert!(rows[first_verdict..].iter().all(|r| &r[0] == "verdict"));
    assert_eq!(rows.len() - first_verdict, 6);
}

#[test]
fn text_summary_lists_every_record() {
    let text = render_text(&run_plan(&danskin_plan()));
    assert_eq!(text.matches("Danskin").count(), 2);
    assert!(text.contains("direction 0 u=[1.0]"));
    assert!(text.contains("direction 1 u=[0.0]"));
}

#[test]
fn sufficient_condition_reported_per_direction() {
    let p = plan("plan g\nproblem gd_kink.prob\npoint [0]\ndirection [1]\ndirection [-1]\nchecks Stability Subdiff Thm3_3\nset shells 14\n");
    let report = run_plan(&p);
    for d in &report.directions {
        let rec = d.records.iter().find(|r| r.check == Check::Thm33).unwrap();
        assert_eq!(rec.verdict, "Certified", "direction {:?}", d.u);
        assert_eq!(rec.detail["consistent"], serde_json::json!(true));
    }
    let text = render_text(&report);
    assert_eq!(text.matches("Certified").count(), 2);
}

#[test]
fn failed_analysis_does_not_abort_the_plan() {
    // x = 1 is infeasible for the jump fixture, so the whole direction fails
    let p = plan("problem jump.prob\npoint [1]\ndirection [1]\nchecks Stability Dini\n");
    let report = run_plan(&p);
    let d = &report.directions[0];
    assert!(d.analysis_error.is_some());
    assert!(d.records.iter().all(|r| r.status == RecordStatus::Error));
    assert_eq!(exit_code(&report), 1);
    validate_report(&render_json(&report)).unwrap();
}

#[test]
fn degenerate_constraint_is_violated_with_failed_hypothesis() {
    let p = plan("problem degenerate.prob\npoint [0]\ndirection [1]\nchecks Stability Dini Subdiff Thm3_1\nset shells 12\n");
    let report = run_plan(&p);
    let rec = report.directions[0]
        .records
        .iter()
        .find(|r| r.check == Check::Thm31)
        .unwrap();
    assert!(rec.is_violated());
    assert!(rec.witness.is_some());
    let sub = rec
        .hypotheses
        .iter()
        .find(|h| h.name == "directional metric subregularity")
        .unwrap();
    assert_eq!(sub.status, "NotCertified");
    assert_eq!(exit_code(&report), 2);
}

#[test]
fn nonsmooth_problem_skips_exact_checks() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("kink.prob"),
        "problem kink\nparams n=1\nvars m=1\nbox y1 in [-1, 1]\nmin abs(y1 - x1)\n",
    )
    .unwrap();
    let p = parse_plan(
        "problem kink.prob\npoint [0]\ndirection [1]\nchecks Stability Dini Subdiff Cones\nset shells 10\n",
        dir.path(),
    )
    .unwrap();
    let report = run_plan(&p);
    let rec = report.directions[0]
        .records
        .iter()
        .find(|r| r.check == Check::Cones)
        .unwrap();
    assert_eq!(rec.verdict, "NotApplicable");
    assert_eq!(exit_code(&report), 0);
}
