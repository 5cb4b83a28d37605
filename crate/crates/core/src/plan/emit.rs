use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::report::{AnalysisReport, CheckRecord, RecordStatus, SCHEMA_VERSION};
use super::PlanError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

pub fn render_json(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn vector(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

/// One row per shell sample, then one row per verdict.
pub fn render_csv(report: &AnalysisReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "kind",
        "direction",
        "u",
        "sequence",
        "k",
        "t",
        "x",
        "value",
        "argmins",
        "check",
        "verdict",
        "witness",
    ];
    w.write_record(header).expect("in-memory write");
    for d in &report.directions {
        for s in &d.shells {
            let argmins: Vec<String> = s.argmins.iter().map(|a| vector(a)).collect();
            w.write_record([
                "shell".to_string(),
                d.index.to_string(),
                vector(&d.u),
                s.sequence.to_string(),
                s.k.to_string(),
                num(s.t),
                vector(&s.x),
                num(s.value),
                argmins.join(";"),
                String::new(),
                String::new(),
                String::new(),
            ])
            .expect("in-memory write");
        }
    }
    for d in &report.directions {
        for r in &d.records {
            w.write_record([
                "verdict".to_string(),
                d.index.to_string(),
                vector(&d.u),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                r.check.name().to_string(),
                r.verdict.clone(),
                r.witness.as_deref().map(vector).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn render_text(report: &AnalysisReport) -> String {
    let mut s = String::new();
    let p = &report.problem;
    let _ = writeln!(
        s,
        "plan {}  problem {} (n={}, m={}, p={})",
        report.plan, p.name, p.n, p.m, p.p
    );
    let _ = writeln!(s, "base point {:?}", report.base_point);
    for d in &report.directions {
        let _ = writeln!(s);
        let variant = d.variant.as_deref().unwrap_or("-");
        let _ = writeln!(
            s,
            "direction {} u={:?}  V(x)={}  variant {}",
            d.index,
            d.u,
            d.base_value.map(num).unwrap_or_else(|| "-".into()),
            variant
        );
        if let Some(e) = &d.analysis_error {
            let _ = writeln!(s, "  analysis failed: {e}");
        }
        let _ = writeln!(s, "  {:<10} {:<20} witness", "check", "verdict");
        for r in &d.records {
            let witness = match (&r.witness, &r.error) {
                (Some(w), _) => format!("{w:?}"),
                (None, Some(e)) => e.clone(),
                _ if r.verdict == "NotApplicable" => r.provenance.join("; "),
                _ => String::new(),
            };
            let _ = writeln!(s, "  {:<10} {:<20} {}", r.check.name(), r.verdict, witness);
        }
    }
    s
}

/// Writes the report into `dir` as `report.<ext>`.
pub fn emit(report: &AnalysisReport, format: Format, dir: &Path) -> Result<PathBuf, PlanError> {
    let io = |source| PlanError::Io {
        path: dir.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(format!("report.{}", format.extension()));
    let body = match format {
        Format::Json => render_json(report),
        Format::Csv => render_csv(report),
        Format::Text => render_text(report),
    };
    std::fs::write(&path, body).map_err(|source| PlanError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn check_record(r: &CheckRecord, at: &str) -> Result<(), String> {
    if CheckRecord::WITNESSED.contains(&r.verdict.as_str()) && r.witness.is_none() {
        return Err(format!("{at}: {} verdict without a witness", r.verdict));
    }
    match r.status {
        RecordStatus::Error if r.error.is_none() => {
            Err(format!("{at}: error record without a message"))
        }
        RecordStatus::Ok if r.error.is_some() => {
            Err(format!("{at}: ok record with an error message"))
        }
        _ => Ok(()),
    }
}

/// Parses a JSON report and checks its structural invariants.
pub fn validate_report(json: &str) -> Result<AnalysisReport, PlanError> {
    let report: AnalysisReport =
        serde_json::from_str(json).map_err(|e| PlanError::Schema(e.to_string()))?;
    let fail = |m: String| Err(PlanError::Schema(m));
    if report.schema != SCHEMA_VERSION {
        return fail(format!(
            "schema `{}`, expected `{SCHEMA_VERSION}`",
            report.schema
        ));
    }
    let n = report.problem.n;
    if report.base_point.len() != n {
        return fail("base point length differs from n".into());
    }
    if report.directions.is_empty() {
        return fail("no directions".into());
    }
    for (i, d) in report.directions.iter().enumerate() {
        if d.index != i {
            return fail(format!("direction {i} carries index {}", d.index));
        }
        if d.u.len() != n {
            return fail(format!("direction {i} has length {}", d.u.len()));
        }
        let checks: Vec<_> = d.records.iter().map(|r| r.check).collect();
        if checks != report.checks {
            return fail(format!(
                "direction {i} records do not match the requested checks"
            ));
        }
        for r in &d.records {
            check_record(r, &format!("direction {i} {}", r.check)).map_err(PlanError::Schema)?;
        }
        let sorted = d
            .shells
            .windows(2)
            .all(|w| (w[0].k, w[0].sequence) <= (w[1].k, w[1].sequence));
        if !sorted {
            return fail(format!(
                "direction {i} shell rows are not sorted by (k, sequence)"
            ));
        }
    }
    Ok(report)
}
