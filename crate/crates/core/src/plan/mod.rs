//! Analysis plans: which checks to run on which problem, at which point and
//! along which directions, plus report assembly and output.

mod emit;
mod report;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::AnalysisConfig;
use crate::expr::{parse_problem, ExprError, ParametricProblem};

pub use emit::{emit, render_csv, render_json, render_text, validate_report, Format};
pub use report::{
    AnalysisReport, CheckRecord, DirectionReport, Hypothesis, ProblemInfo, RecordStatus, ShellRow,
    SCHEMA_VERSION,
};
pub use run::{exit_code, run_plan};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("plan line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("plan has no directions")]
    NoDirections,
    #[error("plan has no base point")]
    NoBasePoint,
    #[error("plan names no problem file")]
    NoProblem,
    #[error("check {check} requires {needs} in the same plan")]
    MissingPrerequisite { check: Check, needs: Check },
    #[error("{what} has length {got}, the problem needs {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("problem file {path}: {source}")]
    Problem { path: String, source: ExprError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("report does not match the schema: {0}")]
    Schema(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Check {
    Stability,
    Dini,
    Subdiff,
    Cones,
    #[serde(rename = "Thm3_1")]
    Thm31,
    #[serde(rename = "Thm3_2")]
    Thm32,
    #[serde(rename = "Thm3_3")]
    Thm33,
    #[serde(rename = "FOSCMS")]
    Foscms,
    Abadie,
    Danskin,
}

impl Check {
    /// Canonical execution order; prerequisites come first.
    pub const ALL: [Check; 10] = [
        Check::Stability,
        Check::Dini,
        Check::Subdiff,
        Check::Cones,
        Check::Thm31,
        Check::Thm32,
        Check::Thm33,
        Check::Foscms,
        Check::Abadie,
        Check::Danskin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Stability => "Stability",
            Check::Dini => "Dini",
            Check::Subdiff => "Subdiff",
            Check::Cones => "Cones",
            Check::Thm31 => "Thm3_1",
            Check::Thm32 => "Thm3_2",
            Check::Thm33 => "Thm3_3",
            Check::Foscms => "FOSCMS",
            Check::Abadie => "Abadie",
            Check::Danskin => "Danskin",
        }
    }

    pub fn from_name(s: &str) -> Option<Check> {
        Check::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }

    pub fn prerequisites(self) -> &'static [Check] {
        match self {
            Check::Thm31 | Check::Thm32 | Check::Thm33 => &[Check::Subdiff, Check::Stability],
            Check::Cones => &[Check::Dini],
            Check::Foscms => &[Check::Cones],
            Check::Danskin => &[Check::Subdiff],
            Check::Stability | Check::Dini | Check::Subdiff | Check::Abadie => &[],
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisPlan {
    pub name: String,
    pub problem_path: PathBuf,
    pub problem: ParametricProblem,
    pub base_point: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    /// Requested checks in canonical order.
    pub checks: Vec<Check>,
    pub config: AnalysisConfig,
    pub seed: u64,
    /// Random critical directions per solution for the regularity probe.
    pub probes: usize,
    /// Record wall-clock times; off by default so reruns are byte-identical.
    pub timings: bool,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_PROBES: usize = 4;

fn perr(line: usize, msg: impl Into<String>) -> PlanError {
    PlanError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_vector(s: &str, line: usize) -> Result<Vec<f64>, PlanError> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| perr(line, format!("expected `[...]`, got `{}`", s.trim())))?;
    inner
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| perr(line, format!("bad number `{}`", t.trim())))
        })
        .collect()
}

fn parse_value<T: std::str::FromStr>(v: &str, key: &str, line: usize) -> Result<T, PlanError> {
    v.parse()
        .map_err(|_| perr(line, format!("bad value `{v}` for `{key}`")))
}

/// Applies one `set <key> <value>` override.
fn apply_setting(plan: &mut PlanDraft, key: &str, v: &str, line: usize) -> Result<(), PlanError> {
    let c = &mut plan.config;
    match key {
        "t0" => c.schedule.t0 = parse_value(v, key, line)?,
        "rho" => c.schedule.rho = parse_value(v, key, line)?,
        "shells" => c.schedule.shells = parse_value(v, key, line)?,
        "angles" => c.schedule.angles = parse_value(v, key, line)?,
        "grid" => c.solver.grid = parse_value(v, key, line)?,
        "starts" => c.solver.starts = parse_value(v, key, line)?,
        "solver_tol" => c.solver.tol = parse_value(v, key, line)?,
        "solver_cluster_tol" => c.solver.cluster_tol = parse_value(v, key, line)?,
        "feas_tol" => c.solver.feas_tol = parse_value(v, key, line)?,
        "conv_tol" => c.oracle.conv_tol = parse_value(v, key, line)?,
        "gap_tol" => c.oracle.gap_tol = parse_value(v, key, line)?,
        "minorant_slack" => c.oracle.minorant_slack = parse_value(v, key, line)?,
        "stencil_frac" => c.oracle.stencil_frac = parse_value(v, key, line)?,
        "max_halvings" => c.oracle.max_halvings = parse_value(v, key, line)?,
        "fit_agreement" => c.oracle.fit_agreement = parse_value(v, key, line)?,
        "oracle_cluster_tol" => c.oracle.cluster_tol = parse_value(v, key, line)?,
        "incl_tol" => c.engine.incl_tol = parse_value(v, key, line)?,
        "slab_pad" => c.engine.slab_pad = parse_value(v, key, line)?,
        "arc_tol" => c.engine.arc_tol = parse_value(v, key, line)?,
        "seed" => plan.seed = parse_value(v, key, line)?,
        "probes" => plan.probes = parse_value(v, key, line)?,
        "timings" => {
            plan.timings = match v {
                "on" | "true" => true,
                "off" | "false" => false,
                _ => return Err(perr(line, "`timings` takes on/off")),
            }
        }
        _ => return Err(perr(line, format!("unknown setting `{key}`"))),
    }
    Ok(())
}

struct PlanDraft {
    config: AnalysisConfig,
    seed: u64,
    probes: usize,
    timings: bool,
}

/// Parses a plan. Relative problem paths are resolved against `base_dir`.
pub fn parse_plan(text: &str, base_dir: &Path) -> Result<AnalysisPlan, PlanError> {
    let mut name = String::from("plan");
    let mut problem_path: Option<PathBuf> = None;
    let mut base_point: Option<Vec<f64>> = None;
    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut checks: Vec<Check> = Vec::new();
    let mut draft = PlanDraft {
        config: AnalysisConfig::default(),
        seed: DEFAULT_SEED,
        probes: DEFAULT_PROBES,
        timings: false,
    };
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (kw, rest) = content
            .split_once(char::is_whitespace)
            .unwrap_or((content, ""));
        let rest = rest.trim();
        match kw {
            "plan" => name = rest.to_string(),
            "problem" => {
                if rest.is_empty() {
                    return Err(perr(line, "`problem` needs a path"));
                }
                let p = Path::new(rest);
                problem_path = Some(if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base_dir.join(p)
                });
            }
            "point" => base_point = Some(parse_vector(rest, line)?),
            "direction" => directions.push(parse_vector(rest, line)?),
            "checks" => {
                for tok in rest.split(|c: char| c.is_whitespace() || c == ',') {
                    if tok.is_empty() {
                        continue;
                    }
                    if tok.eq_ignore_ascii_case("all") {
                        checks.extend(Check::ALL);
                        continue;
                    }
                    let c = Check::from_name(tok)
                        .ok_or_else(|| perr(line, format!("unknown check `{tok}`")))?;
                    checks.push(c);
                }
            }
            "set" => {
                let (key, value) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| perr(line, "expected `set <key> <value>`"))?;
                apply_setting(&mut draft, key, value.trim(), line)?;
            }
            _ => return Err(perr(line, format!("unknown keyword `{kw}`"))),
        }
    }
    checks.sort();
    checks.dedup();
    for &c in &checks {
        for &needs in c.prerequisites() {
            if !checks.contains(&needs) {
                return Err(PlanError::MissingPrerequisite { check: c, needs });
            }
        }
    }
    if directions.is_empty() {
        return Err(PlanError::NoDirections);
    }
    let problem_path = problem_path.ok_or(PlanError::NoProblem)?;
    let base_point = base_point.ok_or(PlanError::NoBasePoint)?;
    let text = std::fs::read_to_string(&problem_path).map_err(|source| PlanError::Io {
        path: problem_path.display().to_string(),
        source,
    })?;
    let problem = parse_problem(&text).map_err(|source| PlanError::Problem {
        path: problem_path.display().to_string(),
        source,
    })?;
    if base_point.len() != problem.n {
        return Err(PlanError::DimensionMismatch {
            what: "point".into(),
            expected: problem.n,
            got: base_point.len(),
        });
    }
    for (i, d) in directions.iter().enumerate() {
        if d.len() != problem.n {
            return Err(PlanError::DimensionMismatch {
                what: format!("direction {}", i + 1),
                expected: problem.n,
                got: d.len(),
            });
        }
    }
    Ok(AnalysisPlan {
        name,
        problem_path,
        problem,
        base_point,
        directions,
        checks,
        config: draft.config,
        seed: draft.seed,
        probes: draft.probes,
        timings: draft.timings,
    })
}

pub fn load_plan(path: &Path) -> Result<AnalysisPlan, PlanError> {
    let text = std::fs::read_to_string(path).map_err(|source| PlanError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    parse_plan(&text, dir)
}
