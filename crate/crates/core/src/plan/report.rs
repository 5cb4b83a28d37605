use serde::{Deserialize, Serialize};

use super::Check;
use crate::engine::AnalysisConfig;

/// Version tag written into every report and required by the validator.
pub const SCHEMA_VERSION: &str = "dirsens-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInfo {
    pub name: String,
    pub path: String,
    pub n: usize,
    pub m: usize,
    /// Number of constraint rows.
    pub p: usize,
    pub smooth: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub schema: String,
    pub plan: String,
    pub problem: ProblemInfo,
    pub base_point: Vec<f64>,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub probes: usize,
    pub config: AnalysisConfig,
    pub directions: Vec<DirectionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionReport {
    pub index: usize,
    pub u: Vec<f64>,
    pub zero_direction: bool,
    /// `V(x̄)`; absent when the analysis failed.
    #[serde(serialize_with = "opt_ext", deserialize_with = "de_opt_ext", default)]
    pub base_value: Option<f64>,
    /// Estimate of the directional solution set.
    pub solutions: Vec<Vec<f64>>,
    /// Theorem variant chosen from the stability diagnostics, `"i"` to `"iv"`.
    pub variant: Option<String>,
    pub analysis_error: Option<String>,
    pub records: Vec<CheckRecord>,
    /// Shell samples sorted by `(k, sequence)`.
    pub shells: Vec<ShellRow>,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordStatus {
    Ok,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypothesis {
    pub name: String,
    pub status: String,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub check: Check,
    pub status: RecordStatus,
    /// Short verdict label such as `Holds`, `Violated`, `Certified` or `Computed`.
    pub verdict: String,
    #[serde(
        serialize_with = "opt_ext_vec",
        deserialize_with = "de_opt_ext_vec",
        default
    )]
    pub witness: Option<Vec<f64>>,
    pub error: Option<String>,
    pub hypotheses: Vec<Hypothesis>,
    pub provenance: Vec<String>,
    /// Full typed result of the check.
    pub detail: serde_json::Value,
    pub wall_ms: Option<f64>,
}

impl CheckRecord {
    /// Labels that must come with a witness.
    pub const WITNESSED: [&'static str; 5] = [
        "Violated",
        "NotCertified",
        "NotLipschitz",
        "StrictInclusion",
        "Discontinuous",
    ];

    pub fn is_violated(&self) -> bool {
        self.verdict == "Violated"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellRow {
    pub sequence: usize,
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(
        serialize_with = "crate::serde_ext::f64",
        deserialize_with = "crate::serde_ext::de_f64"
    )]
    pub value: f64,
    pub argmins: Vec<Vec<f64>>,
}

fn opt_ext<S: serde::Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    v.map(crate::serde_ext::Ext).serialize(s)
}

fn de_opt_ext<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    Option::<crate::serde_ext::Ext>::deserialize(d).map(|o| o.map(|e| e.0))
}

fn opt_ext_vec<S: serde::Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
    v.as_ref()
        .map(|w| {
            w.iter()
                .map(|x| crate::serde_ext::Ext(*x))
                .collect::<Vec<_>>()
        })
        .serialize(s)
}

fn de_opt_ext_vec<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
    Option::<Vec<crate::serde_ext::Ext>>::deserialize(d)
        .map(|o| o.map(|v| v.into_iter().map(|e| e.0).collect()))
}
