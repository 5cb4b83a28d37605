use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::report::{
    AnalysisReport, CheckRecord, DirectionReport, Hypothesis, ProblemInfo, RecordStatus, ShellRow,
    SCHEMA_VERSION,
};
use super::{AnalysisPlan, Check};
use crate::engine::{
    abadie_check, classical_multipliers, danskin_sets, directional_multipliers, foscms_check,
    linearization_cone, lipschitz_sufficient_from, rhs_solutions, select_variant,
    upper_estimate_from, AbadieVerdict, CriticalConeSpec, DirectionMode, DirectionalAnalysis,
    EngineError, FoscmsVerdict, MultiplierSet, SmoothModel, SufficientVerdict, Variant, Verdict,
    Which,
};
use crate::expr::ParametricProblem;
use crate::geometry::{lex_cmp, Polyhedron};
use crate::linalg;
use crate::lp::LpOutcome;
use crate::oracle::{clarke_from, ClarkeHull, ContinuityVerdict, LipschitzVerdict, SetEstimate};

/// Solutions beyond this many are thinned before per-solution checks.
const MAX_REPORTED_SOLUTIONS: usize = 16;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn elapsed_ms(start: Instant, on: bool) -> Option<f64> {
    on.then(|| start.elapsed().as_secs_f64() * 1e3)
}

fn record(check: Check, verdict: &str, witness: Option<Vec<f64>>, detail: Value) -> CheckRecord {
    CheckRecord {
        check,
        status: RecordStatus::Ok,
        verdict: verdict.to_string(),
        witness,
        error: None,
        hypotheses: Vec::new(),
        provenance: Vec::new(),
        detail,
        wall_ms: None,
    }
}

fn error_record(check: Check, err: impl ToString) -> CheckRecord {
    CheckRecord {
        check,
        status: RecordStatus::Error,
        verdict: "Error".into(),
        witness: None,
        error: Some(err.to_string()),
        hypotheses: Vec::new(),
        provenance: Vec::new(),
        detail: Value::Null,
        wall_ms: None,
    }
}

/// Outside-scope conditions are reported as `NotApplicable`; anything else is an error.
fn failed_record(check: Check, err: EngineError) -> CheckRecord {
    match err {
        EngineError::NonSmoothModel | EngineError::ConstraintDependsOnParameter => {
            let mut r = record(check, "NotApplicable", None, Value::Null);
            r.provenance.push(err.to_string());
            r
        }
        e => error_record(check, e),
    }
}

fn thinned(ys: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if ys.len() <= MAX_REPORTED_SOLUTIONS {
        return ys.to_vec();
    }
    let stride = ys.len().div_ceil(MAX_REPORTED_SOLUTIONS);
    let mut out: Vec<Vec<f64>> = ys.iter().step_by(stride).cloned().collect();
    if out.last() != ys.last() {
        out.push(ys[ys.len() - 1].clone());
    }
    out
}

#[derive(Serialize)]
struct SetSummary {
    points: Vec<Vec<f64>>,
    rays: Vec<Vec<f64>>,
    unresolved: usize,
}

impl From<&SetEstimate> for SetSummary {
    fn from(s: &SetEstimate) -> Self {
        SetSummary {
            points: s.points.clone(),
            rays: s.rays.clone(),
            unresolved: s.unresolved,
        }
    }
}

#[derive(Serialize)]
struct ConeBlock {
    y: Vec<f64>,
    tangent: Polyhedron,
    normal: Polyhedron,
    linearization: Polyhedron,
    critical: CriticalConeSpec,
    critical_zero: CriticalConeSpec,
    classical: MultiplierSet,
    classical_singular: MultiplierSet,
    /// `M¹_u`, `M⁰_u` over `𝒞(x̄, y; u)`.
    directional: MultiplierSet,
    directional_singular: MultiplierSet,
    /// `M¹_0`, `M⁰_0` over `𝒞(x̄, y; 0) ∩ 𝕊`.
    sphere: MultiplierSet,
    sphere_singular: MultiplierSet,
}

fn cone_block(
    model: &SmoothModel,
    a: &DirectionalAnalysis,
    y: &[f64],
    plan: &AnalysisPlan,
) -> Result<ConeBlock, EngineError> {
    let x = &a.xbar;
    let local = model.local_cones(x, y)?;
    let crit = a.critical_cone_at(model, y, false, &plan.config.engine)?;
    let crit0 = a.critical_cone_at(model, y, true, &plan.config.engine)?;
    let dm = |cone: &CriticalConeSpec, alpha, mode| {
        directional_multipliers(model, x, y, &a.u, cone, alpha, mode)
    };
    Ok(ConeBlock {
        y: y.to_vec(),
        tangent: local.tangent.clone(),
        normal: local.normal.clone(),
        linearization: linearization_cone(model, x, y, &a.u)?,
        classical: classical_multipliers(model, x, y, 1)?,
        classical_singular: classical_multipliers(model, x, y, 0)?,
        directional: dm(&crit, 1, DirectionMode::DirU)?,
        directional_singular: dm(&crit, 0, DirectionMode::DirU)?,
        sphere: dm(&crit0, 1, DirectionMode::Dir0Sphere)?,
        sphere_singular: dm(&crit0, 0, DirectionMode::Dir0Sphere)?,
        critical: crit,
        critical_zero: crit0,
    })
}

/// Probe directions `v` in the critical cone: one feasible point plus extreme points
/// of the unit box section for seeded random objectives.
fn probe_directions(crit: &CriticalConeSpec, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = crit.cone.dim;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let boxed = crit
        .cone
        .intersect(&Polyhedron::boxed(&vec![-1.0; m], &vec![1.0; m]));
    let mut push = |v: Vec<f64>| {
        let v: Vec<f64> = v.iter().map(|c| linalg::snap(*c, 1e-9)).collect();
        if !out.contains(&v) {
            out.push(v);
        }
    };
    if let Some(v) = boxed.feasible_point() {
        push(v);
    }
    for _ in 0..count {
        let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let LpOutcome::Optimal { x, .. } = boxed.maximize(&c) {
            push(x);
        }
    }
    out
}

#[derive(Serialize)]
struct FoscmsProbe {
    y: Vec<f64>,
    v: Vec<f64>,
    verdict: FoscmsVerdict,
}

/// Regularity probes at each solution, seeded per solution index.
fn foscms_probes(
    model: &SmoothModel,
    a: &DirectionalAnalysis,
    ys: &[Vec<f64>],
    plan: &AnalysisPlan,
    direction: usize,
) -> Result<Vec<FoscmsProbe>, EngineError> {
    let mut out = Vec::new();
    for (i, y) in ys.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(
            plan.seed ^ ((direction as u64) << 32) ^ (i as u64).wrapping_mul(0x9E37_79B9),
        );
        let crit = a.critical_cone_at(model, y, false, &plan.config.engine)?;
        for v in probe_directions(&crit, plan.probes, &mut rng) {
            let verdict = foscms_check(model, &a.xbar, y, &a.u, &v)?;
            out.push(FoscmsProbe {
                y: y.clone(),
                v,
                verdict,
            });
        }
    }
    Ok(out)
}

fn subregularity_hypotheses(
    model: &SmoothModel,
    a: &DirectionalAnalysis,
    ys: &[Vec<f64>],
    plan: &AnalysisPlan,
    direction: usize,
) -> Vec<Hypothesis> {
    match foscms_probes(model, a, ys, plan, direction) {
        Ok(probes) => {
            let failed = probes
                .iter()
                .find(|p| matches!(p.verdict, FoscmsVerdict::NotCertified { .. }));
            let (status, note) = match failed {
                Some(p) => (
                    "NotCertified",
                    Some(format!(
                        "regularity probe fails at y = {:?}, v = {:?}",
                        p.y, p.v
                    )),
                ),
                None if probes.is_empty() => (
                    "Vacuous",
                    Some("critical cones are empty at every solution".to_string()),
                ),
                None => ("RegularityCertified", None),
            };
            vec![Hypothesis {
                name: "directional metric subregularity".into(),
                status: status.into(),
                note,
            }]
        }
        Err(e) => vec![Hypothesis {
            name: "directional metric subregularity".into(),
            status: "Error".into(),
            note: Some(e.to_string()),
        }],
    }
}

/// The search box is an artificial bound; solutions on its boundary fall outside the theory.
fn box_hypothesis(prob: &ParametricProblem, ys: &[Vec<f64>]) -> Hypothesis {
    let on_boundary = ys.iter().find(|y| {
        y.iter().zip(&prob.y_box).any(|(v, (lo, hi))| {
            let tol = 1e-6 * (hi - lo);
            v - lo <= tol || hi - v <= tol
        })
    });
    Hypothesis {
        name: "solutions interior to the search box".into(),
        status: if on_boundary.is_some() {
            "Fails"
        } else {
            "Holds"
        }
        .into(),
        note: on_boundary.map(|y| format!("solution {y:?} lies on the box boundary")),
    }
}

fn stability_hypothesis(a: &DirectionalAnalysis, variant: Variant) -> Hypothesis {
    let v = a.stability.get(variant.prerequisite());
    Hypothesis {
        name: format!("{:?}", v.property),
        status: format!("{:?}", v.verdict),
        note: v
            .kappa_estimate
            .map(|k| format!("calmness modulus estimate {k}")),
    }
}

fn verdict_label(v: &Verdict) -> (&'static str, Option<Vec<f64>>) {
    match v {
        Verdict::Holds => ("Holds", None),
        Verdict::Violated { witness, .. } => ("Violated", Some(witness.clone())),
        Verdict::Inconclusive { .. } => ("Inconclusive", None),
    }
}

fn lipschitz_label(v: &LipschitzVerdict) -> (&'static str, Option<Vec<f64>>) {
    match v {
        LipschitzVerdict::Lipschitz { .. } => ("Lipschitz", None),
        LipschitzVerdict::NotLipschitz { witness } => ("NotLipschitz", Some(witness.b.clone())),
        LipschitzVerdict::Inconclusive { .. } => ("Inconclusive", None),
    }
}

fn no_variant(check: Check) -> CheckRecord {
    let mut r = record(check, "Inconclusive", None, Value::Null);
    r.provenance
        .push("every stability prerequisite fails empirically; no theorem variant applies".into());
    r
}

struct Context<'a> {
    plan: &'a AnalysisPlan,
    model: &'a Result<SmoothModel, EngineError>,
    analysis: &'a DirectionalAnalysis,
    clarke: Option<ClarkeHull>,
    variant: Option<Variant>,
    direction: usize,
}

impl Context<'_> {
    fn run(&self, check: Check) -> CheckRecord {
        let oracle_only = matches!(check, Check::Stability | Check::Dini | Check::Subdiff);
        if oracle_only {
            return self.oracle_record(check);
        }
        match self.model {
            Ok(model) => match self.engine_record(check, model) {
                Ok(r) => r,
                Err(e) => failed_record(check, e),
            },
            Err(e) => failed_record(check, e.clone()),
        }
    }

    fn oracle_record(&self, check: Check) -> CheckRecord {
        let a = self.analysis;
        match check {
            Check::Stability => {
                let mut r = record(check, "Computed", None, to_value(&a.stability));
                r.hypotheses = a
                    .stability
                    .verdicts
                    .iter()
                    .map(|v| Hypothesis {
                        name: format!("{:?}", v.property),
                        status: format!("{:?}", v.verdict),
                        note: v.anchor.as_ref().map(|y| format!("anchor {y:?}")),
                    })
                    .collect();
                r.provenance.push(match self.variant {
                    Some(v) => format!("selected variant ({})", v.label()),
                    None => "no variant selectable".into(),
                });
                r
            }
            Check::Dini => record(
                check,
                "Computed",
                None,
                json!({
                    "dini": to_value(&a.dini),
                    "zero_direction_bounds": to_value(&a.zero_bounds),
                }),
            ),
            _ => {
                let (label, witness) = lipschitz_label(&a.lipschitz);
                let mut r = record(
                    check,
                    label,
                    witness,
                    json!({
                        "limiting": to_value(&SetSummary::from(&a.scan.limiting)),
                        "singular": to_value(&SetSummary::from(&a.scan.singular)),
                        "clarke": to_value(&self.clarke),
                        "continuity": to_value(&a.continuity),
                        "lipschitz": to_value(&a.lipschitz),
                    }),
                );
                if let ContinuityVerdict::Discontinuous { .. } = a.continuity {
                    r.provenance
                        .push("value function is discontinuous along the direction".into());
                }
                r
            }
        }
    }

    fn engine_record(&self, check: Check, model: &SmoothModel) -> Result<CheckRecord, EngineError> {
        let a = self.analysis;
        let plan = self.plan;
        let ys = thinned(&a.solutions.points);
        let mut thin_note = None;
        if ys.len() < a.solutions.points.len() {
            thin_note = Some(format!(
                "{} of {} solutions examined",
                ys.len(),
                a.solutions.points.len()
            ));
        }
        let mut r = match check {
            Check::Cones => {
                let blocks = ys
                    .iter()
                    .map(|y| cone_block(model, a, y, plan))
                    .collect::<Result<Vec<_>, _>>()?;
                record(check, "Computed", None, to_value(&blocks))
            }
            Check::Thm31 | Check::Thm32 => {
                let Some(variant) = self.variant else {
                    return Ok(no_variant(check));
                };
                let which = if check == Check::Thm31 {
                    Which::Limiting
                } else {
                    Which::Singular
                };
                let inc = upper_estimate_from(model, a, which, variant, &plan.config.engine)?;
                let (label, witness) = verdict_label(&inc.verdict);
                let mut r = record(check, label, witness, to_value(&inc));
                r.provenance = inc.provenance.clone();
                r.hypotheses.push(stability_hypothesis(a, variant));
                r.hypotheses
                    .push(box_hypothesis(&model.prob, &inc.rhs_solutions));
                r.hypotheses.extend(subregularity_hypotheses(
                    model,
                    a,
                    &inc.rhs_solutions,
                    plan,
                    self.direction,
                ));
                if !a.is_zero_direction() {
                    r.hypotheses.push(Hypothesis {
                        name: "directional regularity of the constraint set".into(),
                        status: "Holds".into(),
                        note: Some("polyhedral constraint sets are geometrically derivable".into()),
                    });
                }
                r
            }
            Check::Thm33 => {
                let Some(variant) = self.variant else {
                    return Ok(no_variant(check));
                };
                let suff = lipschitz_sufficient_from(model, a, variant, &plan.config.engine)?;
                let consistent = !(suff == SufficientVerdict::Certified
                    && matches!(a.lipschitz, LipschitzVerdict::NotLipschitz { .. }));
                let (label, witness) = match &suff {
                    SufficientVerdict::Certified => ("Certified", None),
                    SufficientVerdict::NotCertified { witness, .. } => {
                        ("NotCertified", Some(witness.clone()))
                    }
                };
                let mut r = record(
                    check,
                    label,
                    witness,
                    json!({
                        "sufficient": to_value(&suff),
                        "oracle": to_value(&a.lipschitz),
                        "consistent": consistent,
                    }),
                );
                r.hypotheses.push(stability_hypothesis(a, variant));
                r.hypotheses
                    .push(box_hypothesis(&model.prob, &rhs_solutions(a, variant)));
                r.provenance.push(format!(
                    "variant ({}) selected from stability diagnostics",
                    variant.label()
                ));
                if !consistent {
                    r.provenance
                        .push("certificate contradicts the oracle Lipschitz verdict".into());
                }
                r
            }
            Check::Foscms => {
                let probes = foscms_probes(model, a, &ys, plan, self.direction)?;
                let failed = probes.iter().find_map(|p| match &p.verdict {
                    FoscmsVerdict::NotCertified { witness } => Some(witness.clone()),
                    _ => None,
                });
                let label = if failed.is_some() {
                    "NotCertified"
                } else {
                    "RegularityCertified"
                };
                let mut r = record(check, label, failed, to_value(&probes));
                r.provenance.push(format!(
                    "{} probe direction(s), seed {}",
                    probes.len(),
                    plan.seed
                ));
                r
            }
            Check::Abadie => {
                let base = thinned(&a.shells.base.argmins);
                let mut results = Vec::new();
                for y in &base {
                    let v =
                        abadie_check(model, &a.xbar, y, &plan.config.engine, &plan.config.solver)?;
                    results.push(json!({ "y": y, "verdict": to_value(&v) }));
                    if let AbadieVerdict::StrictInclusion { witness } = v {
                        return Ok(record(
                            check,
                            "StrictInclusion",
                            Some(witness),
                            Value::Array(results),
                        ));
                    }
                }
                let any_inconclusive = results
                    .iter()
                    .any(|r| r["verdict"].get("Inconclusive").is_some());
                let label = if any_inconclusive {
                    "Inconclusive"
                } else {
                    "Equal"
                };
                record(check, label, None, Value::Array(results))
            }
            Check::Danskin => {
                let d = danskin_sets(model, a, self.clarke.as_ref(), &plan.config.engine)?;
                let (mut label, mut witness) = verdict_label(&d.inclusion);
                if label == "Holds" && d.clarke_match == Some(false) {
                    label = "Violated";
                    witness = self
                        .clarke
                        .as_ref()
                        .and_then(|c| c.vertices.first().cloned());
                }
                record(check, label, witness, to_value(&d))
            }
            Check::Stability | Check::Dini | Check::Subdiff => unreachable!("oracle checks"),
        };
        if let Some(n) = thin_note.take() {
            r.provenance.push(n);
        }
        Ok(r)
    }
}

fn shell_rows(a: &DirectionalAnalysis) -> Vec<ShellRow> {
    let mut rows: Vec<ShellRow> = a
        .solutions
        .shell_history
        .iter()
        .map(|s| ShellRow {
            sequence: s.sequence,
            k: s.k,
            t: s.t,
            x: s.x.clone(),
            value: s.value,
            argmins: s.vectors.clone(),
        })
        .collect();
    rows.sort_by(|a, b| a.k.cmp(&b.k).then(a.sequence.cmp(&b.sequence)));
    rows
}

fn run_direction(
    plan: &AnalysisPlan,
    model: &Result<SmoothModel, EngineError>,
    index: usize,
    u: &[f64],
) -> DirectionReport {
    let start = Instant::now();
    let zero_direction = linalg::norm(u) < crate::geometry::ZERO_DIRECTION;
    let analysis =
        match DirectionalAnalysis::compute(&plan.problem, &plan.base_point, u, &plan.config) {
            Ok(a) => a,
            Err(e) => {
                return DirectionReport {
                    index,
                    u: u.to_vec(),
                    zero_direction,
                    base_value: None,
                    solutions: Vec::new(),
                    variant: None,
                    analysis_error: Some(e.to_string()),
                    records: plan.checks.iter().map(|&c| error_record(c, &e)).collect(),
                    shells: Vec::new(),
                    wall_ms: elapsed_ms(start, plan.timings),
                }
            }
        };
    let variant = select_variant(&analysis);
    let ctx = Context {
        plan,
        model,
        analysis: &analysis,
        clarke: clarke_from(&analysis.scan.limiting, &analysis.scan.singular).ok(),
        variant,
        direction: index,
    };
    let records = plan
        .checks
        .iter()
        .map(|&c| {
            let t = Instant::now();
            let mut r = ctx.run(c);
            r.wall_ms = elapsed_ms(t, plan.timings);
            r
        })
        .collect();
    let mut solutions = analysis.solutions.points.clone();
    solutions.sort_by(|a, b| lex_cmp(a, b));
    DirectionReport {
        index,
        u: u.to_vec(),
        zero_direction,
        base_value: Some(analysis.shells.base.value),
        solutions,
        variant: variant.map(|v| v.label().to_string()),
        analysis_error: None,
        records,
        shells: shell_rows(&analysis),
        wall_ms: elapsed_ms(start, plan.timings),
    }
}

/// Runs every requested check along every direction. Failures are recorded per
/// record and never abort the plan.
pub fn run_plan(plan: &AnalysisPlan) -> AnalysisReport {
    let model = SmoothModel::new(&plan.problem);
    let directions: Vec<DirectionReport> = plan
        .directions
        .par_iter()
        .enumerate()
        .map(|(i, u)| run_direction(plan, &model, i, u))
        .collect();
    let prob = &plan.problem;
    AnalysisReport {
        schema: SCHEMA_VERSION.to_string(),
        plan: plan.name.clone(),
        problem: ProblemInfo {
            name: prob.name.clone(),
            path: plan
                .problem_path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            n: prob.n,
            m: prob.m,
            p: prob.p(),
            smooth: prob.is_smooth(),
        },
        base_point: plan.base_point.clone(),
        checks: plan.checks.clone(),
        seed: plan.seed,
        probes: plan.probes,
        config: plan.config.clone(),
        directions,
    }
}

/// `2` when some verdict is `Violated`, `1` when some record failed to execute, else `0`.
pub fn exit_code(report: &AnalysisReport) -> i32 {
    let records = || report.directions.iter().flat_map(|d| d.records.iter());
    if records().any(CheckRecord::is_violated) {
        2
    } else if records().any(|r| r.status == RecordStatus::Error)
        || report.directions.iter().any(|d| d.analysis_error.is_some())
    {
        1
    } else {
        0
    }
}
