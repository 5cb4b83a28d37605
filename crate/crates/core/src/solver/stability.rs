use serde::Serialize;

use super::directional::{distance_to_set, ShellSolves};
use super::value::SolverConfig;
use super::{SequenceSchedule, SolverError};
use crate::expr::ParametricProblem;
use crate::linalg::{self, norm};
use crate::oracle::{classify_sequence, loglog_slope, SequenceFate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum StabilityProperty {
    RestrictedInfCompact,
    InnerSemicontinuous,
    InnerCalm,
    InnerCalmStar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Empirical {
    EmpiricallyHolds,
    EmpiricallyFails,
    Inconclusive,
}

/// Per-shell numbers of one sampled sequence backing a verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceWitness {
    pub sequence: usize,
    pub t: Vec<f64>,
    #[serde(serialize_with = "crate::serde_ext::vec")]
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub property: StabilityProperty,
    pub verdict: Empirical,
    pub witnesses: Vec<SequenceWitness>,
    pub kappa_estimate: Option<f64>,
    /// Base solution the verdict refers to (inner semicontinuity and calmness).
    pub anchor: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub verdicts: Vec<StabilityVerdict>,
    /// Compact box standing in for `Ω_u`: all sampled argmins, inflated by 10%.
    pub omega: Vec<(f64, f64)>,
}

impl StabilityReport {
    pub fn get(&self, p: StabilityProperty) -> &StabilityVerdict {
        self.verdicts
            .iter()
            .find(|v| v.property == p)
            .expect("all properties are reported")
    }

    pub fn in_omega(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(&self.omega)
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

const TAIL: usize = 5;
const MAX_ANCHORS: usize = 64;

fn combine(vs: impl IntoIterator<Item = Empirical>) -> Empirical {
    let mut all_hold = true;
    for v in vs {
        match v {
            Empirical::EmpiricallyFails => return Empirical::EmpiricallyFails,
            Empirical::Inconclusive => all_hold = false,
            Empirical::EmpiricallyHolds => {}
        }
    }
    if all_hold {
        Empirical::EmpiricallyHolds
    } else {
        Empirical::Inconclusive
    }
}

/// Whether a distance sequence tends to zero.
fn distance_verdict(d: &[f64], t: &[f64], cluster_tol: f64, conv_tol: f64) -> Empirical {
    if d.iter().any(|v| !v.is_finite()) {
        return Empirical::EmpiricallyFails;
    }
    let k = d.len();
    if d[k.saturating_sub(3)..].iter().all(|v| *v <= cluster_tol) {
        return Empirical::EmpiricallyHolds;
    }
    let seq: Vec<Vec<f64>> = d.iter().map(|v| vec![*v]).collect();
    match classify_sequence(&seq, t, conv_tol) {
        SequenceFate::Converged { limit, .. } if limit[0].abs() <= cluster_tol => {
            Empirical::EmpiricallyHolds
        }
        SequenceFate::Converged { limit, .. } if limit[0] > 10.0 * cluster_tol => {
            Empirical::EmpiricallyFails
        }
        SequenceFate::Diverged { .. } => Empirical::EmpiricallyFails,
        _ => Empirical::Inconclusive,
    }
}

/// Whether the quotients `dist_k / |x_k - x̄|` stay bounded; returns the tail bound.
fn ratio_verdict(r: &[f64], t: &[f64]) -> (Empirical, Option<f64>) {
    if r.iter().any(|v| !v.is_finite()) {
        return (Empirical::EmpiricallyFails, None);
    }
    let k = r.len();
    let tail = &r[k.saturating_sub(TAIL)..];
    let tt = &t[k.saturating_sub(TAIL)..];
    let bound = tail.iter().cloned().fold(0.0, f64::max);
    if bound <= 1e-9 {
        return (Empirical::EmpiricallyHolds, Some(bound));
    }
    let growing = tail.windows(2).all(|w| w[1] > 1.05 * w[0]);
    let slope = loglog_slope(tt, tail);
    if growing && slope.is_some_and(|s| s <= -0.1) {
        return (Empirical::EmpiricallyFails, Some(bound));
    }
    let head = tail[..tail.len() - 1].iter().cloned().fold(0.0, f64::max);
    let stable = tail[tail.len() - 1] <= 1.1 * head && slope.is_none_or(|s| s >= -0.05);
    if stable {
        (Empirical::EmpiricallyHolds, Some(bound))
    } else {
        (Empirical::Inconclusive, Some(bound))
    }
}

/// Anchor verdict, anchor, witnesses and calmness modulus.
type CalmAnchor = (Empirical, Vec<f64>, Vec<SequenceWitness>, Option<f64>);

fn anchors(shells: &ShellSolves) -> Vec<Vec<f64>> {
    let a = &shells.base.argmins;
    let stride = a.len().div_ceil(MAX_ANCHORS).max(1);
    a.iter().step_by(stride).cloned().collect()
}

fn distances(shells: &ShellSolves, j: usize, y: &[f64]) -> Vec<f64> {
    shells.solves[j]
        .iter()
        .map(|s| distance_to_set(&s.argmins, y))
        .collect()
}

fn quotients(shells: &ShellSolves, j: usize, d: &[f64]) -> Vec<f64> {
    d.iter()
        .zip(&shells.points[j])
        .map(|(dk, xk)| dk / linalg::dist(xk, &shells.base_x))
        .collect()
}

/// Empirical stability verdicts from precomputed shell solves.
pub fn stability_from(
    prob: &ParametricProblem,
    shells: &ShellSolves,
    cfg: &SolverConfig,
    conv_tol: f64,
) -> StabilityReport {
    let t = &shells.steps;
    let nseq = shells.solves.len();
    // inner semicontinuity and inner calmness, per anchor
    let mut isc_best: Option<(Empirical, Vec<f64>, Vec<SequenceWitness>)> = None;
    let mut calm_best: Option<CalmAnchor> = None;
    let rank = |e: Empirical| match e {
        Empirical::EmpiricallyHolds => 0,
        Empirical::Inconclusive => 1,
        Empirical::EmpiricallyFails => 2,
    };
    for y in anchors(shells) {
        let mut isc = Vec::new();
        let mut calm = Vec::new();
        let mut isc_w = Vec::new();
        let mut calm_w = Vec::new();
        let mut kappa: f64 = 0.0;
        for j in 0..nseq {
            let d = distances(shells, j, &y);
            isc.push(distance_verdict(&d, t, cfg.cluster_tol, conv_tol));
            isc_w.push(SequenceWitness {
                sequence: j,
                t: t.clone(),
                values: d.clone(),
            });
            let q = quotients(shells, j, &d);
            let (v, k) = ratio_verdict(&q, t);
            calm.push(v);
            kappa = kappa.max(k.unwrap_or(f64::INFINITY));
            calm_w.push(SequenceWitness {
                sequence: j,
                t: t.clone(),
                values: q,
            });
        }
        let isc_v = combine(isc);
        let calm_v = combine(calm);
        if isc_best.as_ref().is_none_or(|b| rank(isc_v) < rank(b.0)) {
            isc_best = Some((isc_v, y.clone(), isc_w));
        }
        if calm_best.as_ref().is_none_or(|b| rank(calm_v) < rank(b.0)) {
            calm_best = Some((
                calm_v,
                y.clone(),
                calm_w,
                Some(kappa).filter(|k| k.is_finite()),
            ));
        }
    }
    let (isc_v, isc_anchor, isc_w) =
        isc_best.unwrap_or((Empirical::Inconclusive, Vec::new(), Vec::new()));
    let (calm_v, calm_anchor, calm_w, calm_k) =
        calm_best.unwrap_or((Empirical::Inconclusive, Vec::new(), Vec::new(), None));

    // inner calmness*: each direction sequence against its own limit
    let tracked = shells.tracked_sequences();
    let mut star = Vec::new();
    let mut star_w = Vec::new();
    let mut star_k: f64 = 0.0;
    for j in 0..nseq {
        let mut best = Empirical::EmpiricallyFails;
        let mut best_w = None;
        let mut best_k = None;
        if shells.solves[j].iter().any(|s| s.argmins.is_empty()) {
            best = Empirical::Inconclusive;
        }
        for (_, path) in tracked.iter().filter(|(jj, _)| *jj == j) {
            let limit = match classify_sequence(path, t, conv_tol) {
                SequenceFate::Converged { limit, .. } => limit,
                SequenceFate::Diverged { .. } => continue,
                SequenceFate::Unresolved { .. } => {
                    if rank(Empirical::Inconclusive) < rank(best) {
                        best = Empirical::Inconclusive;
                    }
                    continue;
                }
            };
            let d = distances(shells, j, &limit);
            let q = quotients(shells, j, &d);
            let (v, k) = ratio_verdict(&q, t);
            if best_w.is_none() || rank(v) < rank(best) {
                best = v;
                best_k = k;
                best_w = Some(SequenceWitness {
                    sequence: j,
                    t: t.clone(),
                    values: q,
                });
            }
        }
        star.push(best);
        star_k = star_k.max(best_k.unwrap_or(0.0));
        if let Some(w) = best_w {
            star_w.push(w);
        }
    }
    let star_v = combine(star);

    // restricted inf-compactness: argmins must not run off through the search box
    let mut lo = vec![f64::INFINITY; prob.m];
    let mut hi = vec![f64::NEG_INFINITY; prob.m];
    let all = shells
        .solves
        .iter()
        .flatten()
        .chain(std::iter::once(&shells.base))
        .flat_map(|s| s.argmins.iter());
    for a in all {
        for i in 0..prob.m {
            lo[i] = lo[i].min(a[i]);
            hi[i] = hi[i].max(a[i]);
        }
    }
    let omega: Vec<(f64, f64)> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| {
            let pad = 0.1 * (h - l) + 1e-9;
            (l - pad, h + pad)
        })
        .collect();
    let step = shells.base.certificate.grid_step.clone();
    let on_face = |y: &[f64]| {
        (0..prob.m).any(|i| {
            (y[i] - prob.y_box[i].0).abs() <= step[i] || (prob.y_box[i].1 - y[i]).abs() <= step[i]
        })
    };
    let mut ric_w = Vec::new();
    let mut ric_v = Empirical::EmpiricallyHolds;
    for (j, path) in &tracked {
        let norms: Vec<f64> = path.iter().map(|y| norm(y)).collect();
        let k = norms.len();
        let tail = &norms[k.saturating_sub(TAIL)..];
        let escaping = tail.windows(2).all(|w| w[1] > w[0]) && on_face(&path[k - 1]);
        if escaping {
            ric_v = Empirical::EmpiricallyFails;
            ric_w.push(SequenceWitness {
                sequence: *j,
                t: t.clone(),
                values: norms,
            });
        }
    }

    let mut verdicts = vec![
        StabilityVerdict {
            property: StabilityProperty::RestrictedInfCompact,
            verdict: ric_v,
            witnesses: ric_w,
            kappa_estimate: None,
            anchor: None,
        },
        StabilityVerdict {
            property: StabilityProperty::InnerSemicontinuous,
            verdict: isc_v,
            witnesses: isc_w,
            kappa_estimate: None,
            anchor: Some(isc_anchor),
        },
        StabilityVerdict {
            property: StabilityProperty::InnerCalm,
            verdict: calm_v,
            witnesses: calm_w,
            kappa_estimate: calm_k,
            anchor: Some(calm_anchor),
        },
        StabilityVerdict {
            property: StabilityProperty::InnerCalmStar,
            verdict: star_v,
            witnesses: star_w,
            kappa_estimate: Some(star_k),
            anchor: None,
        },
    ];
    enforce_lattice(&mut verdicts);
    StabilityReport { verdicts, omega }
}

/// Downgrades verdict pairs that contradict the implications
/// inner calm ⇒ inner semicontinuous ⇒ restricted inf-compact and
/// inner calm ⇒ inner calm*.
pub fn enforce_lattice(v: &mut [StabilityVerdict]) {
    use Empirical::*;
    use StabilityProperty::*;
    let idx = |v: &[StabilityVerdict], p| v.iter().position(|s| s.property == p).unwrap();
    for (strong, weak) in [
        (InnerCalm, InnerSemicontinuous),
        (InnerSemicontinuous, RestrictedInfCompact),
        (InnerCalm, InnerCalmStar),
    ] {
        let (s, w) = (idx(v, strong), idx(v, weak));
        if v[s].verdict == EmpiricallyHolds && v[w].verdict == EmpiricallyFails {
            v[s].verdict = Inconclusive;
            v[w].verdict = Inconclusive;
        }
    }
}

/// Restricted inf-compactness, inner semicontinuity, inner calmness and inner
/// calmness* diagnostics along direction `u`.
pub fn stability_diagnostics(
    prob: &ParametricProblem,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
    cfg: &SolverConfig,
) -> Result<StabilityReport, SolverError> {
    let shells = ShellSolves::compute(prob, xbar, u, schedule, cfg)?;
    Ok(stability_from(
        prob,
        &shells,
        cfg,
        crate::oracle::OracleConfig::default().conv_tol,
    ))
}
