use serde::Serialize;

use super::{
    directional_multipliers, DirectionMode, DirectionalAnalysis, EngineConfig, EngineError,
    MultiplierSet, SmoothModel,
};
use crate::geometry::{Polyhedron, LP_TOL};
use crate::linalg;
use crate::lp::LpOutcome;
use crate::oracle::{SequenceFate, ShellSample};
use crate::solver::{Empirical, StabilityProperty};

/// Base solutions used per rhs beyond which `S(x̄; u)` is thinned.
const MAX_RHS_SOLUTIONS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Which {
    /// Limiting subdifferential, normal multipliers (`α = 1`).
    Limiting,
    /// Singular subdifferential, singular multipliers (`α = 0`).
    Singular,
}

impl Which {
    pub fn alpha(self) -> u8 {
        match self {
            Which::Limiting => 1,
            Which::Singular => 0,
        }
    }
}

/// Hypothesis variants of the upper estimates, strongest stability first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    InnerCalm,
    InnerSemicontinuous,
    InnerCalmStar,
    RestrictedInfCompact,
}

impl Variant {
    /// Preference order for automatic selection.
    pub const PREFERENCE: [Variant; 4] = [
        Variant::InnerCalm,
        Variant::InnerSemicontinuous,
        Variant::InnerCalmStar,
        Variant::RestrictedInfCompact,
    ];

    pub fn prerequisite(self) -> StabilityProperty {
        match self {
            Variant::InnerCalm => StabilityProperty::InnerCalm,
            Variant::InnerSemicontinuous => StabilityProperty::InnerSemicontinuous,
            Variant::InnerCalmStar => StabilityProperty::InnerCalmStar,
            Variant::RestrictedInfCompact => StabilityProperty::RestrictedInfCompact,
        }
    }

    /// Calmness-type variants drop the zero-direction multiplier term.
    pub fn drops_zero_term(self) -> bool {
        matches!(self, Variant::InnerCalm | Variant::InnerCalmStar)
    }

    /// Variants stated at a single base solution.
    pub fn single_anchor(self) -> bool {
        matches!(self, Variant::InnerCalm | Variant::InnerSemicontinuous)
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::RestrictedInfCompact => "i",
            Variant::InnerCalmStar => "ii",
            Variant::InnerSemicontinuous => "iii",
            Variant::InnerCalm => "iv",
        }
    }
}

/// Strongest variant whose stability prerequisite was not refuted.
pub fn select_variant(analysis: &DirectionalAnalysis) -> Option<Variant> {
    Variant::PREFERENCE
        .into_iter()
        .find(|v| analysis.stability.get(v.prerequisite()).verdict != Empirical::EmpiricallyFails)
}

fn require(analysis: &DirectionalAnalysis, variant: Variant) -> Result<(), EngineError> {
    let v = analysis.stability.get(variant.prerequisite());
    if v.verdict == Empirical::EmpiricallyFails {
        return Err(EngineError::StabilityPrereqFailed(format!(
            "{:?} fails empirically",
            v.property
        )));
    }
    Ok(())
}

/// Base solutions over which the right-hand side is assembled.
pub fn rhs_solutions(analysis: &DirectionalAnalysis, variant: Variant) -> Vec<Vec<f64>> {
    let est = &analysis.solutions;
    let mut ys: Vec<Vec<f64>> = match variant {
        Variant::RestrictedInfCompact => est
            .points
            .iter()
            .filter(|y| analysis.stability.in_omega(y))
            .cloned()
            .collect(),
        Variant::InnerCalmStar => est.points.clone(),
        Variant::InnerSemicontinuous | Variant::InnerCalm => {
            match &analysis.stability.get(variant.prerequisite()).anchor {
                Some(a) => vec![a.clone()],
                None => est.points.clone(),
            }
        }
    };
    if ys.len() > MAX_RHS_SOLUTIONS {
        let stride = ys.len().div_ceil(MAX_RHS_SOLUTIONS);
        let last = ys.last().cloned();
        ys = ys.into_iter().step_by(stride).collect();
        if let Some(l) = last {
            if ys.last() != Some(&l) {
                ys.push(l);
            }
        }
    }
    ys
}

/// Multiplier sets forming the right-hand side for one `α` and variant.
pub fn rhs_sets(
    model: &SmoothModel,
    analysis: &DirectionalAnalysis,
    alpha: u8,
    variant: Variant,
    cfg: &EngineConfig,
) -> Result<Vec<MultiplierSet>, EngineError> {
    let mut sets = Vec::new();
    for y in rhs_solutions(analysis, variant) {
        let cu = analysis.critical_cone_at(model, &y, false, cfg)?;
        sets.push(directional_multipliers(
            model,
            &analysis.xbar,
            &y,
            &analysis.u,
            &cu,
            alpha,
            DirectionMode::DirU,
        )?);
        if !variant.drops_zero_term() {
            let c0 = analysis.critical_cone_at(model, &y, true, cfg)?;
            sets.push(directional_multipliers(
                model,
                &analysis.xbar,
                &y,
                &analysis.u,
                &c0,
                alpha,
                DirectionMode::Dir0Sphere,
            )?);
        }
    }
    Ok(sets)
}

/// Distinct `ζ`-pieces of a union of multiplier sets, sorted for output.
pub fn zeta_union(sets: &[MultiplierSet]) -> Vec<Polyhedron> {
    let mut out: Vec<Polyhedron> = Vec::new();
    for s in sets {
        for pc in &s.pieces {
            if !out.contains(&pc.zeta) {
                out.push(pc.zeta.clone());
            }
        }
    }
    out.sort_by(|a, b| {
        serde_json::to_string(a)
            .unwrap_or_default()
            .cmp(&serde_json::to_string(b).unwrap_or_default())
    });
    out
}

fn union_distance(pieces: &[Polyhedron], z: &[f64]) -> f64 {
    pieces
        .iter()
        .filter_map(|p| p.distance_inf(z))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Verdict {
    Holds,
    Violated {
        witness: Vec<f64>,
        #[serde(serialize_with = "crate::serde_ext::f64")]
        distance: f64,
        shell: Option<ShellSample>,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionVerdict {
    pub theorem: Which,
    pub variant: Variant,
    pub lhs_points: Vec<Vec<f64>>,
    pub lhs_rays: Vec<Vec<f64>>,
    pub rhs_solutions: Vec<Vec<f64>>,
    pub rhs_pieces: Vec<Polyhedron>,
    pub verdict: Verdict,
    #[serde(serialize_with = "crate::serde_ext::vec")]
    pub distances: Vec<f64>,
    pub provenance: Vec<String>,
}

/// Last shell sample of the oracle sequence producing `z`.
fn provenance_sample(
    analysis: &DirectionalAnalysis,
    which: Which,
    z: &[f64],
) -> Option<ShellSample> {
    let scan = &analysis.scan;
    let j = scan.fates.iter().position(|f| match (which, f) {
        (Which::Limiting, Some(SequenceFate::Converged { limit, .. })) => {
            linalg::dist(limit, z) <= 1e-6 * (1.0 + linalg::norm(z))
        }
        (Which::Singular, Some(SequenceFate::Diverged { direction })) => {
            linalg::dist(direction, z) <= 1e-2
        }
        _ => false,
    })?;
    let k = scan.steps.len() - 1;
    scan.limiting
        .shell_history
        .iter()
        .find(|s| s.sequence == j && s.k == k)
        .cloned()
}

/// Upper-estimate inclusion for the limiting (`α = 1`) or singular (`α = 0`)
/// subdifferential from a finished analysis.
pub fn upper_estimate_from(
    model: &SmoothModel,
    analysis: &DirectionalAnalysis,
    which: Which,
    variant: Variant,
    cfg: &EngineConfig,
) -> Result<InclusionVerdict, EngineError> {
    require(analysis, variant)?;
    let sets = rhs_sets(model, analysis, which.alpha(), variant, cfg)?;
    let pieces = zeta_union(&sets);
    let (lhs_points, lhs_rays) = match which {
        Which::Limiting => (analysis.scan.limiting.points.clone(), Vec::new()),
        Which::Singular => (Vec::new(), analysis.scan.singular.rays.clone()),
    };
    let lhs: Vec<&Vec<f64>> = lhs_points.iter().chain(&lhs_rays).collect();
    let distances: Vec<f64> = lhs.iter().map(|z| union_distance(&pieces, z)).collect();
    let worst = distances
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > cfg.incl_tol)
        .max_by(|a, b| a.1.total_cmp(b.1));
    let verdict = if let Some((i, d)) = worst {
        Verdict::Violated {
            witness: lhs[i].clone(),
            distance: *d,
            shell: provenance_sample(analysis, which, lhs[i]),
        }
    } else if analysis.scan.limiting.unresolved > 0 {
        Verdict::Inconclusive {
            reason: format!(
                "{} oracle sequence(s) unresolved",
                analysis.scan.limiting.unresolved
            ),
        }
    } else {
        Verdict::Holds
    };
    let mut provenance = vec![
        format!(
            "variant ({}) with prerequisite {:?}",
            variant.label(),
            variant.prerequisite()
        ),
        "solution set replaced by its numerical estimate".to_string(),
        format!(
            "critical cone padded by {} on finite quotient bounds",
            cfg.slab_pad
        ),
    ];
    if which == Which::Singular {
        provenance.push("zero element of the singular estimate is not tested".to_string());
    }
    if !analysis.solutions.converged() {
        provenance.push(format!(
            "{} directional solution sequence(s) unresolved",
            analysis.solutions.unresolved
        ));
    }
    Ok(InclusionVerdict {
        theorem: which,
        variant,
        lhs_points,
        lhs_rays,
        rhs_solutions: rhs_solutions(analysis, variant),
        rhs_pieces: pieces,
        verdict,
        distances,
        provenance,
    })
}

/// Outcome of the sufficient condition for directional Lipschitz continuity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SufficientVerdict {
    Certified,
    /// `witness` is a parameter point or a nonzero `ζ`, depending on `reason`.
    NotCertified {
        reason: String,
        witness: Vec<f64>,
    },
}

/// A point of `p` with a nonzero coordinate, if any.
fn nonzero_element(p: &Polyhedron) -> Option<Vec<f64>> {
    for j in 0..p.dim {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; p.dim];
            c[j] = s;
            match p.maximize(&c) {
                LpOutcome::Optimal { x, value } if value > LP_TOL => return Some(x),
                LpOutcome::Unbounded => {
                    let boxed =
                        p.intersect(&Polyhedron::boxed(&vec![-1.0; p.dim], &vec![1.0; p.dim]));
                    if let LpOutcome::Optimal { x, .. } = boxed.maximize(&c) {
                        return Some(x);
                    }
                }
                _ => {}
            }
        }
    }
    None
}

/// First shell point without a solution, else the last shell point of sequence 0.
fn fallback_point(analysis: &DirectionalAnalysis) -> Vec<f64> {
    let sh = &analysis.shells;
    for (j, seq) in sh.solves.iter().enumerate() {
        if let Some(k) = seq.iter().position(|s| s.argmins.is_empty()) {
            return sh.points[j][k].clone();
        }
    }
    sh.points
        .first()
        .and_then(|p| p.last().cloned())
        .unwrap_or_else(|| analysis.xbar.clone())
}

/// Certified iff the union of `ζ`-projections of the singular multiplier sets is `{0}`.
pub fn lipschitz_sufficient_from(
    model: &SmoothModel,
    analysis: &DirectionalAnalysis,
    variant: Variant,
    cfg: &EngineConfig,
) -> Result<SufficientVerdict, EngineError> {
    let prereq = analysis.stability.get(variant.prerequisite());
    if prereq.verdict == Empirical::EmpiricallyFails {
        let at = prereq
            .witnesses
            .first()
            .and_then(|w| analysis.shells.points.get(w.sequence))
            .and_then(|pts| pts.last().cloned());
        return Ok(SufficientVerdict::NotCertified {
            reason: format!("{:?} fails empirically", variant.prerequisite()),
            witness: at.unwrap_or_else(|| fallback_point(analysis)),
        });
    }
    if let crate::oracle::ContinuityVerdict::Discontinuous { witness } = &analysis.continuity {
        return Ok(SufficientVerdict::NotCertified {
            reason: "value function is not directionally continuous".into(),
            witness: witness.x.clone(),
        });
    }
    let sets = rhs_sets(model, analysis, 0, variant, cfg)?;
    let pieces = zeta_union(&sets);
    if pieces.is_empty() {
        return Ok(SufficientVerdict::NotCertified {
            reason: "singular multiplier union is empty".into(),
            witness: fallback_point(analysis),
        });
    }
    for p in &pieces {
        if let Some(z) = nonzero_element(p) {
            return Ok(SufficientVerdict::NotCertified {
                reason: "singular multipliers with nonzero parameter component".into(),
                witness: z.iter().map(|v| linalg::snap(*v, 1e-9)).collect(),
            });
        }
    }
    Ok(SufficientVerdict::Certified)
}
