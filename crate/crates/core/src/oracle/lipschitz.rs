use rayon::prelude::*;
use serde::Serialize;

use super::{
    base_value, loglog_slope, subgradient_scan, OracleConfig, OracleError, SequenceFate,
    SubgradientScan, ValueFunction,
};
use crate::linalg::{self, norm};
use crate::solver::{shell_directions, SequenceSchedule};

const TAIL: usize = 5;
/// Gaps decaying slower than `t^MIN_DECAY` are treated as persistent.
const MIN_DECAY: f64 = 0.05;

/// Pair of points whose difference quotient `|V(b) − V(a)| / ‖b − a‖` is large.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuotientWitness {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub quotient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LipschitzVerdict {
    Lipschitz { modulus: f64 },
    NotLipschitz { witness: QuotientWitness },
    Inconclusive { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapWitness {
    pub x: Vec<f64>,
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub value: f64,
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub base_value: f64,
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ContinuityVerdict {
    EmpiricallyContinuous,
    Discontinuous { witness: GapWitness },
    Inconclusive,
}

/// Checks `max_j |V(x̄ + t_k w_j) − V(x̄)| → 0` over the shells.
pub fn continuity_diagnostic<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
    cfg: &OracleConfig,
) -> Result<ContinuityVerdict, OracleError> {
    schedule.validate()?;
    let base = base_value(v, xbar, u)?;
    let steps = schedule.steps();
    let worst: Vec<GapWitness> = (0..steps.len())
        .into_par_iter()
        .map(|k| {
            shell_directions(u, schedule, k)
                .iter()
                .map(|w| {
                    let mut x = xbar.to_vec();
                    linalg::axpy(&mut x, steps[k], w);
                    let value = v.value(&x);
                    let gap = (value - base).abs();
                    GapWitness {
                        x,
                        value,
                        base_value: base,
                        gap: if gap.is_nan() { f64::INFINITY } else { gap },
                    }
                })
                .max_by(|a, b| a.gap.total_cmp(&b.gap))
                .expect("at least one direction")
        })
        .collect();
    Ok(continuity_verdict(worst, &steps, cfg.gap_tol))
}

fn continuity_verdict(worst: Vec<GapWitness>, steps: &[f64], gap_tol: f64) -> ContinuityVerdict {
    let k = worst.len();
    let tail = TAIL.min(k);
    let gaps: Vec<f64> = worst[k - tail..].iter().map(|w| w.gap).collect();
    let last = gaps[tail - 1];
    if last <= gap_tol {
        return ContinuityVerdict::EmpiricallyContinuous;
    }
    let persistent = gaps.iter().all(|g| *g >= gap_tol)
        && (gaps.iter().any(|g| g.is_infinite())
            || loglog_slope(&steps[k - tail..], &gaps).is_none_or(|s| s < MIN_DECAY));
    if persistent {
        let witness = worst.into_iter().last().expect("nonempty");
        return ContinuityVerdict::Discontinuous { witness };
    }
    if gaps.windows(2).all(|w| w[1] < w[0]) {
        ContinuityVerdict::EmpiricallyContinuous
    } else {
        ContinuityVerdict::Inconclusive
    }
}

/// Verdict from a finished scan: Lipschitz iff the singular estimate is `{0}`
/// and the subgradient bound does not grow over the last shells.
pub fn lipschitz_from(scan: &SubgradientScan, xbar: &[f64]) -> LipschitzVerdict {
    let kk = scan.steps.len();
    if !scan.singular.rays.is_empty() {
        let mut best: Option<QuotientWitness> = None;
        for (j, fate) in scan.fates.iter().enumerate() {
            if let Some(SequenceFate::Diverged { .. }) = fate {
                let b = scan.points[j][kk - 1].clone();
                let quotient = (scan.values[j][kk - 1] - scan.base_value).abs()
                    / linalg::dist(&b, xbar).max(f64::MIN_POSITIVE);
                if best.as_ref().is_none_or(|w| quotient > w.quotient) {
                    best = Some(QuotientWitness {
                        a: xbar.to_vec(),
                        b,
                        quotient,
                    });
                }
            }
        }
        if let Some(witness) = best {
            return LipschitzVerdict::NotLipschitz { witness };
        }
    }
    if scan.limiting.unresolved > 0 {
        return LipschitzVerdict::Inconclusive {
            reason: format!(
                "{} unresolved subgradient sequence(s)",
                scan.limiting.unresolved
            ),
        };
    }
    if scan.limiting.points.is_empty() {
        return LipschitzVerdict::Inconclusive {
            reason: "no admissible subgradient sequence".into(),
        };
    }
    let shell_max = |range: std::ops::Range<usize>| -> f64 {
        scan.subgradients
            .iter()
            .flat_map(|seq| seq[range.clone()].iter().flatten())
            .map(|g| norm(g))
            .fold(0.0, f64::max)
    };
    let split = kk.saturating_sub(TAIL);
    let early = shell_max(0..split);
    let late = shell_max(split..kk);
    if late > 1.1 * early + 1e-9 && split > 0 {
        return LipschitzVerdict::Inconclusive {
            reason: format!("subgradient bound grows from {early} to {late} over the last shells"),
        };
    }
    LipschitzVerdict::Lipschitz {
        modulus: early.max(late),
    }
}

/// Verdict forced by a failed continuity check, if any.
pub fn continuity_gate(c: &ContinuityVerdict, xbar: &[f64]) -> Option<LipschitzVerdict> {
    match c {
        ContinuityVerdict::Discontinuous { witness } => Some(LipschitzVerdict::NotLipschitz {
            witness: QuotientWitness {
                a: xbar.to_vec(),
                b: witness.x.clone(),
                quotient: witness.gap / linalg::dist(&witness.x, xbar),
            },
        }),
        ContinuityVerdict::Inconclusive => Some(LipschitzVerdict::Inconclusive {
            reason: "directional continuity not established".into(),
        }),
        ContinuityVerdict::EmpiricallyContinuous => None,
    }
}

/// Directional Lipschitz verdict, preceded by the continuity check.
pub fn lipschitz_verdict<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
    cfg: &OracleConfig,
) -> Result<LipschitzVerdict, OracleError> {
    let c = continuity_diagnostic(v, xbar, u, schedule, cfg)?;
    if let Some(early) = continuity_gate(&c, xbar) {
        return Ok(early);
    }
    let scan = subgradient_scan(v, xbar, u, schedule, cfg)?;
    Ok(lipschitz_from(&scan, xbar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::AnalyticValue;

    fn run<F: Fn(&[f64]) -> f64 + Sync>(f: F, u: f64) -> LipschitzVerdict {
        let v = AnalyticValue::new(1, f);
        lipschitz_verdict(
            &v,
            &[0.0],
            &[u],
            &SequenceSchedule::default(),
            &OracleConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn verdicts() {
        assert!(matches!(
            run(|x| x[0].cbrt(), 1.0),
            LipschitzVerdict::NotLipschitz { .. }
        ));
        match run(|x| -x[0].abs(), 1.0) {
            LipschitzVerdict::Lipschitz { modulus } => assert!((modulus - 1.0).abs() < 1e-6),
            v => panic!("{v:?}"),
        }
        assert_eq!(
            run(|_| 3.0, 1.0),
            LipschitzVerdict::Lipschitz { modulus: 0.0 }
        );
    }

    #[test]
    fn continuity() {
        let sched = SequenceSchedule::default();
        let cfg = OracleConfig::default();
        let cube = AnalyticValue::new(1, |x: &[f64]| x[0].cbrt());
        assert_eq!(
            continuity_diagnostic(&cube, &[0.0], &[1.0], &sched, &cfg).unwrap(),
            ContinuityVerdict::EmpiricallyContinuous
        );
        let jump = AnalyticValue::new(1, |x: &[f64]| if x[0] > 0.0 { f64::INFINITY } else { 0.0 });
        assert!(matches!(
            continuity_diagnostic(&jump, &[0.0], &[1.0], &sched, &cfg).unwrap(),
            ContinuityVerdict::Discontinuous { .. }
        ));
        let step = AnalyticValue::new(1, |x: &[f64]| if x[0] > 0.0 { 1.0 } else { 0.0 });
        assert!(matches!(
            continuity_diagnostic(&step, &[0.0], &[1.0], &sched, &cfg).unwrap(),
            ContinuityVerdict::Discontinuous { .. }
        ));
    }
}
