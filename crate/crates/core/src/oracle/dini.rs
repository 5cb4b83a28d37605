use rayon::prelude::*;
use serde::Serialize;

use super::{base_value, classify_sequence, OracleError, SequenceFate, ValueFunction};
use crate::geometry::{sphere_directions, ZERO_DIRECTION};
use crate::linalg::{self, norm};
use crate::solver::SequenceSchedule;

const TAIL: usize = 5;

/// Upper and lower Dini derivatives with the raw difference quotients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiniEstimate {
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub upper: f64,
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub lower: f64,
    /// `(t_k, q_k)` pairs.
    #[serde(serialize_with = "crate::serde_ext::pairs")]
    pub samples: Vec<(f64, f64)>,
}

impl DiniEstimate {
    fn exact(value: f64, steps: &[f64]) -> Self {
        DiniEstimate {
            upper: value,
            lower: value,
            samples: steps.iter().map(|t| (*t, value)).collect(),
        }
    }
}

fn quotients<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    w: &[f64],
    base: f64,
    steps: &[f64],
) -> Vec<f64> {
    steps
        .par_iter()
        .map(|t| {
            let mut x = xbar.to_vec();
            linalg::axpy(&mut x, *t, w);
            let vx = v.value(&x);
            if vx.is_finite() {
                (vx - base) / t
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Limit behaviour of one quotient sequence: `(lower, upper)` over its tail.
fn tail_bounds(q: &[f64], steps: &[f64]) -> (f64, f64) {
    let tail = &q[q.len().saturating_sub(TAIL)..];
    if tail.iter().any(|x| x.is_infinite()) {
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        return (lo, f64::INFINITY);
    }
    let seq: Vec<Vec<f64>> = q.iter().map(|x| vec![*x]).collect();
    match classify_sequence(&seq, steps, 1e-9) {
        SequenceFate::Diverged { direction } => {
            let inf = direction[0].signum() * f64::INFINITY;
            (inf, inf)
        }
        SequenceFate::Converged { limit, .. } => (limit[0], limit[0]),
        _ => (
            tail.iter().cloned().fold(f64::INFINITY, f64::min),
            tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ),
    }
}

/// `V′₊(x̄;u)` and `V′₋(x̄;u)` from quotients along the ray `x̄ + t_k u`.
pub fn dini<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
) -> Result<DiniEstimate, OracleError> {
    schedule.validate()?;
    let base = base_value(v, xbar, u)?;
    let steps = schedule.steps();
    if norm(u) < ZERO_DIRECTION {
        return Ok(DiniEstimate::exact(0.0, &steps));
    }
    let q = quotients(v, xbar, u, base, &steps);
    let (lower, upper) = tail_bounds(&q, &steps);
    Ok(DiniEstimate {
        upper,
        lower,
        samples: steps.iter().cloned().zip(q).collect(),
    })
}

/// Bounds on the quotient `(V(x̄ + t w) − V(x̄))/t` as `t ↓ 0` and `w → 0` jointly.
///
/// Bounded radial slopes make this limit `0`; a radial slope escaping to `±∞`
/// along some sphere direction makes the corresponding bound infinite.
pub fn zero_direction_bounds<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    schedule: &SequenceSchedule,
) -> Result<DiniEstimate, OracleError> {
    schedule.validate()?;
    let n = v.dim();
    let base = base_value(v, xbar, &vec![0.0; n])?;
    let steps = schedule.steps();
    let mut upper: f64 = 0.0;
    let mut lower: f64 = 0.0;
    let mut samples = Vec::new();
    for w in sphere_directions(n, schedule.angles) {
        let q = quotients(v, xbar, &w, base, &steps);
        let (lo, hi) = tail_bounds(&q, &steps);
        if hi == f64::INFINITY {
            upper = f64::INFINITY;
        }
        if lo == f64::NEG_INFINITY {
            lower = f64::NEG_INFINITY;
        }
        samples.extend(steps.iter().cloned().zip(q));
    }
    Ok(DiniEstimate {
        upper,
        lower,
        samples,
    })
}
