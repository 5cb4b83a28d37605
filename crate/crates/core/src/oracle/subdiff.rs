use rayon::prelude::*;
use serde::Serialize;

use super::{
    base_value, classify_sequence, OracleConfig, OracleError, SequenceFate, SetEstimate,
    ShellSample, ValueFunction,
};
use crate::geometry::{convex_hull, h_to_v, Polyhedron};
use crate::linalg::{self, norm};
use crate::solver::{shell_directions, SequenceSchedule};

const TAIL: usize = 5;
/// Exponent of the shell-decreasing budget on `|V(x^k) − V(x̄)|`.
const GAP_BUDGET_EXP: f64 = 0.2;

fn stencil_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            dirs.push(d);
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            for (a, b) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
                let mut d = vec![0.0; n];
                d[i] = a;
                d[j] = b;
                dirs.push(d);
            }
        }
    }
    dirs
}

/// Fréchet subgradient candidates at `x`: a least-squares affine fit on a
/// stencil inside `B_radius(x)`, kept only if it minorizes every sample up to
/// `minorant_slack · ‖z − x‖`. The radius is halved until two consecutive
/// fits pass and agree.
pub fn frechet_subgradients<V: ValueFunction + ?Sized>(
    v: &V,
    x: &[f64],
    radius: f64,
    cfg: &OracleConfig,
) -> Vec<Vec<f64>> {
    let vx = v.value(x);
    if !vx.is_finite() || radius <= 0.0 {
        return Vec::new();
    }
    let n = x.len();
    let dirs = stencil_directions(n);
    let mut r = radius;
    let mut previous: Option<Vec<f64>> = None;
    for _ in 0..=cfg.max_halvings {
        let offsets: Vec<Vec<f64>> = [r, 0.5 * r]
            .iter()
            .flat_map(|s| dirs.iter().map(move |d| linalg::scale(d, *s)))
            .collect();
        let samples: Vec<(Vec<f64>, f64)> = offsets
            .into_par_iter()
            .map(|dz| {
                let z = linalg::add(x, &dz);
                let vz = v.value(&z);
                (dz, vz)
            })
            .collect();
        let finite: Vec<&(Vec<f64>, f64)> = samples.iter().filter(|s| s.1.is_finite()).collect();
        let rows: Vec<Vec<f64>> = finite.iter().map(|s| s.0.clone()).collect();
        let rhs: Vec<f64> = finite.iter().map(|s| s.1 - vx).collect();
        let fit = linalg::least_squares(&rows, &rhs, n).filter(|xi| {
            samples
                .iter()
                .all(|(dz, vz)| *vz >= vx + linalg::dot(xi, dz) - cfg.minorant_slack * norm(dz))
        });
        // a kink closer than the stencil radius still admits averaged minorants,
        // so the fit must also be stable under halving
        match (fit, previous.take()) {
            (Some(xi), Some(prev))
                if linalg::dist(&xi, &prev) <= cfg.fit_agreement * (1.0 + norm(&xi)) =>
            {
                return vec![xi];
            }
            (fit, _) => previous = fit,
        }
        r *= 0.5;
    }
    Vec::new()
}

/// Shell points, values and Fréchet subgradients along directional sequences.
#[derive(Clone, Debug)]
pub struct SubgradientScan {
    pub base_value: f64,
    pub steps: Vec<f64>,
    /// `points[j][k]` for sequence `j` at shell `k`.
    pub points: Vec<Vec<Vec<f64>>>,
    pub values: Vec<Vec<f64>>,
    /// `None` when the shell point fails the value-gap budget or no minorant was found.
    pub subgradients: Vec<Vec<Option<Vec<f64>>>>,
    pub admissible: Vec<Vec<bool>>,
    /// Per-sequence fate of the subgradient sequence; `None` when no tail was available.
    pub fates: Vec<Option<SequenceFate>>,
    /// Sequences whose value gap never fell inside the budget.
    pub excluded: Vec<bool>,
    pub limiting: SetEstimate,
    pub singular: SetEstimate,
}

fn budget(t: f64, t0: f64, base: f64, gap_tol: f64) -> f64 {
    gap_tol.max((t / t0).powf(GAP_BUDGET_EXP) * base.abs().max(1.0))
}

/// Shell point, its value, admissibility and Fréchet subgradient.
type ShellPoint = (Vec<f64>, f64, bool, Option<Vec<f64>>);

/// Runs the shell scan and classifies every subgradient sequence.
pub fn subgradient_scan<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
    cfg: &OracleConfig,
) -> Result<SubgradientScan, OracleError> {
    schedule.validate()?;
    let base = base_value(v, xbar, u)?;
    let n = v.dim();
    let steps = schedule.steps();
    let nseq = shell_directions(u, schedule, 0).len();
    let jobs: Vec<(usize, usize)> = (0..nseq)
        .flat_map(|j| (0..steps.len()).map(move |k| (j, k)))
        .collect();
    let results: Vec<ShellPoint> = jobs
        .par_iter()
        .map(|&(j, k)| {
            let w = &shell_directions(u, schedule, k)[j];
            let mut x = xbar.to_vec();
            linalg::axpy(&mut x, steps[k], w);
            let vx = v.value(&x);
            let ok = vx.is_finite()
                && (vx - base).abs() <= budget(steps[k], schedule.t0, base, cfg.gap_tol);
            let xi = if ok {
                frechet_subgradients(v, &x, cfg.stencil_frac * steps[k], cfg)
                    .into_iter()
                    .next()
            } else {
                None
            };
            (x, vx, ok, xi)
        })
        .collect();
    let kk = steps.len();
    let mut points = vec![Vec::with_capacity(kk); nseq];
    let mut values = vec![Vec::with_capacity(kk); nseq];
    let mut admissible = vec![Vec::with_capacity(kk); nseq];
    let mut subgradients = vec![Vec::with_capacity(kk); nseq];
    for (&(j, _), (x, vx, ok, xi)) in jobs.iter().zip(results) {
        points[j].push(x);
        values[j].push(vx);
        admissible[j].push(ok);
        subgradients[j].push(xi);
    }

    let mut limiting = SetEstimate::new(n);
    let mut singular = SetEstimate::new(n);
    singular.points.push(vec![0.0; n]);
    singular.rates.push(None);
    let mut fates = Vec::with_capacity(nseq);
    let mut excluded = Vec::with_capacity(nseq);
    for j in 0..nseq {
        for k in 0..kk {
            limiting.shell_history.push(ShellSample {
                sequence: j,
                k,
                t: steps[k],
                x: points[j][k].clone(),
                value: values[j][k],
                vectors: subgradients[j][k].iter().cloned().collect(),
            });
        }
        let out = !admissible[j][kk - 1];
        excluded.push(out);
        if out {
            fates.push(None);
            continue;
        }
        let start = (0..kk)
            .rev()
            .take_while(|&k| subgradients[j][k].is_some())
            .last()
            .unwrap_or(kk);
        if kk - start < TAIL {
            limiting.unresolved += 1;
            if let Some(Some(last)) = subgradients[j].last() {
                limiting.pending.push(last.clone());
            }
            fates.push(None);
            continue;
        }
        let seq: Vec<Vec<f64>> = subgradients[j][start..]
            .iter()
            .map(|s| s.clone().expect("tail subgradient"))
            .collect();
        let fate = classify_sequence(&seq, &steps[start..], cfg.conv_tol);
        match &fate {
            SequenceFate::Converged { limit, rate } => {
                limiting.push_point(limit.clone(), *rate, cfg.cluster_tol)
            }
            SequenceFate::Diverged { direction } => singular.push_ray(direction, cfg.cluster_tol),
            SequenceFate::Unresolved { last } => {
                limiting.unresolved += 1;
                limiting.pending.push(last.clone());
            }
        }
        fates.push(Some(fate));
    }
    limiting.finish();
    singular.shell_history = limiting.shell_history.clone();
    singular.finish();
    Ok(SubgradientScan {
        base_value: base,
        steps,
        points,
        values,
        subgradients,
        admissible,
        fates,
        excluded,
        limiting,
        singular,
    })
}

/// Estimate of `∂V(x̄;u)`: limits of convergent Fréchet subgradient sequences.
pub fn directional_limiting_subdiff<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
    cfg: &OracleConfig,
) -> Result<SetEstimate, OracleError> {
    Ok(subgradient_scan(v, xbar, u, schedule, cfg)?.limiting)
}

/// Estimate of `∂^∞V(x̄;u)`: `{0}` plus unit rays of diverging subgradient sequences.
pub fn directional_singular_subdiff<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
    cfg: &OracleConfig,
) -> Result<SetEstimate, OracleError> {
    Ok(subgradient_scan(v, xbar, u, schedule, cfg)?.singular)
}

/// Convex hull of a bounded limiting estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClarkeHull {
    pub vertices: Vec<Vec<f64>>,
    pub hull: Polyhedron,
}

pub fn clarke_from(
    limiting: &SetEstimate,
    singular: &SetEstimate,
) -> Result<ClarkeHull, OracleError> {
    if !singular.rays.is_empty() {
        return Err(OracleError::NotDirectionallyLipschitz(format!(
            "singular estimate has {} nonzero ray(s)",
            singular.rays.len()
        )));
    }
    if limiting.points.is_empty() {
        return Err(OracleError::NotDirectionallyLipschitz(
            "limiting estimate is empty".into(),
        ));
    }
    let hull = convex_hull(limiting.dim, &limiting.points)?;
    let (mut vertices, _) = h_to_v(&hull)?;
    vertices.sort_by(|a, b| crate::geometry::lex_cmp(a, b));
    Ok(ClarkeHull { vertices, hull })
}

/// `co ∂V(x̄;u)`, defined when the singular estimate is `{0}`.
pub fn directional_clarke_subdiff<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
    cfg: &OracleConfig,
) -> Result<ClarkeHull, OracleError> {
    let scan = subgradient_scan(v, xbar, u, schedule, cfg)?;
    clarke_from(&scan.limiting, &scan.singular)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::AnalyticValue;

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    #[test]
    fn frechet_cube_root() {
        let v = AnalyticValue::new(1, |x: &[f64]| x[0].cbrt());
        let g = frechet_subgradients(&v, &[0.008], 1e-3, &cfg());
        assert_eq!(g.len(), 1);
        assert!((g[0][0] - 1.0 / (3.0 * 0.04)).abs() < 1e-2, "{:?}", g);
    }

    #[test]
    fn frechet_concave_kink_is_empty() {
        let v = AnalyticValue::new(1, |x: &[f64]| -x[0].abs());
        assert!(frechet_subgradients(&v, &[0.0], 1e-2, &cfg()).is_empty());
    }

    #[test]
    fn frechet_affine() {
        let v = AnalyticValue::new(1, |x: &[f64]| 2.0 * x[0]);
        let g = frechet_subgradients(&v, &[0.3], 1e-2, &cfg());
        assert!((g[0][0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cube_root_is_singular_in_direction() {
        let v = AnalyticValue::new(1, |x: &[f64]| x[0].cbrt());
        let s = subgradient_scan(&v, &[0.0], &[1.0], &SequenceSchedule::default(), &cfg()).unwrap();
        assert!(s.limiting.is_empty());
        assert_eq!(s.singular.rays, vec![vec![1.0]]);
        assert!(clarke_from(&s.limiting, &s.singular).is_err());
    }

    #[test]
    fn abs_clarke_at_zero() {
        let v = AnalyticValue::new(1, |x: &[f64]| x[0].abs());
        let h =
            directional_clarke_subdiff(&v, &[0.0], &[0.0], &SequenceSchedule::default(), &cfg())
                .unwrap();
        assert_eq!(h.vertices.len(), 2);
        assert!((h.vertices[0][0] + 1.0).abs() < 1e-6 && (h.vertices[1][0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weighted_l1_in_plane() {
        let v = AnalyticValue::new(2, |x: &[f64]| x[0].abs() + 2.0 * x[1].abs());
        let l = directional_limiting_subdiff(
            &v,
            &[0.0, 0.0],
            &[1.0, 0.0],
            &SequenceSchedule::default(),
            &cfg(),
        )
        .unwrap();
        assert_eq!(l.points.len(), 2, "{:?}", l.points);
        for want in [[1.0, -2.0], [1.0, 2.0]] {
            assert!(l.points.iter().any(|p| linalg::dist(p, &want) < 1e-6));
        }
    }
}
