use rayon::prelude::*;

use super::value::{solve_value, SolveResult, SolverConfig};
use super::{SequenceSchedule, SolverError};
use crate::expr::ParametricProblem;
use crate::geometry::{cap_directions, sphere_directions};
use crate::linalg::{self, norm};
use crate::oracle::{classify_sequence, SequenceFate, SetEstimate, ShellSample};

/// Tracked argmin sequences are seeded from at most this many final-shell argmins.
const MAX_SEEDS: usize = 64;
/// Limits this close to a base argmin are identified with it.
const SNAP_FACTOR: f64 = 10.0;

/// Solutions at `x̄` and at every shell point `x̄ + t_k w_{k,j}`.
#[derive(Clone, Debug)]
pub struct ShellSolves {
    pub base_x: Vec<f64>,
    pub direction: Vec<f64>,
    pub base: SolveResult,
    pub steps: Vec<f64>,
    /// `points[j][k]` and `solves[j][k]` for sequence `j`, shell `k`.
    pub points: Vec<Vec<Vec<f64>>>,
    pub solves: Vec<Vec<SolveResult>>,
}

/// Directions used at shell `k`: the shrinking cap around `u`, or the sphere when `u = 0`.
pub fn shell_directions(u: &[f64], schedule: &SequenceSchedule, k: usize) -> Vec<Vec<f64>> {
    if norm(u) < crate::geometry::ZERO_DIRECTION {
        sphere_directions(u.len(), schedule.angles)
    } else {
        cap_directions(u, schedule.cap_width(k), schedule.angles)
    }
}

impl ShellSolves {
    pub fn compute(
        prob: &ParametricProblem,
        xbar: &[f64],
        u: &[f64],
        schedule: &SequenceSchedule,
        cfg: &SolverConfig,
    ) -> Result<Self, SolverError> {
        schedule.validate()?;
        if u.len() != prob.n {
            return Err(SolverError::DimensionMismatch {
                expected: prob.n,
                got: u.len(),
            });
        }
        let base = solve_value(prob, xbar, cfg)?;
        if !base.value.is_finite() {
            return Err(SolverError::ValueAtBaseInfinite);
        }
        let steps = schedule.steps();
        let nseq = shell_directions(u, schedule, 0).len();
        let jobs: Vec<(usize, usize)> = (0..nseq)
            .flat_map(|j| (0..steps.len()).map(move |k| (j, k)))
            .collect();
        let results: Vec<Result<(Vec<f64>, SolveResult), SolverError>> = jobs
            .par_iter()
            .map(|&(j, k)| {
                let w = &shell_directions(u, schedule, k)[j];
                let mut x = xbar.to_vec();
                linalg::axpy(&mut x, steps[k], w);
                solve_value(prob, &x, cfg).map(|r| (x, r))
            })
            .collect();
        let mut points = vec![Vec::with_capacity(steps.len()); nseq];
        let mut solves = vec![Vec::with_capacity(steps.len()); nseq];
        for ((j, _), r) in jobs.iter().zip(results) {
            let (x, s) = r?;
            points[*j].push(x);
            solves[*j].push(s);
        }
        Ok(ShellSolves {
            base_x: xbar.to_vec(),
            direction: u.to_vec(),
            base,
            steps,
            points,
            solves,
        })
    }

    pub fn is_zero_direction(&self) -> bool {
        norm(&self.direction) < crate::geometry::ZERO_DIRECTION
    }

    /// Argmin sequences of shell solutions, traced backwards by nearest neighbour
    /// from each final-shell argmin. Sequences through an infeasible shell are dropped.
    pub fn tracked_sequences(&self) -> Vec<(usize, Vec<Vec<f64>>)> {
        let mut out = Vec::new();
        for (j, seq) in self.solves.iter().enumerate() {
            if seq.iter().any(|s| s.argmins.is_empty()) {
                continue;
            }
            let last = &seq[seq.len() - 1].argmins;
            let stride = last.len().div_ceil(MAX_SEEDS).max(1);
            for seed in last.iter().step_by(stride) {
                let mut path = vec![seed.clone()];
                for s in seq[..seq.len() - 1].iter().rev() {
                    let prev = path.last().unwrap();
                    let next = nearest(&s.argmins, prev).clone();
                    path.push(next);
                }
                path.reverse();
                out.push((j, path));
            }
        }
        out
    }
}

pub fn nearest<'a>(set: &'a [Vec<f64>], y: &[f64]) -> &'a Vec<f64> {
    set.iter()
        .min_by(|a, b| linalg::dist(a, y).total_cmp(&linalg::dist(b, y)))
        .expect("nonempty argmin set")
}

pub fn distance_to_set(set: &[Vec<f64>], y: &[f64]) -> f64 {
    set.iter()
        .map(|a| linalg::dist(a, y))
        .fold(f64::INFINITY, f64::min)
}

/// Estimate of `S(x̄; u)` from precomputed shell solves.
pub fn directional_from(shells: &ShellSolves, cfg: &SolverConfig, conv_tol: f64) -> SetEstimate {
    let mut est = SetEstimate::new(shells.base.argmins.first().map_or(0, |a| a.len()));
    for (j, seq) in shells.solves.iter().enumerate() {
        for (k, s) in seq.iter().enumerate() {
            est.shell_history.push(ShellSample {
                sequence: j,
                k,
                t: shells.steps[k],
                x: shells.points[j][k].clone(),
                value: s.value,
                vectors: s.argmins.clone(),
            });
        }
    }
    for (_, path) in shells.tracked_sequences() {
        match classify_sequence(&path, &shells.steps, conv_tol) {
            SequenceFate::Converged { limit, rate } => {
                let anchor = nearest(&shells.base.argmins, &limit);
                let limit = if linalg::dist(anchor, &limit) <= SNAP_FACTOR * cfg.cluster_tol {
                    anchor.clone()
                } else {
                    limit
                };
                est.push_point(limit, rate, cfg.cluster_tol);
            }
            SequenceFate::Diverged { .. } | SequenceFate::Unresolved { .. } => {
                est.unresolved += 1;
                est.pending.push(path.last().cloned().unwrap_or_default());
            }
        }
    }
    if shells.is_zero_direction() {
        for a in &shells.base.argmins {
            est.push_point(a.clone(), None, cfg.cluster_tol);
        }
    }
    est.finish();
    est
}

/// `S(x̄; u)`: accumulation points of argmins along directional sequences.
pub fn directional_solutions(
    prob: &ParametricProblem,
    xbar: &[f64],
    u: &[f64],
    schedule: &SequenceSchedule,
    cfg: &SolverConfig,
) -> Result<SetEstimate, SolverError> {
    let shells = ShellSolves::compute(prob, xbar, u, schedule, cfg)?;
    Ok(directional_from(
        &shells,
        cfg,
        crate::oracle::OracleConfig::default().conv_tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_problem;

    #[test]
    fn cube_root_direction() {
        let p = parse_problem("problem c\nparams n=1\nvars m=1\nbox y1 in [-2, 2]\nmin y1\nst x1 - y1^3 in NonPositive\n").unwrap();
        let s = directional_solutions(
            &p,
            &[0.0],
            &[1.0],
            &SequenceSchedule::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(s.points, vec![vec![0.0]]);
    }

    #[test]
    fn infinite_base_value() {
        let p = parse_problem(
            "problem j\nparams n=1\nvars m=1\nbox y1 in [0, 1]\nmin y1\nst x1 in NonPositive\n",
        )
        .unwrap();
        let r = directional_solutions(
            &p,
            &[1.0],
            &[1.0],
            &SequenceSchedule::default(),
            &SolverConfig::default(),
        );
        assert!(matches!(r, Err(SolverError::ValueAtBaseInfinite)));
    }
}
