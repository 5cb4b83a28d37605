use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::expr::ParametricProblem;
use crate::linalg;

pub const MAX_DECISION_DIM: usize = 3;
/// Refinement tolerances: inequalities exact, equations at rounding level.
const REFINE_INEQ_TOL: f64 = 0.0;
const REFINE_EQ_TOL: f64 = 1e-15;
const RESTORE_ITERS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Grid points per decision coordinate.
    pub grid: usize,
    /// Value tolerance relative to `1 + |V(x)|`, or to the objective's spread over
    /// the grid when that is smaller.
    pub tol: f64,
    pub cluster_tol: f64,
    /// Feasibility tolerance relative to `1 + |P(x, y)|`.
    pub feas_tol: f64,
    pub starts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid: 201,
            tol: 1e-6,
            cluster_tol: 1e-3,
            feas_tol: 1e-9,
            starts: 8,
        }
    }
}

impl SolverConfig {
    /// Points per coordinate actually used; three-dimensional grids are thinned
    /// so the total cell count stays near `grid^2`.
    pub fn points_per_axis(&self, m: usize) -> usize {
        let g = self.grid.max(3);
        if m <= 2 {
            g
        } else {
            ((g * g) as f64).powf(1.0 / m as f64).floor().max(3.0) as usize
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub grid_points: usize,
    pub grid_step: Vec<f64>,
    pub refinement_iters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    /// `V(x)`; `+∞` when no feasible point was found.
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub value: f64,
    pub argmins: Vec<Vec<f64>>,
    pub certificate: Certificate,
}

impl SolveResult {
    pub fn is_infeasible(&self) -> bool {
        self.value == f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug)]
struct Eval {
    viol: f64,
    f: f64,
}

struct Evaluator<'a> {
    prob: &'a ParametricProblem,
    x: &'a [f64],
    ineq_tol: f64,
    eq_tol: f64,
}

impl Evaluator<'_> {
    fn eval(&self, y: &[f64]) -> Eval {
        let viol = match self.prob.constraint_values(self.x, y) {
            Ok(v) => {
                let (vi, ve) = self.prob.gamma_set().split_violation(&v);
                let scale = 1.0 + linalg::norm(&v);
                // below tolerance counts as exactly feasible
                if vi <= self.ineq_tol * scale && ve <= self.eq_tol * scale {
                    0.0
                } else {
                    vi.max(ve)
                }
            }
            Err(_) => f64::INFINITY,
        };
        let f = self
            .prob
            .objective_value(self.x, y)
            .unwrap_or(f64::INFINITY);
        Eval { viol, f }
    }

    fn better(a: Eval, b: Eval) -> bool {
        if a.viol == 0.0 && b.viol == 0.0 {
            a.f < b.f
        } else {
            a.viol < b.viol
        }
    }
}

fn grid_point(idx: usize, per_axis: usize, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let mut rem = idx;
    let mut y = Vec::with_capacity(lo.len());
    for i in (0..lo.len()).rev() {
        let k = rem % per_axis;
        rem /= per_axis;
        y.push(lo[i] + (hi[i] - lo[i]) * k as f64 / (per_axis - 1) as f64);
    }
    y.reverse();
    y
}

fn grid_index(idx: usize, per_axis: usize, m: usize) -> Vec<usize> {
    let mut rem = idx;
    let mut out = vec![0; m];
    for i in (0..m).rev() {
        out[i] = rem % per_axis;
        rem /= per_axis;
    }
    out
}

/// Gauss-Newton projection of `y` onto the violated and nearly active rows of
/// `P(x, ·) ∈ Γ`, aiming a few ulps inside the inequalities.
fn restore(
    ev: &Evaluator<'_>,
    mut y: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
) -> Option<(Vec<f64>, Eval)> {
    let m = y.len();
    let gamma = ev.prob.gamma_set();
    for _ in 0..RESTORE_ITERS {
        let e = ev.eval(&y);
        if e.viol == 0.0 {
            return Some((y, e));
        }
        if !e.viol.is_finite() {
            return None;
        }
        let v = ev.prob.constraint_values(ev.x, &y).ok()?;
        let jac = ev.prob.jacobian(ev.x, &y).ok()?;
        let margin = 4.0 * f64::EPSILON * (1.0 + linalg::norm(&v));
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for r in &gamma.ineqs {
            let res = r.residual(&v);
            if res > -margin {
                rows.push(linalg::mat_t_vec(&jac.dy, &r.normal, m));
                rhs.push(-(res + margin));
            }
        }
        for r in &gamma.eqs {
            rows.push(linalg::mat_t_vec(&jac.dy, &r.normal, m));
            rhs.push(-r.residual(&v));
        }
        let mut gram: Vec<Vec<f64>> = rows
            .iter()
            .map(|a| rows.iter().map(|b| linalg::dot(a, b)).collect())
            .collect();
        let diag = (0..rows.len()).map(|i| gram[i][i]).fold(0.0, f64::max);
        if diag <= 0.0 {
            return None;
        }
        for (i, row) in gram.iter_mut().enumerate() {
            row[i] += 1e-12 * diag;
        }
        let w = linalg::least_squares(&gram, &rhs, rows.len())?;
        let dy = linalg::mat_t_vec(&rows, &w, m);
        for i in 0..m {
            y[i] = (y[i] + dy[i]).clamp(lo[i], hi[i]);
        }
    }
    let e = ev.eval(&y);
    (e.viol == 0.0).then_some((y, e))
}

/// Coordinate plus pairwise-diagonal pattern search with lexicographic
/// (violation, objective) acceptance and halving steps.
fn pattern_search(
    ev: &Evaluator<'_>,
    start: Vec<f64>,
    step0: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> (Vec<f64>, Eval, usize) {
    let m = start.len();
    let mut moves: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; m];
            d[i] = s;
            moves.push(d);
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = vec![0.0; m];
                d[i] = si;
                d[j] = sj;
                moves.push(d);
            }
        }
    }
    let mut y = start;
    let mut cur = ev.eval(&y);
    if cur.viol > 0.0 {
        if let Some((r, e)) = restore(ev, y.clone(), lo, hi) {
            y = r;
            cur = e;
        }
    }
    let mut scale = 1.0;
    let mut iters = 0;
    while iters < 20_000 {
        iters += 1;
        let mut improved = false;
        for d in &moves {
            let cand: Vec<f64> = (0..m)
                .map(|i| (y[i] + scale * step0[i] * d[i]).clamp(lo[i], hi[i]))
                .collect();
            let e = ev.eval(&cand);
            if Evaluator::better(e, cur) {
                y = cand;
                cur = e;
                improved = true;
                break;
            }
            if cur.viol == 0.0 && e.viol > 0.0 && e.f < cur.f {
                if let Some((r, er)) = restore(ev, cand, lo, hi) {
                    if Evaluator::better(er, cur) {
                        y = r;
                        cur = er;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            scale *= 0.5;
            let tiny = step0
                .iter()
                .zip(&y)
                .all(|(s, yi)| scale * s <= (4.0 * f64::EPSILON * yi.abs()).max(1e-20));
            if tiny {
                break;
            }
        }
    }
    (y, cur, iters)
}

/// `V(x)` and `S(x)` by grid search over the box followed by multistart refinement.
pub fn solve_value(
    prob: &ParametricProblem,
    x: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    let m = prob.m;
    if m > MAX_DECISION_DIM {
        return Err(SolverError::TooManyVariables(m));
    }
    if x.len() != prob.n {
        return Err(SolverError::DimensionMismatch {
            expected: prob.n,
            got: x.len(),
        });
    }
    let lo = prob.box_lo();
    let hi = prob.box_hi();
    let per_axis = cfg.points_per_axis(m);
    let total = per_axis.pow(m as u32);
    let step: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l) / (per_axis - 1) as f64)
        .collect();
    let ev = Evaluator {
        prob,
        x,
        ineq_tol: REFINE_INEQ_TOL,
        eq_tol: REFINE_EQ_TOL,
    };
    let grid: Vec<Eval> = (0..total)
        .into_par_iter()
        .map(|i| ev.eval(&grid_point(i, per_axis, &lo, &hi)))
        .collect();
    // grid cells on an equality manifold are only feasible up to the step size
    let slope = grid_slope(&grid, per_axis, m);
    let hmax = step.iter().cloned().fold(0.0, f64::max);
    let grid_tol = slope * hmax;
    let mut feasible: Vec<usize> = (0..total)
        .filter(|&i| grid[i].viol <= grid_tol && grid[i].f.is_finite())
        .collect();
    if feasible.is_empty() {
        let best = grid.iter().map(|e| e.viol).fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            feasible = (0..total)
                .filter(|&i| grid[i].viol <= best * 1.000001)
                .collect();
        }
    }
    let exact_grid = |i: &&usize| grid[**i].viol == 0.0;
    feasible.sort_by(|&a, &b| {
        (grid[a].viol > 0.0)
            .cmp(&(grid[b].viol > 0.0))
            .then(grid[a].f.total_cmp(&grid[b].f))
            .then(a.cmp(&b))
    });
    let mut starts: Vec<usize> = Vec::new();
    for &i in &feasible {
        if starts.len() >= cfg.starts {
            break;
        }
        let gi = grid_index(i, per_axis, m);
        let far = starts.iter().all(|&s| {
            let gs = grid_index(s, per_axis, m);
            gi.iter().zip(&gs).any(|(a, b)| a.abs_diff(*b) >= 2)
        });
        if far {
            starts.push(i);
        }
    }
    let refined: Vec<(Vec<f64>, Eval, usize)> = starts
        .par_iter()
        .map(|&i| pattern_search(&ev, grid_point(i, per_axis, &lo, &hi), &step, &lo, &hi))
        .collect();
    let iters = refined.iter().map(|r| r.2).sum();
    let report = Evaluator {
        prob,
        x,
        ineq_tol: cfg.feas_tol,
        eq_tol: cfg.feas_tol,
    };
    let mut candidates: Vec<(Vec<f64>, f64)> = refined
        .into_iter()
        .filter(|r| report.eval(&r.0).viol == 0.0)
        .map(|r| (r.0, r.1.f))
        .collect();
    candidates.extend(
        feasible
            .iter()
            .filter(exact_grid)
            .map(|&i| (grid_point(i, per_axis, &lo, &hi), grid[i].f)),
    );
    let certificate = Certificate {
        grid_points: per_axis,
        grid_step: step,
        refinement_iters: iters,
    };
    let value = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    if !value.is_finite() {
        return Ok(SolveResult {
            value: f64::INFINITY,
            argmins: Vec::new(),
            certificate,
        });
    }
    // objectives that flatten with the parameter get a proportionally tighter tolerance
    let spread = feasible
        .iter()
        .map(|&i| grid[i].f)
        .fold(f64::NEG_INFINITY, f64::max)
        - value;
    let vtol = cfg.tol * (1.0 + value.abs()).min(spread.max(0.0));
    let mut near: Vec<(Vec<f64>, f64)> = candidates
        .into_iter()
        .filter(|c| c.1 <= value + vtol)
        .collect();
    near.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(crate::geometry::lex_cmp(&a.0, &b.0))
    });
    let mut argmins: Vec<Vec<f64>> = Vec::new();
    for (y, _) in near {
        if argmins
            .iter()
            .all(|a| linalg::dist(a, &y) > cfg.cluster_tol)
        {
            argmins.push(y);
        }
    }
    argmins.sort_by(|a, b| crate::geometry::lex_cmp(a, b));
    Ok(SolveResult {
        value,
        argmins,
        certificate,
    })
}

/// Largest violation change per unit step between neighbouring grid cells.
fn grid_slope(grid: &[Eval], per_axis: usize, m: usize) -> f64 {
    let mut slope: f64 = 0.0;
    let mut stride = 1;
    for _ in 0..m {
        for i in 0..grid.len() {
            if (i / stride) % per_axis + 1 < per_axis {
                let (a, b) = (grid[i].viol, grid[i + stride].viol);
                if a.is_finite() && b.is_finite() {
                    slope = slope.max((a - b).abs());
                }
            }
        }
        stride *= per_axis;
    }
    slope
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_problem;

    fn prob(text: &str) -> ParametricProblem {
        parse_problem(text).unwrap()
    }

    #[test]
    fn cube_root_value() {
        let p = prob("problem c\nparams n=1\nvars m=1\nbox y1 in [-2, 2]\nmin y1\nst x1 - y1^3 in NonPositive\n");
        let r = solve_value(&p, &[0.008], &SolverConfig::default()).unwrap();
        assert!((r.value - 0.2).abs() <= 1e-4, "{}", r.value);
        assert_eq!(r.argmins.len(), 1);
        assert!((r.argmins[0][0] - 0.2).abs() <= 1e-4);
    }

    #[test]
    fn flat_objective_gives_whole_box() {
        let p = prob("problem d\nparams n=1\nvars m=1\nbox y1 in [-1, 1]\nmin x1*y1\nst y1 in Poly{[1, 1]; [-1, 1]}\n");
        let r = solve_value(&p, &[0.0], &SolverConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.argmins.len(), 201);
    }

    #[test]
    fn infeasible_marker() {
        let p = prob("problem e\nparams n=1\nvars m=1\nbox y1 in [1, 2]\nmin y1\nst y1 in Zero\n");
        let r = solve_value(&p, &[0.0], &SolverConfig::default()).unwrap();
        assert!(r.is_infeasible());
        assert!(r.argmins.is_empty());
    }

    #[test]
    fn equality_constraint_in_two_dims() {
        let p = prob("problem q\nparams n=1\nvars m=2\nbox y1 in [-2, 2]\nbox y2 in [-2, 2]\nmin y1^2 + y2^2\nst y1 + y2 - x1 in Zero\n");
        let r = solve_value(
            &p,
            &[1.0],
            &SolverConfig {
                grid: 81,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.value - 0.5).abs() < 1e-3, "{}", r.value);
    }
}
