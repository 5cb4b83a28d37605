use serde::Serialize;

use super::{
    classical_multipliers, DirectionalAnalysis, EngineConfig, EngineError, SmoothModel, Verdict,
};
use crate::expr::{Expr, ExprError, ParametricProblem, Var};
use crate::geometry::{
    cone_generators, convex_hull, h_to_v, lex_cmp, sphere_directions, Polyhedron, LP_TOL,
};
use crate::linalg;
use crate::lp::LpOutcome;
use crate::oracle::ClarkeHull;
use crate::solver::{solve_value, SolverConfig, MAX_DECISION_DIM};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FoscmsVerdict {
    RegularityCertified,
    NotCertified { witness: Vec<f64> },
}

/// Directional regularity test: the only `λ ∈ N_Γ(P; w)` with `∇P(x̄, y)ᵀλ = 0`
/// is zero, where `w = ∇P(x̄, y)(u, v_probe)`.
pub fn foscms_check(
    model: &SmoothModel,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    v_probe: &[f64],
) -> Result<FoscmsVerdict, EngineError> {
    let local = model.local_cones(x, y)?;
    let jac = model.jacobian(x, y)?;
    let mut w = linalg::mat_vec(&jac.dx, u);
    linalg::axpy(&mut w, 1.0, &linalg::mat_vec(&jac.dy, v_probe));
    let p = model.p();
    let ncols = model.prob.n + model.prob.m;
    let full: Vec<Vec<f64>> = (0..p)
        .map(|r| jac.dx[r].iter().chain(&jac.dy[r]).cloned().collect())
        .collect();
    for piece in local.pieces_at(&w) {
        let mut lam = piece.normal.clone();
        for j in 0..ncols {
            let col: Vec<f64> = full.iter().map(|row| row[j]).collect();
            lam = lam.with_eq(col, 0.0);
        }
        let boxed = lam.intersect(&Polyhedron::boxed(&vec![-1.0; p], &vec![1.0; p]));
        for j in 0..p {
            for s in [1.0, -1.0] {
                let mut c = vec![0.0; p];
                c[j] = s;
                if let LpOutcome::Optimal { x, value } = boxed.maximize(&c) {
                    if value > LP_TOL {
                        return Ok(FoscmsVerdict::NotCertified { witness: x });
                    }
                }
            }
        }
    }
    Ok(FoscmsVerdict::RegularityCertified)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum AbadieVerdict {
    Equal,
    StrictInclusion { witness: Vec<f64> },
    Inconclusive { reason: String },
}

/// Linearized cone of the feasible graph in `(u, v)`-space.
pub fn graph_linearization(
    model: &SmoothModel,
    x: &[f64],
    y: &[f64],
) -> Result<Polyhedron, EngineError> {
    let local = model.local_cones(x, y)?;
    let jac = model.jacobian(x, y)?;
    let full: Vec<Vec<f64>> = (0..model.p())
        .map(|r| jac.dx[r].iter().chain(&jac.dy[r]).cloned().collect())
        .collect();
    let zero = vec![0.0; model.p()];
    Ok(local
        .tangent
        .preimage(&full, &zero, model.prob.n + model.prob.m))
}

fn squared_distance(target: &[f64]) -> Expr {
    let mut obj = Expr::Const(0.0);
    for (i, c) in target.iter().enumerate() {
        let diff = Expr::Sub(Box::new(Expr::Var(Var::Y(i))), Box::new(Expr::Const(*c)));
        obj = Expr::Add(Box::new(obj), Box::new(Expr::Pow(Box::new(diff), 2)));
    }
    obj
}

/// Nearest point of the feasible graph to `(xt, yt)`, searched within `radius`
/// in every coordinate; the parameter becomes a decision variable.
fn nearest_graph_point(
    prob: &ParametricProblem,
    xt: &[f64],
    yt: &[f64],
    radius: f64,
) -> Result<ParametricProblem, ExprError> {
    let n = prob.n;
    let target: Vec<f64> = xt.iter().chain(yt).cloned().collect();
    let lift = |v: Var| match v {
        Var::X(i) => Var::Y(i),
        Var::Y(j) => Var::Y(n + j),
    };
    let mut boxes: Vec<(f64, f64)> = xt.iter().map(|c| (c - radius, c + radius)).collect();
    for (c, (lo, hi)) in yt.iter().zip(&prob.y_box) {
        let (a, b) = (lo.max(c - radius), hi.min(c + radius));
        boxes.push(if a < b { (a, b) } else { (*lo, *hi) });
    }
    ParametricProblem::new(
        format!("{}-graph", prob.name),
        n,
        n + prob.m,
        squared_distance(&target),
        prob.constraints.iter().map(|e| e.map_vars(&lift)).collect(),
        prob.gamma.clone(),
        boxes,
    )
}

/// Nearest-point problem `min ‖y − target‖²` over the feasible set at a fixed `x`.
fn nearest_feasible(prob: &ParametricProblem, target: &[f64]) -> ParametricProblem {
    let mut q = prob.clone();
    q.objective = squared_distance(target);
    q
}

const ARC_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Whether `(x̄, ȳ) + t(u, v) + o(t)` stays in the feasible graph. The parameter
/// may deviate by `o(t)` when the joint dimension fits the inner solver; otherwise
/// it moves exactly along `u`.
fn realized(
    prob: &ParametricProblem,
    x: &[f64],
    y: &[f64],
    dir: &[f64],
    arc_tol: f64,
    cfg: &SolverConfig,
) -> bool {
    let n = x.len();
    let joint = n + prob.m <= MAX_DECISION_DIM;
    let ratios: Vec<f64> = ARC_STEPS
        .iter()
        .map(|t| {
            let xt: Vec<f64> = (0..n).map(|i| x[i] + t * dir[i]).collect();
            let target: Vec<f64> = y
                .iter()
                .enumerate()
                .map(|(i, yi)| yi + t * dir[n + i])
                .collect();
            let solved = if joint {
                nearest_graph_point(prob, &xt, &target, *t)
                    .ok()
                    .and_then(|q| solve_value(&q, &xt, cfg).ok())
            } else {
                solve_value(&nearest_feasible(prob, &target), &xt, cfg).ok()
            };
            match solved {
                Some(r) if r.value.is_finite() => r.value.max(0.0).sqrt() / t,
                _ => f64::INFINITY,
            }
        })
        .collect();
    ratios[ratios.len() - 1] <= arc_tol
}

/// Compares the tangent cone of the feasible graph, probed by feasible arcs,
/// with its linearization.
pub fn abadie_check(
    model: &SmoothModel,
    x: &[f64],
    y: &[f64],
    cfg: &EngineConfig,
    solver: &SolverConfig,
) -> Result<AbadieVerdict, EngineError> {
    let lin = graph_linearization(model, x, y)?;
    let dim = lin.dim;
    if let super::ConeModel::Tabulated(_) = model.cones {
        let jac = model.jacobian(x, y)?;
        let identity = model.p() == dim
            && (0..dim).all(|r| {
                jac.dx[r]
                    .iter()
                    .chain(&jac.dy[r])
                    .enumerate()
                    .all(|(c, v)| *v == if c == r { 1.0 } else { 0.0 })
            });
        return Ok(if identity {
            AbadieVerdict::Equal
        } else {
            AbadieVerdict::Inconclusive {
                reason: "tabulated constraint set without arc probing".into(),
            }
        });
    }
    let normals = |rows: &[crate::geometry::Row]| -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.normal.clone()).collect()
    };
    let (rays, lineality) = cone_generators(dim, &normals(&lin.ineqs), &normals(&lin.eqs))?;
    let mut gens: Vec<Vec<f64>> = rays;
    for l in lineality {
        gens.push(linalg::scale(&l, -1.0));
        gens.push(l);
    }
    for g in &gens {
        let Some(d) = linalg::normalized(g) else {
            continue;
        };
        if !realized(&model.prob, x, y, &d, cfg.arc_tol, solver) {
            return Ok(AbadieVerdict::StrictInclusion {
                witness: d.iter().map(|v| linalg::snap(*v, 1e-9)).collect(),
            });
        }
    }
    for d in probe_directions(dim) {
        let outside = lin.distance_inf(&d).is_none_or(|dist| dist > cfg.incl_tol);
        if outside && realized(&model.prob, x, y, &d, cfg.arc_tol, solver) {
            return Ok(AbadieVerdict::Inconclusive {
                reason: format!("feasible arc along {d:?} leaves the linearized cone"),
            });
        }
    }
    Ok(AbadieVerdict::Equal)
}

fn probe_directions(dim: usize) -> Vec<Vec<f64>> {
    if dim <= 3 {
        return sphere_directions(dim, 16);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[i] = s;
            out.push(d);
        }
        for j in i + 1..dim {
            for (a, b) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
                let mut d = vec![0.0; dim];
                d[i] = a;
                d[j] = b;
                out.push(d);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DanskinReport {
    /// `∇_x f(x̄, y)` over the estimated directional solutions.
    pub gradient_set: Vec<Vec<f64>>,
    pub hull: Polyhedron,
    pub hull_vertices: Vec<Vec<f64>>,
    /// Limiting estimate inside the gradient set.
    pub inclusion: Verdict,
    /// Oracle Clarke hull equals the gradient hull, when the oracle hull exists.
    pub clarke_match: Option<bool>,
}

/// Directional Danskin sets for a problem whose feasible set does not depend on `x`.
pub fn danskin_sets(
    model: &SmoothModel,
    analysis: &DirectionalAnalysis,
    clarke: Option<&ClarkeHull>,
    cfg: &EngineConfig,
) -> Result<DanskinReport, EngineError> {
    if model.prob.constraints_mention_x() {
        return Err(EngineError::ConstraintDependsOnParameter);
    }
    let mut grads: Vec<Vec<f64>> = Vec::new();
    for y in &analysis.solutions.points {
        let (gx, _) = model.gradient(&analysis.xbar, y)?;
        let g: Vec<f64> = gx.iter().map(|v| linalg::snap(*v, 1e-9)).collect();
        if !grads.contains(&g) {
            grads.push(g);
        }
    }
    grads.sort_by(|a, b| lex_cmp(a, b));
    let n = model.prob.n;
    let hull = if grads.is_empty() {
        Polyhedron::empty(n)
    } else {
        convex_hull(n, &grads)?
    };
    let mut hull_vertices = if grads.is_empty() {
        Vec::new()
    } else {
        h_to_v(&hull)?.0
    };
    hull_vertices.sort_by(|a, b| lex_cmp(a, b));
    let lhs = &analysis.scan.limiting.points;
    let mut inclusion = Verdict::Holds;
    for z in lhs {
        let d = grads
            .iter()
            .map(|g| linalg::norm_inf(&linalg::sub(g, z)))
            .fold(f64::INFINITY, f64::min);
        if d > cfg.incl_tol {
            inclusion = Verdict::Violated {
                witness: z.clone(),
                distance: d,
                shell: None,
            };
            break;
        }
    }
    if inclusion == Verdict::Holds && analysis.scan.limiting.unresolved > 0 {
        inclusion = Verdict::Inconclusive {
            reason: "oracle sequences unresolved".into(),
        };
    }
    let clarke_match = clarke.map(|c| {
        let close = |a: &[Vec<f64>], b: &[Vec<f64>]| {
            a.iter().all(|p| {
                b.iter()
                    .any(|q| linalg::norm_inf(&linalg::sub(p, q)) <= cfg.incl_tol)
            })
        };
        close(&c.vertices, &hull_vertices) && close(&hull_vertices, &c.vertices)
    });
    Ok(DanskinReport {
        gradient_set: grads,
        hull,
        hull_vertices,
        inclusion,
        clarke_match,
    })
}

/// Vertices of `co{∇_x L(x̄, y, λ) | y ∈ ys, λ ∈ Σ(x̄, y)}`; `None` when some
/// multiplier set is unbounded.
pub fn lagrangian_gradient_hull(
    model: &SmoothModel,
    x: &[f64],
    ys: &[Vec<f64>],
) -> Result<Option<Polyhedron>, EngineError> {
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for y in ys {
        let set = classical_multipliers(model, x, y, 1)?;
        for pc in &set.pieces {
            let (verts, cone) = h_to_v(&pc.zeta)?;
            if !cone.is_zero() {
                return Ok(None);
            }
            vertices.extend(verts);
        }
    }
    if vertices.is_empty() {
        return Ok(Some(Polyhedron::empty(model.prob.n)));
    }
    Ok(Some(convex_hull(model.prob.n, &vertices)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_problem;

    fn gd_kink() -> SmoothModel {
        let text = "problem g\nparams n=1\nvars m=1\nbox y1 in [-3, 3]\nmin -y1\n\
                    st y1 - x1 in NonPositive\nst y1 + x1 in NonPositive\n";
        SmoothModel::new(&parse_problem(text).unwrap()).unwrap()
    }

    #[test]
    fn graph_linearization_of_the_kink() {
        // v <= u and v <= -u
        let lin = graph_linearization(&gd_kink(), &[0.0], &[0.0]).unwrap();
        let expected = Polyhedron::universe(2)
            .with_ineq(vec![-1.0, 1.0], 0.0)
            .with_ineq(vec![1.0, 1.0], 0.0);
        assert!(lin.same_set(&expected));
    }

    #[test]
    fn lagrangian_gradients_span_the_kink() {
        let hull = lagrangian_gradient_hull(&gd_kink(), &[0.0], &[vec![0.0]])
            .unwrap()
            .unwrap();
        assert!(hull.same_set(&Polyhedron::boxed(&[-1.0], &[1.0])));
    }

    #[test]
    fn squared_distance_vanishes_at_the_target() {
        let e = squared_distance(&[1.0, -2.0]);
        assert_eq!(e.eval(&[], &[1.0, -2.0]).unwrap(), 0.0);
        assert_eq!(e.eval(&[], &[0.0, 0.0]).unwrap(), 5.0);
    }
}
