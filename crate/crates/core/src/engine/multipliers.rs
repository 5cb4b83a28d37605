use rayon::prelude::*;
use serde::Serialize;

use super::{CriticalConeSpec, EngineError, SmoothModel};
use crate::geometry::{fm_project, Polyhedron, Row, LP_TOL};
use crate::linalg;
use crate::lp::LpOutcome;

pub const STATIONARITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DirectionMode {
    /// `v ∈ 𝒞(x̄, y; u)`.
    DirU,
    /// `u = 0` and `v ∈ 𝒞(x̄, y; 0) ∩ 𝕊`.
    Dir0Sphere,
}

/// One complementarity pattern's contribution to a multiplier set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierPiece {
    pub pattern: Vec<usize>,
    /// Multipliers `λ`.
    pub lambda: Polyhedron,
    /// `ζ = α∇_x f + ∇_x Pᵀλ` over the piece.
    pub zeta: Polyhedron,
    pub representative_v: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierSet {
    pub alpha: u8,
    /// `None` for the classical (nondirectional) set.
    pub mode: Option<DirectionMode>,
    pub base_y: Vec<f64>,
    pub pieces: Vec<MultiplierPiece>,
}

impl MultiplierSet {
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Sup-norm distance from `z` to the union of `ζ`-pieces.
    pub fn zeta_distance(&self, z: &[f64]) -> f64 {
        self.pieces
            .iter()
            .filter_map(|pc| pc.zeta.distance_inf(z))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Multipliers in `normal` satisfying `0 = α∇_y f + ∇_y Pᵀλ`, with the equations
/// reduced at relative tolerance `STATIONARITY_TOL` since `y` is only a numerical argmin.
fn stationary(normal: &Polyhedron, dy: &[Vec<f64>], gy: &[f64], alpha: f64) -> Polyhedron {
    let p = normal.dim;
    let mut system: Vec<Vec<f64>> = normal
        .eqs
        .iter()
        .map(|r| {
            let mut a = r.normal.clone();
            a.push(r.offset);
            a
        })
        .collect();
    for (i, g) in gy.iter().enumerate() {
        let mut row: Vec<f64> = (0..p).map(|r| dy[r][i]).collect();
        row.push(-alpha * g);
        system.push(row);
    }
    match linalg::reduce_system(&system, p, STATIONARITY_TOL) {
        Some(reduced) => Polyhedron {
            dim: p,
            ineqs: normal.ineqs.clone(),
            eqs: reduced
                .into_iter()
                .map(|mut a| {
                    let b = a.pop().unwrap();
                    Row::new(a, b)
                })
                .collect(),
        },
        None => Polyhedron::empty(p),
    }
}

/// Image of `λ ↦ α∇_x f + ∇_x Pᵀλ` over a multiplier polyhedron.
fn zeta_image(
    lam: &Polyhedron,
    dx: &[Vec<f64>],
    gx: &[f64],
    alpha: f64,
) -> Result<Polyhedron, EngineError> {
    let p = lam.dim;
    let n = gx.len();
    let lift = |r: &Row| {
        let mut a = r.normal.clone();
        a.resize(p + n, 0.0);
        Row::new(a, r.offset)
    };
    let mut joint = Polyhedron {
        dim: p + n,
        ineqs: lam.ineqs.iter().map(lift).collect(),
        eqs: lam.eqs.iter().map(lift).collect(),
    };
    for j in 0..n {
        let mut a: Vec<f64> = (0..p).map(|r| -dx[r][j]).collect();
        a.resize(p + n, 0.0);
        a[p + j] = 1.0;
        joint.eqs.push(Row::new(a, alpha * gx[j]));
    }
    let keep: Vec<usize> = (p..p + n).collect();
    Ok(fm_project(&joint, &keep)?.canonical())
}

/// Classical `M^α(x̄, y)`: `λ ∈ N_Γ(P(x̄, y))` with stationarity (`Σ` for `α = 1`, `Σ⁰` for `α = 0`).
pub fn classical_multipliers(
    model: &SmoothModel,
    x: &[f64],
    y: &[f64],
    alpha: u8,
) -> Result<MultiplierSet, EngineError> {
    let local = model.local_cones(x, y)?;
    let jac = model.jacobian(x, y)?;
    let (gx, gy) = model.gradient(x, y)?;
    let a = f64::from(alpha);
    let lam = stationary(&local.normal, &jac.dy, &gy, a).canonical();
    let mut pieces = Vec::new();
    if !lam.is_empty() {
        let pattern = local
            .pieces
            .iter()
            .map(|pc| &pc.pattern)
            .max_by_key(|p| p.len())
            .cloned()
            .unwrap_or_default();
        let zeta = zeta_image(&lam, &jac.dx, &gx, a)?;
        pieces.push(MultiplierPiece {
            pattern,
            lambda: lam,
            zeta,
            representative_v: None,
        });
    }
    Ok(MultiplierSet {
        alpha,
        mode: None,
        base_y: y.to_vec(),
        pieces,
    })
}

/// A nonzero point of `set`, scaled to unit sup-norm, if one exists.
fn nonzero_point(set: &Polyhedron) -> Option<Vec<f64>> {
    let m = set.dim;
    let boxed = set.intersect(&Polyhedron::boxed(&vec![-1.0; m], &vec![1.0; m]));
    for j in 0..m {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; m];
            c[j] = s;
            if let LpOutcome::Optimal { x, value } = boxed.maximize(&c) {
                if value > LP_TOL {
                    let scale = linalg::norm(&x);
                    return Some(linalg::scale(&x, 1.0 / scale));
                }
            }
        }
    }
    None
}

/// Directional multiplier set `M^α_u` (mode `DirU`) or `M^α_0` on the unit sphere
/// (mode `Dir0Sphere`), one piece per complementarity pattern.
pub fn directional_multipliers(
    model: &SmoothModel,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    cone: &CriticalConeSpec,
    alpha: u8,
    mode: DirectionMode,
) -> Result<MultiplierSet, EngineError> {
    let local = model.local_cones(x, y)?;
    let jac = model.jacobian(x, y)?;
    let (gx, gy) = model.gradient(x, y)?;
    let a = f64::from(alpha);
    let m = model.prob.m;
    let u_eff = match mode {
        DirectionMode::DirU => u.to_vec(),
        DirectionMode::Dir0Sphere => vec![0.0; u.len()],
    };
    let shift = linalg::mat_vec(&jac.dx, &u_eff);
    let results: Vec<Result<Option<MultiplierPiece>, EngineError>> = local
        .pieces
        .par_iter()
        .map(|pc| {
            let v_set = cone.cone.intersect(&pc.region.preimage(&jac.dy, &shift, m));
            let rep = match mode {
                DirectionMode::DirU => v_set.feasible_point(),
                DirectionMode::Dir0Sphere => nonzero_point(&v_set),
            };
            let Some(rep) = rep else {
                return Ok(None);
            };
            let lam = stationary(&pc.normal, &jac.dy, &gy, a).canonical();
            if lam.is_empty() {
                return Ok(None);
            }
            let zeta = zeta_image(&lam, &jac.dx, &gx, a)?;
            Ok(Some(MultiplierPiece {
                pattern: pc.pattern.clone(),
                lambda: lam,
                zeta,
                representative_v: Some(rep.iter().map(|v| linalg::snap(*v, 1e-9)).collect()),
            }))
        })
        .collect();
    let mut pieces: Vec<MultiplierPiece> = Vec::new();
    for r in results {
        if let Some(pc) = r? {
            if pieces.iter().all(|q| q.lambda != pc.lambda) {
                pieces.push(pc);
            }
        }
    }
    Ok(MultiplierSet {
        alpha,
        mode: Some(mode),
        base_y: y.to_vec(),
        pieces,
    })
}
