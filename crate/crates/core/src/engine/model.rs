use serde::Serialize;

use super::EngineError;
use crate::expr::{Jacobian, ParametricProblem};
use crate::geometry::{GeneratorCone, Polyhedron, Row};
use crate::linalg;

/// Largest number of active inequality rows whose patterns are enumerated.
pub const MAX_PATTERN_ROWS: usize = 12;
/// Residual below which a row of `Γ` counts as active.
pub const ACTIVE_TOL: f64 = 1e-7;

/// `N_Γ(p; d) ⊇ normal` for every `d` in `region`; the union over pieces
/// containing `d` is exactly `N_Γ(p; d)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalPiece {
    /// Active rows whose multipliers may be nonzero.
    pub pattern: Vec<usize>,
    /// Directions `d` (in the space of `Γ`) covered by the piece.
    pub region: Polyhedron,
    /// Multipliers `λ`.
    pub normal: Polyhedron,
}

/// Tangent cone, normal cone and directional normal pieces of `Γ` at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalCones {
    pub point: Vec<f64>,
    pub tangent: Polyhedron,
    pub normal: Polyhedron,
    pub pieces: Vec<NormalPiece>,
}

impl LocalCones {
    /// Pieces whose region contains `d`.
    pub fn pieces_at<'a>(&'a self, d: &'a [f64]) -> impl Iterator<Item = &'a NormalPiece> + 'a {
        self.pieces
            .iter()
            .filter(move |pc| pc.region.violation(d) <= ACTIVE_TOL * (1.0 + linalg::norm(d)))
    }
}

/// How the cones of `Γ` are obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum ConeModel {
    /// Computed from the problem's polyhedral `Γ`.
    Polyhedral,
    /// Supplied per point, for a non-polyhedral `Γ`.
    Tabulated(Vec<LocalCones>),
}

/// Smooth problem data plus the cone model of `Γ`.
#[derive(Clone, Debug)]
pub struct SmoothModel {
    pub prob: ParametricProblem,
    pub cones: ConeModel,
}

impl SmoothModel {
    pub fn new(prob: &ParametricProblem) -> Result<Self, EngineError> {
        Self::with_cones(prob, ConeModel::Polyhedral)
    }

    pub fn with_cones(prob: &ParametricProblem, cones: ConeModel) -> Result<Self, EngineError> {
        if !prob.is_smooth() {
            return Err(EngineError::NonSmoothModel);
        }
        Ok(SmoothModel {
            prob: prob.clone(),
            cones,
        })
    }

    pub fn p(&self) -> usize {
        self.prob.p()
    }

    pub fn jacobian(&self, x: &[f64], y: &[f64]) -> Result<Jacobian, EngineError> {
        Ok(self.prob.jacobian(x, y)?)
    }

    pub fn gradient(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EngineError> {
        Ok(self.prob.objective_gradient(x, y)?)
    }

    /// Cones of `Γ` at `P(x, y)`.
    pub fn local_cones(&self, x: &[f64], y: &[f64]) -> Result<LocalCones, EngineError> {
        let p = self.prob.constraint_values(x, y)?;
        match &self.cones {
            ConeModel::Polyhedral => polyhedral_cones(self.prob.gamma_set(), &p),
            ConeModel::Tabulated(table) => table
                .iter()
                .find(|c| linalg::dist(&c.point, &p) <= ACTIVE_TOL)
                .cloned()
                .ok_or_else(|| {
                    EngineError::PointNotFeasible(format!("no cone table entry at {p:?}"))
                }),
        }
    }
}

/// Local cones of a polyhedron at `p`, one piece per subset of active rows.
pub fn polyhedral_cones(s: &Polyhedron, p: &[f64]) -> Result<LocalCones, EngineError> {
    let scale = 1.0 + linalg::norm(p);
    let viol = s.violation(p);
    if viol > ACTIVE_TOL * scale {
        return Err(EngineError::PointNotFeasible(format!(
            "constraint values violate the constraint set by {viol:e}"
        )));
    }
    let active: Vec<usize> = (0..s.ineqs.len())
        .filter(|&i| s.ineqs[i].residual(p) >= -ACTIVE_TOL * scale)
        .collect();
    if active.len() > MAX_PATTERN_ROWS {
        return Err(EngineError::PatternOverflow(active.len()));
    }
    let dim = s.dim;
    let homog = |r: &Row| Row::new(r.normal.clone(), 0.0);
    let eqs: Vec<Row> = s.eqs.iter().map(homog).collect();
    let tangent = Polyhedron {
        dim,
        ineqs: active.iter().map(|&i| homog(&s.ineqs[i])).collect(),
        eqs: eqs.clone(),
    };
    let normal_of = |pattern: &[usize]| -> Result<Polyhedron, EngineError> {
        let rays = pattern.iter().map(|&i| s.ineqs[i].normal.clone()).collect();
        let lin = s.eqs.iter().map(|r| r.normal.clone()).collect();
        Ok(GeneratorCone::new(dim, rays, lin).to_polyhedron()?)
    };
    let mut pieces = Vec::with_capacity(1 << active.len());
    for mask in 0u32..(1u32 << active.len()) {
        let pattern: Vec<usize> = (0..active.len())
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| active[b])
            .collect();
        let mut region = tangent.clone();
        for &i in &pattern {
            region.eqs.push(homog(&s.ineqs[i]));
        }
        let normal = normal_of(&pattern)?;
        pieces.push(NormalPiece {
            pattern,
            region,
            normal,
        });
    }
    Ok(LocalCones {
        point: p.to_vec(),
        tangent,
        normal: normal_of(&active)?,
        pieces,
    })
}
