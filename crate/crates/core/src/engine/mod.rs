//! Cones, multiplier sets and theorem checkers for smooth problems with
//! polyhedral (or tabulated) constraint sets.

mod analysis;
mod checks;
mod cones;
mod model;
mod multipliers;
mod theorems;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ExprError;
use crate::geometry::GeometryError;
use crate::oracle::OracleError;
use crate::solver::SolverError;

pub use analysis::{AnalysisConfig, DirectionalAnalysis};
pub use checks::{
    abadie_check, danskin_sets, foscms_check, graph_linearization, lagrangian_gradient_hull,
    AbadieVerdict, DanskinReport, FoscmsVerdict,
};
pub use cones::{critical_cone, linearization_cone, CriticalConeSpec};
pub use model::{
    polyhedral_cones, ConeModel, LocalCones, NormalPiece, SmoothModel, ACTIVE_TOL, MAX_PATTERN_ROWS,
};
pub use multipliers::{
    classical_multipliers, directional_multipliers, DirectionMode, MultiplierPiece, MultiplierSet,
};
pub use theorems::{
    lipschitz_sufficient_from, rhs_sets, rhs_solutions, select_variant, upper_estimate_from,
    zeta_union, InclusionVerdict, SufficientVerdict, Variant, Verdict, Which,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Sup-norm tolerance for inclusion checks.
    pub incl_tol: f64,
    /// Widening of finite Dini bounds in the critical cone.
    pub slab_pad: f64,
    /// Largest `dist / t` at the smallest arc step for a realized tangent direction.
    pub arc_tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            incl_tol: 1e-3,
            slab_pad: 1e-3,
            arc_tol: 1e-2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("model has nonsmooth expressions; exact computations need smooth data")]
    NonSmoothModel,
    #[error("point is not feasible: {0}")]
    PointNotFeasible(String),
    #[error("{0} active rows exceed the pattern enumeration cap of 12")]
    PatternOverflow(usize),
    #[error("stability prerequisite failed: {0}")]
    StabilityPrereqFailed(String),
    #[error("constraints depend on the parameter")]
    ConstraintDependsOnParameter,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Upper-estimate inclusion, computing the directional analysis first.
pub fn check_upper_estimate(
    model: &SmoothModel,
    xbar: &[f64],
    u: &[f64],
    which: Which,
    variant: Variant,
    cfg: &AnalysisConfig,
) -> Result<InclusionVerdict, EngineError> {
    let analysis = DirectionalAnalysis::compute(&model.prob, xbar, u, cfg)?;
    upper_estimate_from(model, &analysis, which, variant, &cfg.engine)
}

/// Sufficient condition for directional Lipschitz continuity, computing the analysis first.
pub fn check_lipschitz_sufficient(
    model: &SmoothModel,
    xbar: &[f64],
    u: &[f64],
    variant: Variant,
    cfg: &AnalysisConfig,
) -> Result<SufficientVerdict, EngineError> {
    let analysis = DirectionalAnalysis::compute(&model.prob, xbar, u, cfg)?;
    lipschitz_sufficient_from(model, &analysis, variant, &cfg.engine)
}
