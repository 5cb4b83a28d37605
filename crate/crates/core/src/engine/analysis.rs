use serde::{Deserialize, Serialize};

use super::{critical_cone, CriticalConeSpec, EngineConfig, EngineError, SmoothModel};
use crate::expr::ParametricProblem;
use crate::geometry::ZERO_DIRECTION;
use crate::linalg::norm;
use crate::oracle::{
    continuity_diagnostic, continuity_gate, dini, lipschitz_from, subgradient_scan,
    zero_direction_bounds, ContinuityVerdict, DiniEstimate, LipschitzVerdict, OracleConfig,
    ProblemValue, SetEstimate, SubgradientScan,
};
use crate::solver::{
    directional_from, stability_from, SequenceSchedule, ShellSolves, SolverConfig, StabilityReport,
};

/// Every tunable of a directional analysis.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub schedule: SequenceSchedule,
    pub solver: SolverConfig,
    pub oracle: OracleConfig,
    pub engine: EngineConfig,
}

/// Solver and oracle results at `x̄` in direction `u`, shared by all checks.
#[derive(Clone, Debug)]
pub struct DirectionalAnalysis {
    pub xbar: Vec<f64>,
    pub u: Vec<f64>,
    pub shells: ShellSolves,
    /// Estimate of `S(x̄; u)`.
    pub solutions: SetEstimate,
    pub stability: StabilityReport,
    pub scan: SubgradientScan,
    /// Dini bounds along `u`.
    pub dini: DiniEstimate,
    /// Bounds for the zero direction, used by `𝒞(x̄, y; 0)`.
    pub zero_bounds: DiniEstimate,
    pub continuity: ContinuityVerdict,
    pub lipschitz: LipschitzVerdict,
}

impl DirectionalAnalysis {
    pub fn compute(
        prob: &ParametricProblem,
        xbar: &[f64],
        u: &[f64],
        cfg: &AnalysisConfig,
    ) -> Result<Self, EngineError> {
        let shells = ShellSolves::compute(prob, xbar, u, &cfg.schedule, &cfg.solver)?;
        let solutions = directional_from(&shells, &cfg.solver, cfg.oracle.conv_tol);
        let stability = stability_from(prob, &shells, &cfg.solver, cfg.oracle.conv_tol);
        let value = ProblemValue::new(prob, cfg.solver.clone())?;
        let scan = subgradient_scan(&value, xbar, u, &cfg.schedule, &cfg.oracle)?;
        let dini_u = dini(&value, xbar, u, &cfg.schedule)?;
        let zero_bounds = zero_direction_bounds(&value, xbar, &cfg.schedule)?;
        let continuity = continuity_diagnostic(&value, xbar, u, &cfg.schedule, &cfg.oracle)?;
        let lipschitz =
            continuity_gate(&continuity, xbar).unwrap_or_else(|| lipschitz_from(&scan, xbar));
        Ok(DirectionalAnalysis {
            xbar: xbar.to_vec(),
            u: u.to_vec(),
            shells,
            solutions,
            stability,
            scan,
            dini: dini_u,
            zero_bounds,
            continuity,
            lipschitz,
        })
    }

    pub fn is_zero_direction(&self) -> bool {
        norm(&self.u) < ZERO_DIRECTION
    }

    /// `𝒞(x̄, y; u)`, or `𝒞(x̄, y; 0)` when `zero` is set. Quotient bounds along
    /// `u` are padded; the zero-direction bounds are exact and unpadded.
    pub fn critical_cone_at(
        &self,
        model: &SmoothModel,
        y: &[f64],
        zero: bool,
        cfg: &EngineConfig,
    ) -> Result<CriticalConeSpec, EngineError> {
        if zero || self.is_zero_direction() {
            let origin = vec![0.0; self.u.len()];
            critical_cone(model, &self.xbar, y, &origin, &self.zero_bounds, 0.0)
        } else {
            critical_cone(model, &self.xbar, y, &self.u, &self.dini, cfg.slab_pad)
        }
    }
}
