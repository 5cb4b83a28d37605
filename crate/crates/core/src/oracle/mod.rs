//! Brute-force estimates of the value function's directional objects:
//! Dini derivatives, Fréchet, limiting, singular and Clarke subgradients,
//! Lipschitz and continuity diagnostics.

mod dini;
mod estimate;
mod lipschitz;
mod subdiff;
mod value_fn;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::solver::SolverError;

pub use dini::{dini, zero_direction_bounds, DiniEstimate};
pub use estimate::{
    classify_sequence, loglog_slope, SequenceFate, SetEstimate, ShellSample, DIVERGENCE_THRESHOLD,
};
pub use lipschitz::{
    continuity_diagnostic, continuity_gate, lipschitz_from, lipschitz_verdict, ContinuityVerdict,
    GapWitness, LipschitzVerdict, QuotientWitness,
};
pub use subdiff::{
    clarke_from, directional_clarke_subdiff, directional_limiting_subdiff,
    directional_singular_subdiff, frechet_subgradients, subgradient_scan, ClarkeHull,
    SubgradientScan,
};
pub use value_fn::{AnalyticValue, ProblemValue, ValueFunction};

/// Parameter dimension supported by the oracle.
pub const MAX_PARAM_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Cauchy tolerance for shell sequences.
    pub conv_tol: f64,
    /// Continuity gap tolerance.
    pub gap_tol: f64,
    /// Minorant slack per unit distance for Fréchet candidates.
    pub minorant_slack: f64,
    /// Initial stencil radius as a fraction of the shell step.
    pub stencil_frac: f64,
    pub max_halvings: usize,
    /// Relative agreement required between fits at consecutive radii.
    pub fit_agreement: f64,
    /// Limits closer than this are merged.
    pub cluster_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            conv_tol: 1e-3,
            gap_tol: 1e-4,
            minorant_slack: 1e-2,
            stencil_frac: 0.1,
            max_halvings: 40,
            fit_agreement: 1e-6,
            cluster_tol: 1e-2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("value function is infinite at the base point")]
    ValueAtBaseInfinite,
    #[error("not directionally Lipschitz: {0}")]
    NotDirectionallyLipschitz(String),
    #[error("parameter dimension {0} exceeds the supported maximum of 3")]
    DimensionTooLarge(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Solver(SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<SolverError> for OracleError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::ValueAtBaseInfinite => OracleError::ValueAtBaseInfinite,
            SolverError::DimensionMismatch { expected, got } => {
                OracleError::DimensionMismatch { expected, got }
            }
            other => OracleError::Solver(other),
        }
    }
}

/// Shared precondition: dimensions agree and `V(x̄)` is finite. Returns `V(x̄)`.
fn base_value<V: ValueFunction + ?Sized>(
    v: &V,
    xbar: &[f64],
    u: &[f64],
) -> Result<f64, OracleError> {
    let n = v.dim();
    if n > MAX_PARAM_DIM {
        return Err(OracleError::DimensionTooLarge(n));
    }
    for len in [xbar.len(), u.len()] {
        if len != n {
            return Err(OracleError::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let vb = v.value(xbar);
    if vb.is_finite() {
        Ok(vb)
    } else {
        Err(OracleError::ValueAtBaseInfinite)
    }
}
