use serde::Serialize;

use super::{EngineError, SmoothModel};
use crate::geometry::{Polyhedron, Row};
use crate::linalg;
use crate::oracle::DiniEstimate;

/// `𝕃(x, y; u) = {v | ∇P(x, y)(u, v) ∈ T_Γ(P(x, y))}` in `v`-space.
pub fn linearization_cone(
    model: &SmoothModel,
    x: &[f64],
    y: &[f64],
    u: &[f64],
) -> Result<Polyhedron, EngineError> {
    let local = model.local_cones(x, y)?;
    let jac = model.jacobian(x, y)?;
    let shift = linalg::mat_vec(&jac.dx, u);
    Ok(local.tangent.preimage(&jac.dy, &shift, model.prob.m))
}

/// `𝒞(x, y; u)`: the linearization cone pinched by the Dini bounds of `V`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalConeSpec {
    pub base: Polyhedron,
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub dini_lower: f64,
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub dini_upper: f64,
    /// Padding applied to each finite bound.
    pub pad: f64,
    /// The slab inequalities alone.
    pub slab: Polyhedron,
    pub cone: Polyhedron,
}

impl CriticalConeSpec {
    pub fn is_empty(&self) -> bool {
        self.cone.is_empty()
    }
}

/// Appends `V′₋ − pad ≤ ∇f(x, y)(u, v) ≤ V′₊ + pad` to the linearization cone,
/// omitting infinite bounds.
pub fn critical_cone(
    model: &SmoothModel,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    dini: &DiniEstimate,
    pad: f64,
) -> Result<CriticalConeSpec, EngineError> {
    let base = linearization_cone(model, x, y, u)?;
    let (gx, gy) = model.gradient(x, y)?;
    let fixed = linalg::dot(&gx, u);
    let mut slab = Vec::new();
    if dini.upper.is_finite() {
        slab.push(Row::new(gy.clone(), dini.upper + pad - fixed));
    }
    if dini.lower.is_finite() {
        slab.push(Row::new(linalg::scale(&gy, -1.0), fixed - dini.lower + pad));
    }
    let mut cone = base.clone();
    cone.ineqs.extend(slab.iter().cloned());
    let slab = Polyhedron {
        dim: model.prob.m,
        ineqs: slab,
        eqs: Vec::new(),
    };
    if dini.upper == f64::NEG_INFINITY || dini.lower == f64::INFINITY {
        cone = Polyhedron::empty(model.prob.m);
    }
    Ok(CriticalConeSpec {
        base,
        dini_lower: dini.lower,
        dini_upper: dini.upper,
        pad,
        slab,
        cone,
    })
}
