//! Exact polyhedral geometry: representations, projections and cone calculus.

mod cones;
mod dd;
mod gamma;
mod neighborhood;
mod polyhedron;
mod projection;

use thiserror::Error;

pub use cones::{directional_normal_cone, normal_cone, tangent_cone, ZERO_DIRECTION};
pub use dd::{cone_generators, convex_hull, h_to_v, lex_cmp, v_to_h, GeneratorCone, MAX_DD_DIM};
pub use gamma::{gamma_dim, gamma_polyhedron, GammaFactor};
pub use neighborhood::{
    cap_directions, sample_dir_neighborhood, sphere_directions, DirectionalNeighborhood,
};
pub use polyhedron::{Polyhedron, Row, LP_TOL};
pub use projection::{fm_project, fm_project_capped, DEFAULT_ROW_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is not in the set (violation {violation:.3e})")]
    PointNotInSet { violation: f64 },
    #[error("{what} exceeded the cap of {cap}")]
    DimensionOverflow { what: &'static str, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed polyhedron: {0}")]
    Malformed(String),
}
