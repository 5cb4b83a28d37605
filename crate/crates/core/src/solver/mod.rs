//! Desk-scale inner solver: value function, solution map, directional
//! solutions and solution-map stability diagnostics.

mod directional;
mod schedule;
mod stability;
mod value;

use thiserror::Error;

pub use directional::{
    directional_from, directional_solutions, distance_to_set, nearest, shell_directions,
    ShellSolves,
};
pub use schedule::{SequenceSchedule, CAP_WIDTH};
pub use stability::{
    enforce_lattice, stability_diagnostics, stability_from, Empirical, SequenceWitness,
    StabilityProperty, StabilityReport, StabilityVerdict,
};
pub use value::{solve_value, Certificate, SolveResult, SolverConfig, MAX_DECISION_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("value function is infinite at the base point")]
    ValueAtBaseInfinite,
    #[error("decision dimension {0} exceeds the supported maximum of 3")]
    TooManyVariables(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
