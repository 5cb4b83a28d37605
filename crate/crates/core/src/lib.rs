pub mod engine;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod plan;
pub mod serde_ext;
pub mod solver;
