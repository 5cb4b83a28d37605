#![allow(dead_code)]

use std::path::PathBuf;

use dirsens::expr::{parse_problem, ParametricProblem};

pub const CORPUS: [&str; 10] = [
    "additive",
    "danskin",
    "degenerate",
    "equality_line",
    "cube_root",
    "gd_kink",
    "jump",
    "lp_calm",
    "mfcq_disk",
    "quad_track",
];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.prob"))
}

pub fn fixture(name: &str) -> ParametricProblem {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    parse_problem(&text).expect("fixture parses")
}

/// Central difference of `f` along coordinate `i`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, z: &[f64], i: usize, h: f64) -> f64 {
    let mut hi = z.to_vec();
    let mut lo = z.to_vec();
    hi[i] += h;
    lo[i] -= h;
    (f(&hi) - f(&lo)) / (2.0 * h)
}
