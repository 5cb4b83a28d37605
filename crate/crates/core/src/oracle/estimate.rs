use serde::Serialize;

use crate::geometry::lex_cmp;
use crate::linalg::{self, norm};

/// One sampled shell point with the vectors computed there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellSample {
    pub sequence: usize,
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(serialize_with = "crate::serde_ext::f64")]
    pub value: f64,
    pub vectors: Vec<Vec<f64>>,
}

/// Finite point cloud plus unit recession rays approximating a set.
///
/// `points` only holds limits of sequences that passed the convergence test;
/// sequences that neither converged nor diverged are counted in `unresolved`
/// and their last iterates kept in `pending`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetEstimate {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub rays: Vec<Vec<f64>>,
    /// Per point: slope of `log |y_k - y|` against `log t_k`.
    pub rates: Vec<Option<f64>>,
    pub pending: Vec<Vec<f64>>,
    pub unresolved: usize,
    pub shell_history: Vec<ShellSample>,
}

impl SetEstimate {
    pub fn new(dim: usize) -> Self {
        SetEstimate {
            dim,
            points: Vec::new(),
            rays: Vec::new(),
            rates: Vec::new(),
            pending: Vec::new(),
            unresolved: 0,
            shell_history: Vec::new(),
        }
    }

    /// No points and no rays: the empty set (not `{0}`).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.rays.is_empty()
    }

    pub fn converged(&self) -> bool {
        self.unresolved == 0
    }

    /// Adds a point unless one within `tol` is already present.
    pub fn push_point(&mut self, p: Vec<f64>, rate: Option<f64>, tol: f64) {
        if self.points.iter().all(|q| linalg::dist(q, &p) > tol) {
            self.points.push(p);
            self.rates.push(rate);
        }
    }

    pub fn push_ray(&mut self, r: &[f64], tol: f64) {
        if let Some(u) = linalg::normalized(r) {
            if self.rays.iter().all(|q| linalg::dist(q, &u) > tol) {
                self.rays.push(u);
            }
        }
    }

    /// Snaps points to a `1e-9` grid and sorts points and rays lexicographically.
    pub fn finish(&mut self) {
        let mut pr: Vec<(Vec<f64>, Option<f64>)> = self
            .points
            .drain(..)
            .map(|p| p.iter().map(|v| linalg::snap(*v, SNAP_QUANTUM)).collect())
            .zip(self.rates.drain(..))
            .collect();
        pr.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        for (p, r) in pr {
            self.points.push(p);
            self.rates.push(r);
        }
        self.rays.sort_by(|a, b| lex_cmp(a, b));
        self.pending.sort_by(|a, b| lex_cmp(a, b));
        self.shell_history.sort_by_key(|s| (s.sequence, s.k));
    }
}

/// Outcome of the convergence test on one sequence of vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum SequenceFate {
    Converged { limit: Vec<f64>, rate: Option<f64> },
    Diverged { direction: Vec<f64> },
    Unresolved { last: Vec<f64> },
}

pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
const SNAP_QUANTUM: f64 = 1e-9;
const TAIL: usize = 5;

/// Classifies `seq` (indexed by shell, steps `t`) with Cauchy tolerance `conv_tol`.
pub fn classify_sequence(seq: &[Vec<f64>], t: &[f64], conv_tol: f64) -> SequenceFate {
    let k = seq.len();
    let Some(last) = seq.last() else {
        return SequenceFate::Unresolved { last: Vec::new() };
    };
    if k < 3 {
        return SequenceFate::Unresolved { last: last.clone() };
    }
    let norms: Vec<f64> = seq.iter().map(|v| norm(v)).collect();
    let tail = TAIL.min(k);
    let tn = &norms[k - tail..];
    let growing = tn.windows(2).all(|w| w[1] > w[0]);
    if growing {
        let huge = tn[tail - 1] > DIVERGENCE_THRESHOLD;
        let ratios_ok = tn.windows(2).all(|w| w[1] > 1.05 * w[0]);
        let slope = loglog_slope(&t[k - tail..], tn);
        if huge || (ratios_ok && slope.is_some_and(|s| s <= -0.1)) {
            return SequenceFate::Diverged {
                direction: linalg::normalized(last).unwrap_or_else(|| last.clone()),
            };
        }
    }
    let diffs: Vec<f64> = seq.windows(2).map(|w| linalg::dist(&w[0], &w[1])).collect();
    let nd = diffs.len();
    let scale = 1.0 + norm(last);
    let cauchy = diffs[nd - 2..].iter().all(|d| *d <= conv_tol * scale);
    let geometric = geometric_ratio(&diffs[nd.saturating_sub(4)..]);
    let limit = match geometric {
        Some(r) if r < 1.0 => {
            let prev = &seq[k - 2];
            let mut lim = last.clone();
            linalg::axpy(&mut lim, r / (1.0 - r), &linalg::sub(last, prev));
            Some(lim)
        }
        _ if cauchy => Some(last.clone()),
        _ => None,
    };
    match limit {
        Some(limit) => {
            let errs: Vec<f64> = seq[k - tail..]
                .iter()
                .map(|v| linalg::dist(v, &limit))
                .collect();
            let rate = loglog_slope(&t[k - tail..], &errs);
            SequenceFate::Converged { limit, rate }
        }
        None => SequenceFate::Unresolved { last: last.clone() },
    }
}

/// Common ratio of a geometrically shrinking difference sequence, if consistent.
fn geometric_ratio(diffs: &[f64]) -> Option<f64> {
    if diffs.len() < 3 || diffs.iter().any(|d| *d <= 1e-300) {
        return None;
    }
    let ratios: Vec<f64> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(l, h), r| (l.min(*r), h.max(*r)));
    if hi <= 0.95 && lo > 0.0 && hi <= 1.2 * lo {
        Some(ratios[ratios.len() - 1])
    } else {
        None
    }
}

/// Least-squares slope of `log y` against `log t`; `None` when any entry is nonpositive.
pub fn loglog_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 1e-300)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 || pts.len() < t.len() {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
