use serde::{Deserialize, Serialize};

use crate::linalg::{self, norm};
use crate::solver::SequenceSchedule;

/// `center + {z | |z| <= eps, | |d| z - |z| d | <= delta |z| |d|}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalNeighborhood {
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
}

impl DirectionalNeighborhood {
    pub fn contains(&self, point: &[f64]) -> bool {
        let z = linalg::sub(point, &self.center);
        let nz = norm(&z);
        if nz > self.eps * (1.0 + 1e-12) {
            return false;
        }
        let nd = norm(&self.direction);
        if nd < 1e-12 {
            return true;
        }
        let mut w = linalg::scale(&z, nd);
        linalg::axpy(&mut w, -nz, &self.direction);
        norm(&w) <= self.delta * nz * nd * (1.0 + 1e-9) + 1e-15
    }
}

/// Points `center + t_k w` over the schedule shells with `t_k <= eps` and `w`
/// in the `delta`-cap around the direction.
pub fn sample_dir_neighborhood(
    n: &DirectionalNeighborhood,
    schedule: &SequenceSchedule,
) -> Vec<Vec<f64>> {
    let dirs = cap_directions(&n.direction, n.delta, schedule.angles);
    let mut out = Vec::new();
    for t in schedule.steps() {
        if t > n.eps {
            continue;
        }
        for w in &dirs {
            let mut p = n.center.clone();
            linalg::axpy(&mut p, t, w);
            out.push(p);
        }
    }
    out
}

/// Deterministic unit directions `w` with `|w - d/|d|| <= delta`; the sphere
/// layout of [`sphere_directions`] when `d` is zero.
pub fn cap_directions(d: &[f64], delta: f64, count: usize) -> Vec<Vec<f64>> {
    let n = d.len();
    let Some(u) = linalg::normalized(d).filter(|_| norm(d) >= 1e-12) else {
        return sphere_directions(n, count);
    };
    if n == 1 || count <= 1 || delta <= 0.0 {
        return vec![u];
    }
    let theta_max = 0.99 * 2.0 * (delta.min(2.0) / 2.0).asin();
    let tangent = orthonormal_complement(&u);
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let w = if n == 2 {
            let s = 2.0 * j as f64 / (count - 1) as f64 - 1.0;
            rotate(&u, &tangent[0], None, theta_max * s, 0.0)
        } else if j == 0 {
            u.clone()
        } else {
            let frac = j as f64 / (count - 1) as f64;
            let phi = j as f64 * std::f64::consts::PI * (3.0 - 5f64.sqrt());
            rotate(
                &u,
                &tangent[0],
                Some(&tangent[1]),
                theta_max * frac.sqrt(),
                phi,
            )
        };
        out.push(w);
    }
    out
}

fn rotate(u: &[f64], t0: &[f64], t1: Option<&Vec<f64>>, theta: f64, phi: f64) -> Vec<f64> {
    let mut w = linalg::scale(u, theta.cos());
    linalg::axpy(&mut w, theta.sin() * phi.cos(), t0);
    if let Some(t1) = t1 {
        linalg::axpy(&mut w, theta.sin() * phi.sin(), t1);
    }
    linalg::normalized(&w).unwrap_or_else(|| u.to_vec())
}

fn orthonormal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = vec![u.to_vec()];
    for i in 0..u.len() {
        let mut e = vec![0.0; u.len()];
        e[i] = 1.0;
        for b in &basis {
            let c = linalg::dot(&e, b);
            linalg::axpy(&mut e, -c, b);
        }
        if let Some(e) = linalg::normalized(&e).filter(|_| norm(&e) > 1e-8) {
            basis.push(e);
        }
    }
    basis.remove(0);
    basis
}

/// Unit directions covering the sphere in dimension `n`.
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * j as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => (0..n)
            .flat_map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let mut f = e.clone();
                f[i] = -1.0;
                [e, f]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_direction_fills_ball() {
        let n = DirectionalNeighborhood {
            center: vec![0.0, 0.0],
            direction: vec![0.0, 0.0],
            eps: 0.05,
            delta: 0.1,
        };
        let pts = sample_dir_neighborhood(&n, &SequenceSchedule::default());
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| n.contains(p)));
        assert!(pts.iter().all(|p| norm(p) <= 0.05));
    }

    #[test]
    fn zero_slack_stays_on_ray() {
        let n = DirectionalNeighborhood {
            center: vec![1.0, 1.0],
            direction: vec![1.0, 0.0],
            eps: 1.0,
            delta: 0.0,
        };
        for p in sample_dir_neighborhood(&n, &SequenceSchedule::default()) {
            assert!((p[1] - 1.0).abs() < 1e-15 && p[0] > 1.0);
        }
    }

    #[test]
    fn cap_membership() {
        for dim in 2..=3 {
            let mut d = vec![0.0; dim];
            d[0] = 1.0;
            let n = DirectionalNeighborhood {
                center: vec![0.0; dim],
                direction: d.clone(),
                eps: 1.0,
                delta: 0.1,
            };
            for p in sample_dir_neighborhood(&n, &SequenceSchedule::default()) {
                assert!(n.contains(&p));
                let w = linalg::normalized(&p).unwrap();
                assert!(linalg::dist(&w, &d) <= 0.1);
            }
        }
    }
}
