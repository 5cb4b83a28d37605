//! Fourier–Motzkin coordinate projection.

use super::polyhedron::{Polyhedron, Row};
use super::GeometryError;
use crate::linalg;

pub const DEFAULT_ROW_CAP: usize = 20_000;

/// Projects onto the coordinates in `keep` (in that order).
pub fn fm_project(s: &Polyhedron, keep: &[usize]) -> Result<Polyhedron, GeometryError> {
    fm_project_capped(s, keep, DEFAULT_ROW_CAP)
}

pub fn fm_project_capped(
    s: &Polyhedron,
    keep: &[usize],
    cap: usize,
) -> Result<Polyhedron, GeometryError> {
    if let Some(&bad) = keep.iter().find(|&&j| j >= s.dim) {
        return Err(GeometryError::DimensionMismatch {
            expected: s.dim,
            got: bad + 1,
        });
    }
    if s.is_empty() {
        return Ok(Polyhedron::empty(keep.len()));
    }
    let mut ineqs = s.ineqs.clone();
    let mut eqs = s.eqs.clone();
    let drop: Vec<usize> = (0..s.dim).filter(|j| !keep.contains(j)).collect();
    for &j in &drop {
        if let Some(k) = (0..eqs.len())
            .filter(|&k| eqs[k].normal[j].abs() > 1e-12)
            .max_by(|&a, &b| eqs[a].normal[j].abs().total_cmp(&eqs[b].normal[j].abs()))
        {
            let pivot = eqs.remove(k);
            let substitute = |r: &mut Row| {
                let f = r.normal[j] / pivot.normal[j];
                if f != 0.0 {
                    linalg::axpy(&mut r.normal, -f, &pivot.normal);
                    r.offset -= f * pivot.offset;
                    r.normal[j] = 0.0;
                }
            };
            ineqs.iter_mut().for_each(substitute);
            eqs.iter_mut().for_each(substitute);
            continue;
        }
        let (mut pos, mut neg, mut zero) = (Vec::new(), Vec::new(), Vec::new());
        for r in ineqs {
            let c = r.normal[j];
            if c > 1e-12 {
                pos.push(r);
            } else if c < -1e-12 {
                neg.push(r);
            } else {
                let mut r = r;
                r.normal[j] = 0.0;
                zero.push(r);
            }
        }
        if zero.len() + pos.len() * neg.len() > cap {
            return Err(GeometryError::DimensionOverflow {
                what: "Fourier-Motzkin row count",
                cap,
            });
        }
        for p in &pos {
            for n in &neg {
                let (cp, cn) = (p.normal[j], -n.normal[j]);
                let mut a = linalg::scale(&p.normal, 1.0 / cp);
                linalg::axpy(&mut a, 1.0 / cn, &n.normal);
                a[j] = 0.0;
                zero.push(Row::new(a, p.offset / cp + n.offset / cn));
            }
        }
        let step = Polyhedron {
            dim: s.dim,
            ineqs: zero,
            eqs: eqs.clone(),
        }
        .reduced();
        ineqs = step.ineqs;
        eqs = step.eqs;
    }
    let out = Polyhedron {
        dim: s.dim,
        ineqs,
        eqs,
    };
    Ok(out.restrict_coords(keep).reduced())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_to_half_line() {
        let s = Polyhedron::universe(2)
            .with_ineq(vec![1.0, 1.0], 1.0)
            .with_ineq(vec![1.0, -1.0], 1.0);
        let p = fm_project(&s, &[0]).unwrap();
        assert!(p.same_set(&Polyhedron::universe(1).with_ineq(vec![1.0], 1.0)));
    }

    #[test]
    fn orthant_projection() {
        let p = fm_project(&Polyhedron::nonpositive(2), &[1]).unwrap();
        assert!(p.same_set(&Polyhedron::nonpositive(1)));
    }

    #[test]
    fn empty_projects_to_empty() {
        let p = fm_project(&Polyhedron::empty(3), &[0, 2]).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.dim, 2);
    }

    #[test]
    fn equation_substitution() {
        // x = y, 0 <= y <= 2 projected to x
        let s = Polyhedron::boxed(&[-10.0, 0.0], &[10.0, 2.0]).with_eq(vec![1.0, -1.0], 0.0);
        let p = fm_project(&s, &[0]).unwrap();
        assert!(p.same_set(&Polyhedron::boxed(&[0.0], &[2.0])));
    }

    #[test]
    fn row_cap_reported() {
        let mut s = Polyhedron::universe(2);
        for i in 0..10 {
            let t = i as f64;
            s = s.with_ineq(vec![t, 1.0], 1.0).with_ineq(vec![t, -1.0], 1.0);
        }
        assert!(matches!(
            fm_project_capped(&s, &[0], 5),
            Err(GeometryError::DimensionOverflow { .. })
        ));
    }
}
