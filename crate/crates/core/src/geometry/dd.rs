//! Double-description conversions between H- and V-representations.

use serde::{Deserialize, Serialize};

use super::polyhedron::{Polyhedron, Row, LP_TOL};
use super::GeometryError;
use crate::linalg::{self, dot, norm};
use crate::lp::LinearProgram;

pub const MAX_DD_DIM: usize = 8;
pub const MAX_RAYS: usize = 20_000;
const ZERO_TOL: f64 = 1e-9;

/// `cone(rays) + span(lineality)`, or the empty set when `empty` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCone {
    pub dim: usize,
    pub rays: Vec<Vec<f64>>,
    pub lineality: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty: bool,
}

impl GeneratorCone {
    pub fn new(dim: usize, rays: Vec<Vec<f64>>, lineality: Vec<Vec<f64>>) -> Self {
        let mut c = GeneratorCone {
            dim,
            rays,
            lineality,
            empty: false,
        };
        c.normalize();
        c
    }

    pub fn zero(dim: usize) -> Self {
        GeneratorCone::new(dim, Vec::new(), Vec::new())
    }

    pub fn empty(dim: usize) -> Self {
        GeneratorCone {
            dim,
            rays: Vec::new(),
            lineality: Vec::new(),
            empty: true,
        }
    }

    /// True for the cone `{0}` (not for the empty cone).
    pub fn is_zero(&self) -> bool {
        !self.empty && self.rays.is_empty() && self.lineality.is_empty()
    }

    /// Unit-normalizes generators, drops zeros and duplicates, sorts lexicographically.
    pub fn normalize(&mut self) {
        let clean = |v: &mut Vec<Vec<f64>>| {
            let mut out: Vec<Vec<f64>> = v
                .iter()
                .filter_map(|r| linalg::normalized(r))
                .map(|r| r.iter().map(|x| linalg::snap(*x, 1e-12)).collect())
                .collect();
            out.sort_by(|a: &Vec<f64>, b| lex_cmp(a, b));
            out.dedup_by(|a, b| linalg::dist(a, b) < 1e-10);
            *v = out;
        };
        clean(&mut self.rays);
        clean(&mut self.lineality);
    }

    /// Whether `g` lies in the cone (LP on nonnegative ray weights).
    pub fn contains_vector(&self, g: &[f64]) -> bool {
        if self.empty {
            return false;
        }
        let nr = self.rays.len();
        let nl = self.lineality.len();
        let mut lp = LinearProgram::new(nr + nl);
        for i in 0..nr {
            let mut a = vec![0.0; nr + nl];
            a[i] = -1.0;
            lp.le.push((a, 0.0));
        }
        let scale = 1.0 + norm(g);
        for j in 0..self.dim {
            let mut a: Vec<f64> = self.rays.iter().map(|r| r[j]).collect();
            a.extend(self.lineality.iter().map(|l| l[j]));
            // |sum - g_j| <= tol, relaxed to absorb rounding in the generators
            lp.le.push((a.clone(), g[j] + LP_TOL * scale));
            lp.le
                .push((linalg::scale(&a, -1.0), -g[j] + LP_TOL * scale));
        }
        lp.solve().value().is_some()
    }

    /// Cone containment by generator membership.
    pub fn contains_cone(&self, other: &GeneratorCone) -> bool {
        if other.empty {
            return true;
        }
        if self.empty {
            return false;
        }
        other.rays.iter().all(|r| self.contains_vector(r))
            && other
                .lineality
                .iter()
                .all(|l| self.contains_vector(l) && self.contains_vector(&linalg::scale(l, -1.0)))
    }

    pub fn same_set(&self, other: &GeneratorCone) -> bool {
        self.contains_cone(other) && other.contains_cone(self)
    }

    /// Drops rays that are conic combinations of the remaining generators.
    pub fn minimal(&self) -> GeneratorCone {
        let mut out = self.clone();
        let mut i = 0;
        while i < out.rays.len() {
            let mut rest = out.clone();
            let r = rest.rays.remove(i);
            if rest.contains_vector(&r) {
                out.rays.remove(i);
            } else {
                i += 1;
            }
        }
        out
    }

    pub fn to_polyhedron(&self) -> Result<Polyhedron, GeometryError> {
        if self.empty {
            return Ok(Polyhedron::empty(self.dim));
        }
        v_to_h(self.dim, &[vec![0.0; self.dim]], self)
    }
}

pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Extreme rays and a lineality basis.
pub type Generators = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Extreme rays and lineality of `{z | G z <= 0, E z = 0}`.
pub fn cone_generators(
    dim: usize,
    ineqs: &[Vec<f64>],
    eqs: &[Vec<f64>],
) -> Result<Generators, GeometryError> {
    if dim > MAX_DD_DIM + 1 {
        return Err(GeometryError::DimensionOverflow {
            what: "double description dimension",
            cap: MAX_DD_DIM,
        });
    }
    // z = N w parametrizes the equation space
    let basis_n = linalg::null_space(eqs, dim, 1e-10);
    let k = basis_n.len();
    if k == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let lift = |w: &[f64], basis: &[Vec<f64>]| -> Vec<f64> {
        let mut z = vec![0.0; basis.first().map_or(0, |b| b.len())];
        for (wi, b) in w.iter().zip(basis) {
            linalg::axpy(&mut z, *wi, b);
        }
        z
    };
    // rows of G N in w-space
    let g: Vec<Vec<f64>> = ineqs
        .iter()
        .map(|a| basis_n.iter().map(|b| dot(a, b)).collect::<Vec<f64>>())
        .filter(|r: &Vec<f64>| norm(r) > 1e-12)
        .map(|r| linalg::scale(&r, 1.0 / norm(&r)))
        .collect();
    let lin_w = linalg::null_space(&g, k, 1e-10);
    // q-coordinates on the orthogonal complement of the lineality space
    let basis_q = linalg::null_space(&lin_w, k, 1e-10);
    let kq = basis_q.len();
    let lineality: Vec<Vec<f64>> = lin_w.iter().map(|l| lift(l, &basis_n)).collect();
    if kq == 0 {
        return Ok((Vec::new(), lineality));
    }
    let h: Vec<Vec<f64>> = g
        .iter()
        .map(|r| basis_q.iter().map(|b| dot(r, b)).collect::<Vec<f64>>())
        .collect();
    let rays_q = pointed_rays(&h, kq)?;
    let rays = rays_q
        .iter()
        .map(|q| lift(&lift(q, &basis_q), &basis_n))
        .collect();
    Ok((rays, lineality))
}

/// Extreme rays of a pointed cone `{q | H q <= 0}` in `k` dimensions.
fn pointed_rays(h: &[Vec<f64>], k: usize) -> Result<Vec<Vec<f64>>, GeometryError> {
    // pick k independent rows for the initial simplicial cone
    let mut chosen: Vec<usize> = Vec::new();
    let mut span: Vec<Vec<f64>> = Vec::new();
    for (i, r) in h.iter().enumerate() {
        let mut trial = span.clone();
        trial.push(r.clone());
        if linalg::rank(&trial, k, 1e-9) > span.len() {
            span = trial;
            chosen.push(i);
            if chosen.len() == k {
                break;
            }
        }
    }
    if chosen.len() < k {
        return Err(GeometryError::Malformed("cone is not pointed".into()));
    }
    // rays are the columns of -B^{-1}
    let mut rays: Vec<Vec<f64>> = Vec::new();
    for j in 0..k {
        let mut aug: Vec<Vec<f64>> = chosen
            .iter()
            .enumerate()
            .map(|(i, &row)| {
                let mut v = h[row].clone();
                v.push(if i == j { -1.0 } else { 0.0 });
                v
            })
            .collect();
        linalg::rref(&mut aug, k, 1e-14);
        let r: Vec<f64> = aug.iter().map(|row| row[k]).collect();
        rays.push(linalg::scale(&r, 1.0 / norm(&r)));
    }
    let mut processed: Vec<usize> = chosen.clone();
    // zero sets indexed by position in `processed`
    let tight = |r: &[f64], rows: &[usize]| -> Vec<usize> {
        rows.iter()
            .enumerate()
            .filter(|(_, &i)| dot(&h[i], r).abs() <= ZERO_TOL)
            .map(|(p, _)| p)
            .collect()
    };
    let mut zero_sets: Vec<Vec<usize>> = rays.iter().map(|r| tight(r, &processed)).collect();
    for (i, row) in h.iter().enumerate() {
        if chosen.contains(&i) {
            continue;
        }
        let vals: Vec<f64> = rays.iter().map(|r| dot(row, r)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&j| vals[j] > ZERO_TOL).collect();
        if pos.is_empty() {
            processed.push(i);
            let p = processed.len() - 1;
            for (j, z) in zero_sets.iter_mut().enumerate() {
                if vals[j].abs() <= ZERO_TOL {
                    z.push(p);
                }
            }
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&j| vals[j] < -ZERO_TOL).collect();
        let mut new_rays = Vec::new();
        let mut new_zero = Vec::new();
        for &a in &pos {
            for &b in &neg {
                let common: Vec<usize> = zero_sets[a]
                    .iter()
                    .filter(|p| zero_sets[b].contains(p))
                    .copied()
                    .collect();
                if common.len() + 2 < k {
                    continue;
                }
                let adjacent = (0..rays.len())
                    .all(|c| c == a || c == b || !common.iter().all(|p| zero_sets[c].contains(p)));
                if !adjacent {
                    continue;
                }
                let mut r = linalg::scale(&rays[b], vals[a]);
                linalg::axpy(&mut r, -vals[b], &rays[a]);
                if let Some(r) = linalg::normalized(&r) {
                    new_rays.push(r);
                    new_zero.push(common);
                }
            }
        }
        let mut kept: Vec<Vec<f64>> = Vec::new();
        let mut kept_zero: Vec<Vec<usize>> = Vec::new();
        processed.push(i);
        let p = processed.len() - 1;
        for j in 0..rays.len() {
            if vals[j] <= ZERO_TOL {
                let mut z = zero_sets[j].clone();
                if vals[j].abs() <= ZERO_TOL {
                    z.push(p);
                }
                kept.push(rays[j].clone());
                kept_zero.push(z);
            }
        }
        for (r, mut z) in new_rays.into_iter().zip(new_zero) {
            z.push(p);
            kept.push(r);
            kept_zero.push(z);
        }
        if kept.len() > MAX_RAYS {
            return Err(GeometryError::DimensionOverflow {
                what: "double description ray count",
                cap: MAX_RAYS,
            });
        }
        rays = kept;
        zero_sets = kept_zero;
    }
    Ok(rays)
}

/// Minkowski decomposition `S = conv(vertices) + cone`. An empty set has no vertices.
pub fn h_to_v(s: &Polyhedron) -> Result<(Vec<Vec<f64>>, GeneratorCone), GeometryError> {
    if s.dim > MAX_DD_DIM {
        return Err(GeometryError::DimensionOverflow {
            what: "double description dimension",
            cap: MAX_DD_DIM,
        });
    }
    if s.is_empty() {
        return Ok((Vec::new(), GeneratorCone::empty(s.dim)));
    }
    let d = s.dim;
    let homog = |r: &Row| {
        let mut a = r.normal.clone();
        a.push(-r.offset);
        a
    };
    let mut ineqs: Vec<Vec<f64>> = s.ineqs.iter().map(homog).collect();
    let mut slack = vec![0.0; d + 1];
    slack[d] = -1.0;
    ineqs.push(slack);
    let eqs: Vec<Vec<f64>> = s.eqs.iter().map(homog).collect();
    let (rays, lineality) = cone_generators(d + 1, &ineqs, &eqs)?;
    let mut vertices = Vec::new();
    let mut cone_rays = Vec::new();
    for r in rays {
        let sv = r[d];
        if sv > ZERO_TOL {
            vertices.push(r[..d].iter().map(|v| v / sv).collect::<Vec<f64>>());
        } else {
            cone_rays.push(r[..d].to_vec());
        }
    }
    let lineality = lineality.into_iter().map(|l| l[..d].to_vec()).collect();
    vertices.sort_by(|a, b| lex_cmp(a, b));
    vertices.dedup_by(|a, b| linalg::dist(a, b) < 1e-10);
    Ok((vertices, GeneratorCone::new(d, cone_rays, lineality)))
}

/// H-representation of `conv(vertices) + cone`. No vertices gives the empty set.
pub fn v_to_h(
    dim: usize,
    vertices: &[Vec<f64>],
    cone: &GeneratorCone,
) -> Result<Polyhedron, GeometryError> {
    if vertices.is_empty() || cone.empty {
        return Ok(Polyhedron::empty(dim));
    }
    // polar cone in (a, b): <a,v> - b <= 0, <a,r> <= 0, <a,l> = 0
    let mut ineqs = Vec::new();
    for v in vertices {
        let mut row = v.clone();
        row.push(-1.0);
        ineqs.push(row);
    }
    for r in &cone.rays {
        let mut row = r.clone();
        row.push(0.0);
        ineqs.push(row);
    }
    let eqs: Vec<Vec<f64>> = cone
        .lineality
        .iter()
        .map(|l| {
            let mut row = l.clone();
            row.push(0.0);
            row
        })
        .collect();
    let (rays, lineality) = cone_generators(dim + 1, &ineqs, &eqs)?;
    let mut p = Polyhedron::universe(dim);
    for r in rays {
        if norm(&r[..dim]) > 1e-10 {
            p.ineqs.push(Row::new(r[..dim].to_vec(), r[dim]));
        }
    }
    for l in lineality {
        if norm(&l[..dim]) > 1e-10 {
            p.eqs.push(Row::new(l[..dim].to_vec(), l[dim]));
        }
    }
    Ok(p)
}

/// Convex hull of finitely many points as an H-representation.
pub fn convex_hull(dim: usize, points: &[Vec<f64>]) -> Result<Polyhedron, GeometryError> {
    v_to_h(dim, points, &GeneratorCone::zero(dim))
}
