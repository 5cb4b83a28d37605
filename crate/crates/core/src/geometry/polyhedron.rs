use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::linalg::{self, dot, norm};
use crate::lp::{LinearProgram, LpOutcome};

/// Relative slack used when comparing LP optima against offsets.
pub const LP_TOL: f64 = 1e-8;

/// One linear row `<normal, x> (<= or =) offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Row {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Row { normal, offset }
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    /// Scale-aware activity tolerance `1e-9 (1 + |a| |x|)`.
    pub fn tolerance(&self, x: &[f64]) -> f64 {
        1e-9 * (1.0 + norm(&self.normal) * norm(x))
    }

    pub fn is_active(&self, x: &[f64]) -> bool {
        self.residual(x).abs() <= self.tolerance(x)
    }

    fn scaled(&self, s: f64) -> Row {
        Row::new(linalg::scale(&self.normal, s), self.offset * s)
    }
}

/// H-representation `{x | A x <= b, E x = f}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolyhedronJson", try_from = "PolyhedronJson")]
pub struct Polyhedron {
    pub dim: usize,
    pub ineqs: Vec<Row>,
    pub eqs: Vec<Row>,
}

#[derive(Serialize, Deserialize)]
struct PolyhedronJson {
    dim: usize,
    ineqs: Vec<Vec<f64>>,
    eqs: Vec<Vec<f64>>,
}

impl From<Polyhedron> for PolyhedronJson {
    fn from(p: Polyhedron) -> Self {
        let flat = |rows: &[Row]| {
            rows.iter()
                .map(|r| {
                    let mut v = r.normal.clone();
                    v.push(r.offset);
                    v
                })
                .collect()
        };
        PolyhedronJson {
            dim: p.dim,
            ineqs: flat(&p.ineqs),
            eqs: flat(&p.eqs),
        }
    }
}

impl TryFrom<PolyhedronJson> for Polyhedron {
    type Error = GeometryError;

    fn try_from(j: PolyhedronJson) -> Result<Self, Self::Error> {
        let unflat = |rows: Vec<Vec<f64>>| -> Result<Vec<Row>, GeometryError> {
            rows.into_iter()
                .map(|mut v| {
                    if v.len() != j.dim + 1 {
                        return Err(GeometryError::DimensionMismatch {
                            expected: j.dim + 1,
                            got: v.len(),
                        });
                    }
                    let b = v.pop().unwrap();
                    Ok(Row::new(v, b))
                })
                .collect()
        };
        Ok(Polyhedron {
            dim: j.dim,
            ineqs: unflat(j.ineqs)?,
            eqs: unflat(j.eqs)?,
        })
    }
}

impl Polyhedron {
    pub fn universe(dim: usize) -> Self {
        Polyhedron {
            dim,
            ineqs: Vec::new(),
            eqs: Vec::new(),
        }
    }

    /// The canonical empty set `{x | 0 <= -1}`.
    pub fn empty(dim: usize) -> Self {
        Polyhedron {
            dim,
            ineqs: vec![Row::new(vec![0.0; dim], -1.0)],
            eqs: Vec::new(),
        }
    }

    /// The cone `{0}`.
    pub fn origin(dim: usize) -> Self {
        let eqs = (0..dim)
            .map(|i| {
                let mut a = vec![0.0; dim];
                a[i] = 1.0;
                Row::new(a, 0.0)
            })
            .collect();
        Polyhedron {
            dim,
            ineqs: Vec::new(),
            eqs,
        }
    }

    /// Nonpositive orthant in `dim` coordinates.
    pub fn nonpositive(dim: usize) -> Self {
        let ineqs = (0..dim)
            .map(|i| {
                let mut a = vec![0.0; dim];
                a[i] = 1.0;
                Row::new(a, 0.0)
            })
            .collect();
        Polyhedron {
            dim,
            ineqs,
            eqs: Vec::new(),
        }
    }

    /// Axis box `lo <= x <= hi`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Self {
        let dim = lo.len();
        let mut p = Polyhedron::universe(dim);
        for i in 0..dim {
            let mut a = vec![0.0; dim];
            a[i] = 1.0;
            p.ineqs.push(Row::new(a.clone(), hi[i]));
            a[i] = -1.0;
            p.ineqs.push(Row::new(a, -lo[i]));
        }
        p
    }

    pub fn from_rows(dim: usize, ineqs: Vec<(Vec<f64>, f64)>, eqs: Vec<(Vec<f64>, f64)>) -> Self {
        Polyhedron {
            dim,
            ineqs: ineqs.into_iter().map(|(a, b)| Row::new(a, b)).collect(),
            eqs: eqs.into_iter().map(|(a, b)| Row::new(a, b)).collect(),
        }
    }

    pub fn with_ineq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.ineqs.push(Row::new(a, b));
        self
    }

    pub fn with_eq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.eqs.push(Row::new(a, b));
        self
    }

    pub fn check(&self) -> Result<(), GeometryError> {
        for r in self.ineqs.iter().chain(&self.eqs) {
            if r.normal.len() != self.dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: self.dim,
                    got: r.normal.len(),
                });
            }
            if !r.offset.is_finite() || r.normal.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::Malformed("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    pub fn is_cone(&self) -> bool {
        self.ineqs.iter().chain(&self.eqs).all(|r| r.offset == 0.0)
    }

    /// Largest constraint violation at `x` (zero when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let (vi, ve) = self.split_violation(x);
        vi.max(ve)
    }

    /// Largest inequality excess and largest equation residual, separately.
    pub fn split_violation(&self, x: &[f64]) -> (f64, f64) {
        let vi = self
            .ineqs
            .iter()
            .map(|r| r.residual(x).max(0.0))
            .fold(0.0, f64::max);
        let ve = self
            .eqs
            .iter()
            .map(|r| r.residual(x).abs())
            .fold(0.0, f64::max);
        (vi, ve)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.ineqs.iter().all(|r| r.residual(x) <= r.tolerance(x))
            && self.eqs.iter().all(|r| r.is_active(x))
    }

    pub fn active_ineqs(&self, x: &[f64]) -> Vec<usize> {
        (0..self.ineqs.len())
            .filter(|&i| self.ineqs[i].is_active(x))
            .collect()
    }

    fn program(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.dim);
        for r in &self.ineqs {
            lp.le.push((r.normal.clone(), r.offset));
        }
        for r in &self.eqs {
            lp.eq.push((r.normal.clone(), r.offset));
        }
        lp
    }

    /// `sup <c, x>` over the set.
    pub fn maximize(&self, c: &[f64]) -> LpOutcome {
        self.program().maximize(c).solve()
    }

    pub fn feasible_point(&self) -> Option<Vec<f64>> {
        match self.program().solve() {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.feasible_point().is_none()
    }

    /// True when the set is exactly `{0}` (or a single point, for non-cones).
    pub fn is_singleton(&self) -> bool {
        if self.is_empty() {
            return false;
        }
        (0..self.dim).all(|j| {
            let mut c = vec![0.0; self.dim];
            c[j] = 1.0;
            let hi = self.maximize(&c).value();
            c[j] = -1.0;
            let lo = self.maximize(&c).value().map(|v| -v);
            matches!((hi, lo), (Some(h), Some(l)) if h - l <= LP_TOL * (1.0 + h.abs()))
        })
    }

    pub fn is_origin(&self) -> bool {
        self.is_singleton() && self.contains_point(&vec![0.0; self.dim])
    }

    /// Whether the whole of `other` lies in `self`.
    pub fn contains(&self, other: &Polyhedron) -> bool {
        if other.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        let within = |a: &[f64], b: f64| match other.maximize(a) {
            LpOutcome::Optimal { value, .. } => value <= b + LP_TOL * (1.0 + b.abs()),
            LpOutcome::Unbounded => false,
            LpOutcome::Infeasible => true,
        };
        self.ineqs.iter().all(|r| within(&r.normal, r.offset))
            && self.eqs.iter().all(|r| {
                within(&r.normal, r.offset) && within(&linalg::scale(&r.normal, -1.0), -r.offset)
            })
    }

    /// Set equality by double containment.
    pub fn same_set(&self, other: &Polyhedron) -> bool {
        self.contains(other) && other.contains(self)
    }

    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        let mut p = self.clone();
        p.ineqs.extend(other.ineqs.iter().cloned());
        p.eqs.extend(other.eqs.iter().cloned());
        p
    }

    /// `{z | M z + c in self}` for a row-major `M` with `cols` columns.
    pub fn preimage(&self, m: &[Vec<f64>], c: &[f64], cols: usize) -> Polyhedron {
        let pull = |r: &Row| {
            let normal = linalg::mat_t_vec(m, &r.normal, cols);
            Row::new(normal, r.offset - dot(&r.normal, c))
        };
        Polyhedron {
            dim: cols,
            ineqs: self.ineqs.iter().map(pull).collect(),
            eqs: self.eqs.iter().map(pull).collect(),
        }
    }

    /// Cartesian product `self x other`.
    pub fn product(&self, other: &Polyhedron) -> Polyhedron {
        let dim = self.dim + other.dim;
        let left = |r: &Row| {
            let mut a = r.normal.clone();
            a.resize(dim, 0.0);
            Row::new(a, r.offset)
        };
        let right = |r: &Row| {
            let mut a = vec![0.0; self.dim];
            a.extend_from_slice(&r.normal);
            Row::new(a, r.offset)
        };
        Polyhedron {
            dim,
            ineqs: self
                .ineqs
                .iter()
                .map(left)
                .chain(other.ineqs.iter().map(right))
                .collect(),
            eqs: self
                .eqs
                .iter()
                .map(left)
                .chain(other.eqs.iter().map(right))
                .collect(),
        }
    }

    /// Drops zero rows, normalizes, merges parallel rows and removes LP-redundant
    /// inequalities. Returns the canonical empty set when infeasible.
    pub fn reduced(&self) -> Polyhedron {
        if self.is_empty() {
            return Polyhedron::empty(self.dim);
        }
        let mut eqs: Vec<Row> = Vec::new();
        for r in &self.eqs {
            let n = norm(&r.normal);
            if n > 1e-12 {
                eqs.push(r.scaled(1.0 / n));
            }
        }
        let mut ineqs: Vec<Row> = Vec::new();
        for r in &self.ineqs {
            let n = norm(&r.normal);
            if n <= 1e-12 {
                continue;
            }
            let r = r.scaled(1.0 / n);
            if let Some(k) = ineqs
                .iter()
                .position(|q| linalg::dist(&q.normal, &r.normal) < 1e-12)
            {
                if r.offset < ineqs[k].offset {
                    ineqs[k] = r;
                }
            } else {
                ineqs.push(r);
            }
        }
        let mut i = 0;
        while i < ineqs.len() {
            let mut rest = Polyhedron {
                dim: self.dim,
                ineqs: ineqs.clone(),
                eqs: eqs.clone(),
            };
            let r = rest.ineqs.remove(i);
            let redundant = match rest.maximize(&r.normal) {
                LpOutcome::Optimal { value, .. } => {
                    value <= r.offset + LP_TOL * (1.0 + r.offset.abs())
                }
                LpOutcome::Infeasible => true,
                LpOutcome::Unbounded => false,
            };
            if redundant {
                ineqs.remove(i);
            } else {
                i += 1;
            }
        }
        Polyhedron {
            dim: self.dim,
            ineqs,
            eqs,
        }
    }

    /// Unique H-representation: implicit equalities moved to the equation block
    /// in reduced row echelon form, inequalities reduced modulo the equations,
    /// made irredundant, scaled to unit sup-norm, snapped to a 1e-9 grid and sorted.
    pub fn canonical(&self) -> Polyhedron {
        if self.is_empty() {
            return Polyhedron::empty(self.dim);
        }
        let base = self.reduced();
        let mut eq_rows: Vec<Vec<f64>> = base
            .eqs
            .iter()
            .map(|r| {
                let mut v = r.normal.clone();
                v.push(r.offset);
                v
            })
            .collect();
        let mut ineqs = Vec::new();
        for r in &base.ineqs {
            let low = base.maximize(&linalg::scale(&r.normal, -1.0));
            let implicit = matches!(low, LpOutcome::Optimal { value, .. }
                if -value >= r.offset - LP_TOL * (1.0 + r.offset.abs()));
            if implicit {
                let mut v = r.normal.clone();
                v.push(r.offset);
                eq_rows.push(v);
            } else {
                ineqs.push(r.clone());
            }
        }
        let pivots = linalg::rref(&mut eq_rows, self.dim, 1e-10);
        let mut reduced_ineqs = Vec::new();
        for r in ineqs {
            let mut v = r.normal.clone();
            v.push(r.offset);
            for (row, &c) in eq_rows.iter().zip(&pivots) {
                let f = v[c];
                if f != 0.0 {
                    linalg::axpy(&mut v, -f, row);
                    v[c] = 0.0;
                }
            }
            let b = v.pop().unwrap();
            reduced_ineqs.push(Row::new(v, b));
        }
        let eqs: Vec<Row> = eq_rows
            .into_iter()
            .map(|mut v| {
                let b = v.pop().unwrap();
                Row::new(v, b)
            })
            .collect();
        let mut out = Polyhedron {
            dim: self.dim,
            ineqs: reduced_ineqs,
            eqs: eqs.clone(),
        }
        .reduced();
        out.eqs = eqs;
        let snap_row = |r: &Row| {
            let r = r.scaled(1.0 / linalg::norm_inf(&r.normal));
            Row::new(
                r.normal.iter().map(|v| linalg::snap(*v, 1e-9)).collect(),
                linalg::snap(r.offset, 1e-9),
            )
        };
        out.eqs = out.eqs.iter().map(snap_row).collect();
        out.ineqs = out.ineqs.iter().map(snap_row).collect();
        out.ineqs.sort_by(|a, b| {
            a.normal
                .iter()
                .chain(std::iter::once(&a.offset))
                .zip(b.normal.iter().chain(std::iter::once(&b.offset)))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        out
    }

    /// Sup-norm distance from `z` to the set, or `None` when empty.
    pub fn distance_inf(&self, z: &[f64]) -> Option<f64> {
        // variables (x, t): minimize t with |x - z|_inf <= t
        let d = self.dim;
        let mut lp = LinearProgram::new(d + 1);
        let mut c = vec![0.0; d + 1];
        c[d] = -1.0;
        lp.objective = c;
        for r in &self.ineqs {
            let mut a = r.normal.clone();
            a.push(0.0);
            lp.le.push((a, r.offset));
        }
        for r in &self.eqs {
            let mut a = r.normal.clone();
            a.push(0.0);
            lp.eq.push((a, r.offset));
        }
        for j in 0..d {
            let mut a = vec![0.0; d + 1];
            a[j] = 1.0;
            a[d] = -1.0;
            lp.le.push((a.clone(), z[j]));
            a[j] = -1.0;
            lp.le.push((a, -z[j]));
        }
        lp.solve().value().map(|v| (-v).max(0.0))
    }

    /// Keeps the listed coordinates of a set whose other coordinates are unused.
    pub fn restrict_coords(&self, keep: &[usize]) -> Polyhedron {
        let pick = |r: &Row| Row::new(keep.iter().map(|&j| r.normal[j]).collect(), r.offset);
        Polyhedron {
            dim: keep.len(),
            ineqs: self.ineqs.iter().map(pick).collect(),
            eqs: self.eqs.iter().map(pick).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let p = Polyhedron::from_rows(2, vec![(vec![1.0, 1.0], 1.0)], vec![(vec![1.0, -1.0], 0.0)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"dim":2,"ineqs":[[1.0,1.0,1.0]],"eqs":[[1.0,-1.0,0.0]]}"#
        );
        let q: Polyhedron = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn empty_is_not_origin() {
        assert!(Polyhedron::empty(2).is_empty());
        assert!(!Polyhedron::empty(2).is_origin());
        assert!(Polyhedron::origin(2).is_origin());
    }

    #[test]
    fn canonical_forms_agree() {
        // {x <= 1, -x <= -1, y <= 2} and {x = 1, 2y <= 4, x + y <= 5}
        let a = Polyhedron::from_rows(
            2,
            vec![
                (vec![1.0, 0.0], 1.0),
                (vec![-1.0, 0.0], -1.0),
                (vec![0.0, 1.0], 2.0),
            ],
            vec![],
        );
        let b = Polyhedron::from_rows(
            2,
            vec![(vec![0.0, 2.0], 4.0), (vec![1.0, 1.0], 5.0)],
            vec![(vec![1.0, 0.0], 1.0)],
        );
        assert_eq!(a.canonical(), b.canonical());
        assert!(a.same_set(&b));
    }

    #[test]
    fn containment_of_unbounded() {
        let half = Polyhedron::nonpositive(1);
        let line = Polyhedron::universe(1);
        assert!(line.contains(&half));
        assert!(!half.contains(&line));
    }

    #[test]
    fn sup_distance() {
        let sq = Polyhedron::boxed(&[0.0, 0.0], &[1.0, 1.0]);
        assert!((sq.distance_inf(&[2.0, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sq.distance_inf(&[0.5, 0.5]).unwrap(), 0.0);
    }
}
