use super::dd::GeneratorCone;
use super::polyhedron::{Polyhedron, Row};
use super::GeometryError;
use crate::linalg::{dot, norm};

/// Directions shorter than this are treated as the zero direction.
pub const ZERO_DIRECTION: f64 = 1e-12;

fn check_member(s: &Polyhedron, x: &[f64]) -> Result<(), GeometryError> {
    if x.len() != s.dim {
        return Err(GeometryError::DimensionMismatch {
            expected: s.dim,
            got: x.len(),
        });
    }
    if !s.contains_point(x) {
        return Err(GeometryError::PointNotInSet {
            violation: s.violation(x),
        });
    }
    Ok(())
}

/// Tangent cone of a polyhedron: active inequalities and all equations, with zero offsets.
pub fn tangent_cone(s: &Polyhedron, x: &[f64]) -> Result<Polyhedron, GeometryError> {
    check_member(s, x)?;
    let homog = |r: &Row| Row::new(r.normal.clone(), 0.0);
    Ok(Polyhedron {
        dim: s.dim,
        ineqs: s
            .ineqs
            .iter()
            .filter(|r| r.is_active(x))
            .map(homog)
            .collect(),
        eqs: s.eqs.iter().map(homog).collect(),
    })
}

/// Normal cone: active inequality normals as rays, equation normals as lineality.
pub fn normal_cone(s: &Polyhedron, x: &[f64]) -> Result<GeneratorCone, GeometryError> {
    check_member(s, x)?;
    let rays = s
        .ineqs
        .iter()
        .filter(|r| r.is_active(x))
        .map(|r| r.normal.clone())
        .collect();
    let lineality = s.eqs.iter().map(|r| r.normal.clone()).collect();
    Ok(GeneratorCone::new(s.dim, rays, lineality))
}

/// `N(x) ∩ {d}^⊥` when `d` is tangent, the empty cone otherwise.
pub fn directional_normal_cone(
    s: &Polyhedron,
    x: &[f64],
    d: &[f64],
) -> Result<GeneratorCone, GeometryError> {
    check_member(s, x)?;
    if norm(d) < ZERO_DIRECTION {
        return normal_cone(s, x);
    }
    let tangent = tangent_cone(s, x)?;
    if !tangent.contains_point(d) {
        return Ok(GeneratorCone::empty(s.dim));
    }
    let scale = norm(d);
    // with d tangent every active row has <a,d> <= 0; only the orthogonal ones survive
    let rays = s
        .ineqs
        .iter()
        .filter(|r| r.is_active(x))
        .filter(|r| dot(&r.normal, d).abs() <= 1e-9 * (1.0 + norm(&r.normal) * scale))
        .map(|r| r.normal.clone())
        .collect();
    let lineality = s.eqs.iter().map(|r| r.normal.clone()).collect();
    Ok(GeneratorCone::new(s.dim, rays, lineality))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_at_apex() {
        let s = Polyhedron::nonpositive(2);
        let t = tangent_cone(&s, &[0.0, 0.0]).unwrap();
        assert!(t.same_set(&s));
    }

    #[test]
    fn inactive_point_gives_whole_space() {
        let s = Polyhedron::universe(1).with_ineq(vec![1.0], 1.0);
        let t = tangent_cone(&s, &[0.0]).unwrap();
        assert!(t.same_set(&Polyhedron::universe(1)));
    }

    #[test]
    fn normal_cones() {
        let s = Polyhedron::nonpositive(1);
        assert_eq!(normal_cone(&s, &[0.0]).unwrap().rays, vec![vec![1.0]]);
        let s2 = Polyhedron::nonpositive(2);
        assert_eq!(
            normal_cone(&s2, &[0.0, -1.0]).unwrap().rays,
            vec![vec![1.0, 0.0]]
        );
        let pt = Polyhedron::origin(1);
        let n = normal_cone(&pt, &[0.0]).unwrap();
        assert_eq!(n.lineality, vec![vec![1.0]]);
    }

    #[test]
    fn directional_cases() {
        let s = Polyhedron::nonpositive(1);
        assert!(directional_normal_cone(&s, &[0.0], &[-1.0])
            .unwrap()
            .is_zero());
        assert!(directional_normal_cone(&s, &[0.0], &[1.0]).unwrap().empty);
        let s2 = Polyhedron::nonpositive(2);
        let n = directional_normal_cone(&s2, &[0.0, 0.0], &[0.0, -1.0]).unwrap();
        assert_eq!(n.rays, vec![vec![1.0, 0.0]]);
        let n0 = directional_normal_cone(&s2, &[0.0, 0.0], &[0.0, 1e-13]).unwrap();
        assert!(n0.same_set(&normal_cone(&s2, &[0.0, 0.0]).unwrap()));
    }

    #[test]
    fn rejects_outside_point() {
        let s = Polyhedron::nonpositive(1);
        assert!(matches!(
            tangent_cone(&s, &[1.0]),
            Err(GeometryError::PointNotInSet { .. })
        ));
    }
}
