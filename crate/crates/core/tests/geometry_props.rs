use dirsens::geometry::{
    convex_hull, fm_project, h_to_v, normal_cone, tangent_cone, v_to_h, Polyhedron,
};
use dirsens::linalg::dot;
use proptest::prelude::*;

/// Box `[-1,1]^dim` cut by integer half-spaces through the origin and a few offset cuts.
fn polytope(dim: usize) -> impl Strategy<Value = Polyhedron> {
    let row = prop::collection::vec(-3i32..=3, dim);
    (
        prop::collection::vec(row.clone(), 1..=dim + 1),
        prop::collection::vec((row, 1i32..=3), 0..=2),
    )
        .prop_map(move |(cuts, offsets)| {
            let mut p = Polyhedron::boxed(&vec![-1.0; dim], &vec![1.0; dim]);
            for a in cuts.into_iter().filter(|a| a.iter().any(|&v| v != 0)) {
                p = p.with_ineq(a.iter().map(|&v| v as f64).collect(), 0.0);
            }
            for (a, b) in offsets
                .into_iter()
                .filter(|(a, _)| a.iter().any(|&v| v != 0))
            {
                p = p.with_ineq(a.iter().map(|&v| v as f64).collect(), b as f64 * 0.5);
            }
            p
        })
}

fn any_polytope() -> impl Strategy<Value = Polyhedron> {
    (2usize..=3).prop_flat_map(polytope)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vertex_round_trip_is_lossless(p in any_polytope()) {
        let (vertices, cone) = h_to_v(&p).unwrap();
        prop_assert!(cone.is_zero());
        prop_assert!(!vertices.is_empty());
        for v in &vertices {
            prop_assert!(p.contains_point(v));
        }
        let back = v_to_h(p.dim, &vertices, &cone).unwrap();
        prop_assert!(back.same_set(&p));
    }

    #[test]
    fn tangent_and_normal_cones_are_polar(p in any_polytope()) {
        // the origin lies on every cut through it
        let origin = vec![0.0; p.dim];
        let tangent = tangent_cone(&p, &origin).unwrap();
        let normal = normal_cone(&p, &origin).unwrap();
        let (apex, tangent_gens) = h_to_v(&tangent).unwrap();
        prop_assert_eq!(apex.len(), 1);
        for t in tangent_gens.rays.iter().chain(&tangent_gens.lineality) {
            for n in &normal.rays {
                prop_assert!(dot(t, n) <= 1e-9, "t={:?} n={:?}", t, n);
            }
        }
        for l in &tangent_gens.lineality {
            for n in &normal.rays {
                prop_assert!(dot(l, n).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn projection_equals_shadow_of_vertices(p in polytope(3), keep in prop::sample::subsequence(vec![0usize, 1, 2], 1..=2)) {
        let shadow = fm_project(&p, &keep).unwrap();
        let (vertices, _) = h_to_v(&p).unwrap();
        let projected: Vec<Vec<f64>> = vertices
            .iter()
            .map(|v| keep.iter().map(|&j| v[j]).collect())
            .collect();
        for q in &projected {
            prop_assert!(shadow.contains_point(q));
        }
        let hull = convex_hull(keep.len(), &projected).unwrap();
        prop_assert!(hull.same_set(&shadow));
    }

    #[test]
    fn canonical_form_preserves_the_set(p in any_polytope(), scale in 0.01f64..100.0) {
        let mut scaled = p.clone();
        for r in &mut scaled.ineqs {
            r.normal.iter_mut().for_each(|v| *v *= scale);
            r.offset *= scale;
        }
        prop_assert!(scaled.canonical().same_set(&p));
        prop_assert_eq!(scaled.canonical(), p.canonical());
    }
}
