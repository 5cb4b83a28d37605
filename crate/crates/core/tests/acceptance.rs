//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dirsens::engine::{
    check_upper_estimate, classical_multipliers, critical_cone, danskin_sets,
    directional_multipliers, lagrangian_gradient_hull, linearization_cone,
    lipschitz_sufficient_from, select_variant, AnalysisConfig, ConeModel, DirectionMode,
    DirectionalAnalysis, LocalCones, NormalPiece, SmoothModel, SufficientVerdict, Variant, Verdict,
    Which,
};
use dirsens::expr::{grad, parse_expr, parse_problem, Expr, ParametricProblem, Var};
use dirsens::geometry::{
    convex_hull, directional_normal_cone, fm_project, GammaFactor, Polyhedron,
};
use dirsens::linalg;
use dirsens::lp::{LinearProgram, LpOutcome};
use dirsens::oracle::{
    directional_clarke_subdiff, lipschitz_verdict, subgradient_scan, AnalyticValue, DiniEstimate,
    LipschitzVerdict, OracleConfig, ProblemValue,
};
use dirsens::solver::SequenceSchedule;

use common::{central_difference, fixture, CORPUS};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || {
        format!("{what} took {took:.2?}, limit {limit:?}")
    })
}

fn half_line() -> Polyhedron {
    Polyhedron::universe(1)
        .with_ineq(vec![-1.0], 0.0)
        .canonical()
}

/// `min y s.t. (x, y) ∈ {x − y³ ≤ 0}` with the cones of the curved set supplied at the origin.
fn cube_root_graph_model() -> SmoothModel {
    let prob = ParametricProblem::new(
        "cube-root-graph",
        1,
        1,
        parse_expr("y1").unwrap(),
        vec![parse_expr("x1").unwrap(), parse_expr("y1").unwrap()],
        vec![GammaFactor::Poly(Polyhedron::universe(2))],
        vec![(-2.0, 2.0)],
    )
    .unwrap();
    let tangent = Polyhedron::universe(2).with_eq(vec![1.0, 0.0], 0.0);
    let normal = Polyhedron::universe(2)
        .with_ineq(vec![-1.0, 0.0], 0.0)
        .with_eq(vec![0.0, 1.0], 0.0);
    let origin = LocalCones {
        point: vec![0.0, 0.0],
        tangent: tangent.clone(),
        normal: normal.clone(),
        pieces: vec![NormalPiece {
            pattern: vec![0],
            region: tangent,
            normal,
        }],
    };
    SmoothModel::with_cones(&prob, ConeModel::Tabulated(vec![origin])).unwrap()
}

fn exact_dini(lower: f64, upper: f64) -> DiniEstimate {
    DiniEstimate {
        upper,
        lower,
        samples: Vec::new(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let model = cube_root_graph_model();
    let (x, y) = ([0.0], [0.0]);
    let local = model.local_cones(&x, &y).map_err(|e| e.to_string())?;
    let vertical = Polyhedron::universe(2).with_eq(vec![1.0, 0.0], 0.0);
    ensure(local.tangent.same_set(&vertical), || {
        "tangent cone is not {0}×R".into()
    })?;
    let expected_normal = Polyhedron::universe(2)
        .with_ineq(vec![-1.0, 0.0], 0.0)
        .with_eq(vec![0.0, 1.0], 0.0);
    for v in [-2.0, -0.5, 0.0, 1.0, 3.0] {
        let d = [0.0, v];
        let pieces: Vec<_> = local.pieces_at(&d).collect();
        ensure(
            pieces.len() == 1 && pieces[0].normal.same_set(&expected_normal),
            || format!("normal cone in direction (0,{v}) is not R+×{{0}}"),
        )?;
    }
    ensure(local.pieces_at(&[1.0, 0.0]).next().is_none(), || {
        "normal cone in a non-tangent direction is not empty".into()
    })?;

    let lin0 = linearization_cone(&model, &x, &y, &[0.0]).map_err(|e| e.to_string())?;
    ensure(lin0.same_set(&Polyhedron::universe(1)), || {
        "L(0,0;0) is not R".into()
    })?;
    for u in [1.0, -1.0, 0.5] {
        let lin = linearization_cone(&model, &x, &y, &[u]).map_err(|e| e.to_string())?;
        ensure(lin.is_empty(), || format!("L(0,0;{u}) is not empty"))?;
        // along u = 1 both Dini derivatives of the cube root are +∞, along u < 0 both are −∞
        let slope = if u > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        let crit = critical_cone(&model, &x, &y, &[u], &exact_dini(slope, slope), 1e-3)
            .map_err(|e| e.to_string())?;
        ensure(crit.is_empty(), || format!("C(0,0;{u}) is not empty"))?;
        for alpha in [0, 1] {
            let set =
                directional_multipliers(&model, &x, &y, &[u], &crit, alpha, DirectionMode::DirU)
                    .map_err(|e| e.to_string())?;
            ensure(set.is_empty(), || {
                format!("M^{alpha}_u is not empty for u={u}")
            })?;
        }
    }
    let crit0 = critical_cone(
        &model,
        &x,
        &y,
        &[0.0],
        &exact_dini(f64::NEG_INFINITY, f64::INFINITY),
        0.0,
    )
    .map_err(|e| e.to_string())?;
    ensure(crit0.cone.same_set(&Polyhedron::universe(1)), || {
        "C(0,0;0) is not R".into()
    })?;
    let m1 = directional_multipliers(&model, &x, &y, &[0.0], &crit0, 1, DirectionMode::Dir0Sphere)
        .map_err(|e| e.to_string())?;
    ensure(m1.is_empty(), || "M^1_0 on the sphere is not empty".into())?;
    let m0 = directional_multipliers(&model, &x, &y, &[0.0], &crit0, 0, DirectionMode::Dir0Sphere)
        .map_err(|e| e.to_string())?;
    ensure(m0.pieces.len() == 1, || {
        format!("M^0_0 has {} pieces", m0.pieces.len())
    })?;
    ensure(m0.pieces[0].zeta == half_line(), || {
        format!("M^0_0 is {:?}, not R+", m0.pieces[0].zeta)
    })?;
    within(Duration::from_secs(1), start, "exact path")?;
    Ok(format!(
        "T={{0}}xR, N=R+x{{0}}, L(u)=C(u)=M^1_u=M^0_u=M^1_0=empty, C(0)=R, M^0_0=R+ in {:.0?}",
        start.elapsed()
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let prob = fixture("cube_root");
    let cfg = AnalysisConfig::default();
    let value = ProblemValue::new(&prob, cfg.solver.clone()).map_err(|e| e.to_string())?;
    let scan = subgradient_scan(&value, &[0.0], &[1.0], &cfg.schedule, &cfg.oracle)
        .map_err(|e| e.to_string())?;
    ensure(scan.limiting.is_empty(), || {
        format!(
            "limiting estimate is {:?}, expected empty",
            scan.limiting.points
        )
    })?;
    let rays = &scan.singular.rays;
    ensure(rays.len() == 1 && (rays[0][0] - 1.0).abs() <= 1e-3, || {
        format!("singular rays {rays:?}, expected the ray +1")
    })?;
    let verdict = lipschitz_verdict(&value, &[0.0], &[1.0], &cfg.schedule, &cfg.oracle)
        .map_err(|e| e.to_string())?;
    ensure(
        matches!(verdict, LipschitzVerdict::NotLipschitz { .. }),
        || format!("Lipschitz verdict {verdict:?}"),
    )?;
    let model = SmoothModel::new(&prob).map_err(|e| e.to_string())?;
    let inc = check_upper_estimate(
        &model,
        &[0.0],
        &[1.0],
        Which::Singular,
        Variant::InnerSemicontinuous,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    ensure(inc.verdict == Verdict::Holds, || {
        format!("singular upper estimate {:?}", inc.verdict)
    })?;
    within(Duration::from_secs(30), start, "oracle path")?;
    Ok(format!(
        "limiting empty, singular ray {:.6}, NotLipschitz, singular estimate (iii) Holds in {:.1?}",
        rays[0][0],
        start.elapsed()
    ))
}

fn criterion_3() -> Outcome {
    let prob = fixture("danskin");
    let model = SmoothModel::new(&prob).map_err(|e| e.to_string())?;
    let cfg = AnalysisConfig::default();
    let along =
        DirectionalAnalysis::compute(&prob, &[0.0], &[1.0], &cfg).map_err(|e| e.to_string())?;
    let lim = &along.scan.limiting.points;
    ensure(lim.len() == 1 && (lim[0][0] + 1.0).abs() <= 1e-3, || {
        format!("limiting estimate at u=1 is {lim:?}, expected {{-1}}")
    })?;
    let report = danskin_sets(&model, &along, None, &cfg.engine).map_err(|e| e.to_string())?;
    ensure(report.gradient_set == vec![vec![-1.0]], || {
        format!("gradient set at u=1 is {:?}", report.gradient_set)
    })?;
    ensure(report.inclusion == Verdict::Holds, || {
        format!("inclusion {:?}", report.inclusion)
    })?;

    let value = ProblemValue::new(&prob, cfg.solver.clone()).map_err(|e| e.to_string())?;
    let hull = directional_clarke_subdiff(&value, &[0.0], &[0.0], &cfg.schedule, &cfg.oracle)
        .map_err(|e| e.to_string())?;
    let ends: Vec<f64> = hull.vertices.iter().map(|v| v[0]).collect();
    ensure(
        ends.len() == 2 && (ends[0] + 1.0).abs() <= 1e-3 && (ends[1] - 1.0).abs() <= 1e-3,
        || format!("Clarke hull at u=0 has vertices {ends:?}, expected [-1, 1]"),
    )?;
    let still =
        DirectionalAnalysis::compute(&prob, &[0.0], &[0.0], &cfg).map_err(|e| e.to_string())?;
    let classical =
        danskin_sets(&model, &still, Some(&hull), &cfg.engine).map_err(|e| e.to_string())?;
    ensure(classical.clarke_match == Some(true), || {
        format!(
            "gradient hull {:?} differs from the Clarke hull",
            classical.hull_vertices
        )
    })?;
    Ok(format!(
        "u=1: {{{:.6}}} = gradient set; u=0: hull [{:.6}, {:.6}]",
        lim[0][0], ends[0], ends[1]
    ))
}

fn coefficient(rng: &mut ChaCha8Rng) -> f64 {
    f64::from(rng.gen_range(-2i32..=2))
}

/// Smooth inequality-constrained problem with `(0, 0)` feasible; usually a KKT point.
fn random_smooth_problem(seed: u64) -> ParametricProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=2usize);
    let m = rng.gen_range(1..=2usize);
    let p = rng.gen_range(1..=3usize);
    let mut rows = Vec::new();
    let mut ygrads = Vec::new();
    for _ in 0..p {
        let a: Vec<f64> = (0..n).map(|_| coefficient(&mut rng)).collect();
        let b: Vec<f64> = (0..m).map(|_| coefficient(&mut rng)).collect();
        let q = coefficient(&mut rng);
        let active = rng.gen_bool(0.8);
        let c = if active { 0.0 } else { -0.5 };
        let mut text = format!("{c}");
        for (i, v) in a.iter().enumerate() {
            text += &format!(" + ({v})*x{}", i + 1);
        }
        for (j, v) in b.iter().enumerate() {
            text += &format!(" + ({v})*y{}", j + 1);
        }
        text += &format!(" + ({q})*y{}^2", rng.gen_range(1..=m));
        rows.push(text);
        if active {
            ygrads.push(b);
        }
    }
    let mut w = vec![0.0; m];
    if rng.gen_bool(0.8) {
        for b in &ygrads {
            let lam = f64::from(rng.gen_range(0..=2));
            linalg::axpy(&mut w, -lam, b);
        }
    } else {
        w = (0..m).map(|_| coefficient(&mut rng)).collect();
    }
    let mut objective = String::new();
    for (j, wj) in w.iter().enumerate() {
        objective += &format!("({wj})*y{} + 0.5*y{}^2 + ", j + 1, j + 1);
    }
    for i in 0..n {
        objective += &format!("({})*x{} + ", coefficient(&mut rng), i + 1);
    }
    objective += &format!("({})*x1*y1", coefficient(&mut rng));
    let mut text = format!("problem random{seed}\nparams n={n}\nvars m={m}\n");
    for j in 0..m {
        text += &format!("box y{} in [-2, 2]\n", j + 1);
    }
    text += &format!("min {objective}\n");
    for r in rows {
        text += &format!("st {r} in NonPositive\n");
    }
    parse_problem(&text).unwrap_or_else(|e| panic!("generated problem fails to parse: {e}\n{text}"))
}

fn criterion_4() -> Outcome {
    let mut nonempty = 0;
    for seed in 0..10u64 {
        let prob = random_smooth_problem(seed);
        let model = SmoothModel::new(&prob).map_err(|e| e.to_string())?;
        let x = vec![0.0; prob.n];
        let y = vec![0.0; prob.m];
        // the zero-direction quotient of V is identically zero
        let crit = critical_cone(&model, &x, &y, &x, &exact_dini(0.0, 0.0), 0.0)
            .map_err(|e| e.to_string())?;
        for alpha in [0u8, 1] {
            let classical =
                classical_multipliers(&model, &x, &y, alpha).map_err(|e| e.to_string())?;
            let directional =
                directional_multipliers(&model, &x, &y, &x, &crit, alpha, DirectionMode::DirU)
                    .map_err(|e| e.to_string())?;
            let tag = || format!("instance {seed}, alpha {alpha}\n{prob}");
            match classical.pieces.first() {
                None => ensure(directional.is_empty(), || {
                    format!("{}: classical set empty, directional union not", tag())
                })?,
                Some(full) => {
                    nonempty += 1;
                    for pc in &directional.pieces {
                        ensure(full.lambda.contains(&pc.lambda), || {
                            format!(
                                "{}: pattern {:?} leaves the classical set",
                                tag(),
                                pc.pattern
                            )
                        })?;
                    }
                    ensure(
                        directional.pieces.iter().any(|pc| pc.lambda == full.lambda),
                        || {
                            format!(
                                "{}: no piece equals the classical set {:?}",
                                tag(),
                                full.lambda
                            )
                        },
                    )?;
                    ensure(
                        directional.pieces.iter().any(|pc| pc.zeta == full.zeta),
                        || format!("{}: zeta union differs from {:?}", tag(), full.zeta),
                    )?;
                }
            }
        }
    }
    Ok(format!(
        "10 instances, 20 multiplier sets ({nonempty} nonempty) equal after canonicalization"
    ))
}

fn criterion_5() -> Outcome {
    let cfg = AnalysisConfig::default();
    let mut lines = Vec::new();
    for name in ["mfcq_disk", "gd_kink"] {
        let prob = fixture(name);
        let model = SmoothModel::new(&prob).map_err(|e| e.to_string())?;
        let still =
            DirectionalAnalysis::compute(&prob, &[0.0], &[0.0], &cfg).map_err(|e| e.to_string())?;
        let value = ProblemValue::new(&prob, cfg.solver.clone()).map_err(|e| e.to_string())?;
        let clarke = directional_clarke_subdiff(&value, &[0.0], &[0.0], &cfg.schedule, &cfg.oracle)
            .map_err(|e| format!("{name}: {e}"))?;
        let hull = lagrangian_gradient_hull(&model, &[0.0], &still.shells.base.argmins)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("{name}: multiplier set unbounded"))?;
        for v in &clarke.vertices {
            let d = hull.distance_inf(v).unwrap_or(f64::INFINITY);
            ensure(d <= cfg.engine.incl_tol, || {
                format!("{name}: Clarke vertex {v:?} is {d:e} outside the Lagrangian gradient hull")
            })?;
        }
        let ends: Vec<f64> = clarke.vertices.iter().map(|v| v[0]).collect();
        lines.push(format!("{name} {ends:.4?}"));
    }
    Ok(format!(
        "Clarke estimates inside co grad_x L: {}",
        lines.join(", ")
    ))
}

fn criterion_6() -> Outcome {
    type Case = (&'static str, fn(f64) -> f64, bool);
    let cases: [Case; 8] = [
        ("|x|", |x| x.abs(), true),
        ("-|x|", |x| -x.abs(), true),
        ("cbrt(x)", f64::cbrt, false),
        ("x^2", |x| x * x, true),
        ("0", |_| 0.0, true),
        ("3", |_| 3.0, true),
        ("max(2x, -x)", |x| (2.0 * x).max(-x), true),
        ("min(x, 3x) + 1", |x| x.min(3.0 * x) + 1.0, true),
    ];
    let schedule = SequenceSchedule::default();
    let cfg = OracleConfig::default();
    let mut checked = 0;
    for (name, f, lipschitz) in cases {
        let v = AnalyticValue::new(1, move |x: &[f64]| f(x[0]));
        for u in [1.0, -1.0, 0.0] {
            let verdict =
                lipschitz_verdict(&v, &[0.0], &[u], &schedule, &cfg).map_err(|e| e.to_string())?;
            let got = match verdict {
                LipschitzVerdict::Lipschitz { .. } => true,
                LipschitzVerdict::NotLipschitz { .. } => false,
                LipschitzVerdict::Inconclusive { reason } => {
                    return Err(format!("{name} along {u}: inconclusive ({reason})"))
                }
            };
            ensure(got == lipschitz, || {
                format!("{name} along {u}: Lipschitz verdict {got}")
            })?;
            let scan =
                subgradient_scan(&v, &[0.0], &[u], &schedule, &cfg).map_err(|e| e.to_string())?;
            if scan.singular.unresolved == 0 {
                checked += 1;
                ensure(got == scan.singular.rays.is_empty(), || {
                    format!(
                        "{name} along {u}: verdict {got} but singular rays {:?}",
                        scan.singular.rays
                    )
                })?;
            }
        }
    }
    Ok(format!(
        "8 functions x 3 directions agree; singular test checked on {checked} converged cases"
    ))
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = linalg::norm(&v);
        if n > 0.1 && n <= 1.0 {
            return linalg::scale(&v, 1.0 / n);
        }
    }
}

/// Bounded polyhedron in `[-1, 1]^dim` with a few constraints through the origin.
fn random_polytope(rng: &mut ChaCha8Rng, dim: usize) -> (Polyhedron, Vec<Vec<f64>>) {
    let mut ineqs: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut through_origin = Vec::new();
    for _ in 0..rng.gen_range(1..=dim + 1) {
        let a = random_unit(rng, dim);
        through_origin.push(a.clone());
        ineqs.push((a, 0.0));
    }
    for _ in 0..rng.gen_range(0..=2) {
        ineqs.push((random_unit(rng, dim), rng.gen_range(0.3..0.9)));
    }
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        ineqs.push((e.clone(), 1.0));
        e[j] = -1.0;
        ineqs.push((e, 1.0));
    }
    (
        Polyhedron::from_rows(dim, ineqs, Vec::new()),
        through_origin,
    )
}

/// A direction in the face of `{d | a·d ≤ 0}` where the rows in `tight` vanish.
fn face_direction(
    rng: &mut ChaCha8Rng,
    rows: &[Vec<f64>],
    tight: &[usize],
    dim: usize,
) -> Option<Vec<f64>> {
    let mut lp = LinearProgram::new(dim)
        .maximize(&random_unit(rng, dim))
        .boxed(-1.0, 1.0);
    for (i, a) in rows.iter().enumerate() {
        lp = if tight.contains(&i) {
            lp.eq(a.clone(), 0.0)
        } else {
            lp.le(a.clone(), 0.0)
        };
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

fn subsets(k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1usize << k).map(move |mask| (0..k).filter(|i| mask >> i & 1 == 1).collect())
}

fn unit_set(gens: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for g in gens {
        if let Some(u) = linalg::normalized(g) {
            if out.iter().all(|o| linalg::dist(o, &u) > 1e-9) {
                out.push(u);
            }
        }
    }
    out
}

fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let one_way = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| linalg::dist(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Union of regular normal cones at feasible `x̄ + t_k d_k` with `d_k → d`, at the last shell.
fn brute_force_normals(s: &Polyhedron, d: &[f64], perturbations: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut last = Vec::new();
    for t in [1e-2, 1e-3, 1e-4] {
        last.clear();
        for w in std::iter::once(vec![0.0; d.len()]).chain(perturbations.iter().cloned()) {
            let dk: Vec<f64> = d.iter().zip(&w).map(|(a, b)| a + t * b).collect();
            let xk = linalg::scale(&dk, t);
            if s.ineqs.iter().any(|r| r.residual(&xk) > 1e-12) {
                continue;
            }
            for r in &s.ineqs {
                if r.residual(&xk).abs() <= 1e-12 {
                    last.push(r.normal.clone());
                }
            }
        }
    }
    last
}

/// Vertices of a bounded polyhedron by solving every square subsystem of its rows.
fn brute_force_vertices(s: &Polyhedron) -> Vec<Vec<f64>> {
    let dim = s.dim;
    let rows = &s.ineqs;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut pick = Vec::new();
    fn choose(
        k: usize,
        start: usize,
        total: usize,
        pick: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if pick.len() == k {
            f(pick);
            return;
        }
        for i in start..total {
            pick.push(i);
            choose(k, i + 1, total, pick, f);
            pick.pop();
        }
    }
    choose(dim, 0, rows.len(), &mut pick, &mut |idx| {
        let mut a: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| {
                let mut r = rows[i].normal.clone();
                r.push(rows[i].offset);
                r
            })
            .collect();
        if let Some(x) = gauss_solve(&mut a, dim) {
            if s.ineqs.iter().all(|r| r.residual(&x) <= 1e-9)
                && out.iter().all(|o| linalg::dist(o, &x) > 1e-8)
            {
                out.push(x);
            }
        }
    });
    out
}

/// Solves the square augmented system `a` by Gaussian elimination with partial pivoting.
fn gauss_solve(a: &mut [Vec<f64>], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (v, p) in row[col..=n].iter_mut().zip(&pivot_row[col..=n]) {
                    *v -= f * p;
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut nontrivial = 0;
    for inst in 0..50 {
        let dim = rng.gen_range(2..=4usize);
        let (s, cone_rows) = random_polytope(&mut rng, dim);
        let origin = vec![0.0; dim];
        let faces: Vec<Vec<f64>> = subsets(cone_rows.len())
            .filter_map(|t| face_direction(&mut rng, &cone_rows, &t, dim))
            .collect();
        let mut directions = vec![origin.clone(), random_unit(&mut rng, dim)];
        directions.extend(faces.iter().take(4).cloned());
        for d in &directions {
            let lib = directional_normal_cone(&s, &origin, d).map_err(|e| e.to_string())?;
            let lib_units = if lib.empty {
                Vec::new()
            } else {
                unit_set(&lib.rays)
            };
            let brute = unit_set(&brute_force_normals(&s, d, &faces));
            let h = hausdorff(&lib_units, &brute);
            ensure(h <= 1e-6, || {
                format!("instance {inst}, d={d:?}: generator sets {lib_units:?} vs {brute:?} (distance {h:e})")
            })?;
            if !brute.is_empty() {
                worst = worst.max(h);
                nontrivial += 1;
            }
        }
        let keep: Vec<usize> = (0..dim).filter(|_| rng.gen_bool(0.6)).collect();
        let keep = if keep.is_empty() || keep.len() == dim {
            vec![0]
        } else {
            keep
        };
        let projected = fm_project(&s, &keep).map_err(|e| e.to_string())?;
        let shadow: Vec<Vec<f64>> = brute_force_vertices(&s)
            .iter()
            .map(|v| keep.iter().map(|&j| v[j]).collect())
            .collect();
        let hull = convex_hull(keep.len(), &shadow).map_err(|e| e.to_string())?;
        ensure(projected.same_set(&hull), || {
            format!("instance {inst}: projection onto {keep:?} differs from the vertex shadow hull")
        })?;
    }
    Ok(format!(
        "50 polyhedra: {nontrivial} nonempty directional normal cones, max Hausdorff {worst:.1e}; projections match"
    ))
}

fn fixture_expressions() -> Vec<(String, Expr, usize, usize)> {
    let mut out = Vec::new();
    for name in CORPUS {
        let prob = fixture(name);
        out.push((
            format!("{name} objective"),
            prob.objective.clone(),
            prob.n,
            prob.m,
        ));
        for (i, c) in prob.constraints.iter().enumerate() {
            out.push((format!("{name} row {}", i + 1), c.clone(), prob.n, prob.m));
        }
    }
    for text in [
        "exp(x1*y1) - sin(y2)",
        "log(2 + y1^2) * cos(x2)",
        "sqrt(3 + x1^2 + y2^2) / (2 + y1)",
        "(x1 - y1)^3 * y2 + x2^-2 * 0",
        "x1*x2*y1*y2 - (y1 + x2)^4",
    ] {
        out.push((text.to_string(), parse_expr(text).unwrap(), 2, 2));
    }
    out
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let exprs = fixture_expressions();
    for (name, e, n, m) in &exprs {
        let wrt: Vec<Var> = (0..*n).map(Var::X).chain((0..*m).map(Var::Y)).collect();
        let eval = |z: &[f64]| e.eval(&z[..*n], &z[*n..]).expect("finite value");
        let mut done = 0;
        while done < 200 {
            let z: Vec<f64> = (0..n + m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if z[..*n].iter().any(|v| v.abs() < 0.1) {
                continue;
            }
            let g = grad(e, &z[..*n], &z[*n..], &wrt).map_err(|err| format!("{name}: {err}"))?;
            for (i, gi) in g.iter().enumerate() {
                let fd = central_difference(eval, &z, i, 1e-5);
                let rel = (gi - fd).abs() / fd.abs().max(1.0);
                worst = worst.max(rel);
                ensure(rel <= 1e-6, || {
                    format!("{name} at {z:?}, coordinate {i}: {gi} vs {fd}")
                })?;
            }
            done += 1;
        }
    }
    Ok(format!(
        "{} expressions x 200 points, max relative error {worst:.1e}",
        exprs.len()
    ))
}

fn criterion_9() -> Outcome {
    let cfg = AnalysisConfig::default();
    let results: Vec<Result<(usize, usize), String>> = CORPUS
        .par_iter()
        .map(|name| {
            let prob = fixture(name);
            let model = SmoothModel::new(&prob).map_err(|e| format!("{name}: {e}"))?;
            let (mut certified, mut runs) = (0, 0);
            for u in [1.0, -1.0, 0.0] {
                let analysis = DirectionalAnalysis::compute(&prob, &[0.0], &[u], &cfg)
                    .map_err(|e| format!("{name} u={u}: {e}"))?;
                let Some(variant) = select_variant(&analysis) else {
                    continue;
                };
                runs += 1;
                let suff = lipschitz_sufficient_from(&model, &analysis, variant, &cfg.engine)
                    .map_err(|e| format!("{name} u={u}: {e}"))?;
                if suff == SufficientVerdict::Certified {
                    certified += 1;
                    ensure(
                        !matches!(analysis.lipschitz, LipschitzVerdict::NotLipschitz { .. }),
                        || format!("{name} u={u}: certified but the oracle says NotLipschitz"),
                    )?;
                }
            }
            Ok((certified, runs))
        })
        .collect();
    let (mut certified, mut runs) = (0, 0);
    for r in results {
        let (c, n) = r?;
        certified += c;
        runs += n;
    }
    Ok(format!(
        "{runs} fixture directions, {certified} certified, none contradicted by the oracle"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "cube-root example, exact cones and multiplier sets",
            criterion_1,
        ),
        ("cube-root example, oracle path", criterion_2),
        ("directional Danskin", criterion_3),
        (
            "zero-direction collapse to classical multipliers",
            criterion_4,
        ),
        (
            "Clarke estimate inside the Lagrangian gradient hull",
            criterion_5,
        ),
        (
            "Lipschitz characterization on analytic functions",
            criterion_6,
        ),
        (
            "directional normal cones and projections on random polyhedra",
            criterion_7,
        ),
        (
            "forward-mode gradients against central differences",
            criterion_8,
        ),
        (
            "soundness of the sufficient condition on the corpus",
            criterion_9,
        ),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {title} [{secs:.1}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {title} [{secs:.1}s] {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
