use fracmin::analysis::fixtures;
use fracmin::geometry::{ConeTrace, Extension, Graph, GraphFunction};
use fracmin::operators::nmc_graph;
use fracmin::solver::*;
use fracmin::{Error, FractionalParams};

fn params() -> FractionalParams {
    FractionalParams::new(1, 0.5).unwrap()
}

fn line_exterior(pos: f64, neg: f64, h: f64) -> GraphFunction {
    GraphFunction::from_fn(vec![0.0], 2.0, h, Extension::Homogeneous(ConeTrace::line(pos, neg)), |x| {
        if x[0] >= 0.0 {
            pos * x[0]
        } else {
            neg * x[0]
        }
    })
    .unwrap()
}

fn solve(ext: &GraphFunction) -> Result<(GraphFunction, SolveReport), Error> {
    let interior = InteriorBox::cube(1, 1.0).unwrap();
    solve_dirichlet(ext, &interior, &params(), &fixtures::solver_quadrature(), &fixtures::solver_config())
}

#[test]
fn affine_exterior_is_reproduced() {
    let (p, c) = (0.5, 0.25);
    let ext = GraphFunction::from_fn(
        vec![0.0],
        2.0,
        1.0 / 16.0,
        Extension::Affine { slope: vec![p], offset: c },
        |x| p * x[0] + c,
    )
    .unwrap();
    let (u, rep) = solve(&ext).unwrap();
    let tol = fixtures::solver_config().residual_tol;
    assert!(rep.converged && rep.iterations <= 1, "{rep:?}");
    for k in 0..u.len() {
        let x = u.node(k)[0];
        assert!((u.samples()[k] - (p * x + c)).abs() <= 10.0 * tol);
    }
}

#[test]
fn abs_exterior_solution_is_even_lies_above_and_refines() {
    let (ext, interior) = fixtures::abs_exterior(1.0 / 16.0).unwrap();
    let cfg = fixtures::solver_config();
    let q = fixtures::solver_quadrature();
    let (coarse, rep) = solve_dirichlet(&ext, &interior, &params(), &q, &cfg).unwrap();
    assert!(rep.converged);
    // the residual decreases monotonically once the transient is over
    for w in rep.residual_history[10..].windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{w:?}");
    }
    for k in 0..coarse.len() {
        let x = coarse.node(k)[0];
        let mirror = coarse.value(&[-x]).unwrap();
        assert!((coarse.samples()[k] - mirror).abs() < 1e-9, "x={x}");
        // the nonlocal minimizer bridges over the kink
        if x.abs() < 1.0 - 1e-9 {
            assert!(coarse.samples()[k] > x.abs(), "x={x}");
        }
    }
    assert!(coarse.value(&[0.0]).unwrap() > 1.5);
    let wall = rep.wall_residual.unwrap();
    assert!(wall <= rep.final_residual());

    let (ext2, _) = fixtures::abs_exterior(1.0 / 32.0).unwrap();
    let (fine, rep2) = solve_dirichlet(&ext2, &interior, &params(), &q, &cfg).unwrap();
    assert!(rep2.converged);
    let h = 1.0 / 16.0;
    let change = (0..coarse.len())
        .map(|k| (coarse.samples()[k] - fine.value(&coarse.node(k)).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(change <= 2.0 * h, "grid change {change}");
}

#[test]
fn comparison_principle_on_ordered_cones() {
    let h = 1.0 / 8.0;
    let tol = fixtures::solver_config().residual_tol;
    // (pos, neg): u₁ ≥ u₂ everywhere iff pos₁ ≥ pos₂ and neg₁ ≤ neg₂
    let pairs = [
        ((1.0, -1.0), (0.5, -0.5)),
        ((1.0, -1.0), (1.0, -0.5)),
        ((1.5, -1.0), (1.0, -1.0)),
        ((0.5, -0.5), (0.0, 0.0)),
        ((1.0, 0.0), (0.5, 0.0)),
    ];
    for ((p1, n1), (p2, n2)) in pairs {
        let (u1, r1) = solve(&line_exterior(p1, n1, h)).unwrap();
        let (u2, r2) = solve(&line_exterior(p2, n2, h)).unwrap();
        assert!(r1.converged && r2.converged);
        for k in 0..u1.len() {
            assert!(u1.samples()[k] >= u2.samples()[k] - 10.0 * tol, "({p1},{n1}) vs ({p2},{n2}) at node {k}");
        }
    }
}

#[test]
fn vertical_shifts_commute_with_the_solve() {
    let h = 1.0 / 8.0;
    // affine outside [-1.5, 1.5], so the extension can be shifted exactly
    let data = |shift: f64| {
        GraphFunction::from_fn(
            vec![0.0],
            2.0,
            h,
            Extension::Affine { slope: vec![0.3], offset: shift },
            move |x| {
                let t = x[0] / 1.5;
                let bump = if t.abs() < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 };
                0.3 * x[0] + 2.0 * bump + shift
            },
        )
        .unwrap()
    };
    let shift = 0.75;
    let (u, ru) = solve(&data(0.0)).unwrap();
    let (v, rv) = solve(&data(shift)).unwrap();
    assert!(ru.converged && rv.converged);
    let gap = (0..u.len()).map(|k| (v.samples()[k] - u.samples()[k] - shift).abs()).fold(0.0, f64::max);
    // the operator sees differences only; the iterates agree to round-off
    assert!(gap <= 1e-12, "gap {gap}");
}

#[test]
fn large_damping_is_reported_as_divergence() {
    let (ext, interior) = fixtures::abs_exterior(1.0 / 16.0).unwrap();
    let cfg = SolveConfig { damping: 10.0 * STABLE_DAMPING, ..SolveConfig::default() };
    match solve_dirichlet(&ext, &interior, &params(), &fixtures::solver_quadrature(), &cfg) {
        Err(Error::Divergence { report }) => {
            assert!(!report.converged);
            assert!(report.iterations <= 2 * STALL_WINDOW, "{}", report.iterations);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn iteration_budget_is_respected() {
    let (ext, interior) = fixtures::abs_exterior(1.0 / 16.0).unwrap();
    let cfg = SolveConfig { max_iters: 5, ..SolveConfig::default() };
    let (_, rep) = solve_dirichlet(&ext, &interior, &params(), &fixtures::solver_quadrature(), &cfg).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations, 5);
    assert_eq!(rep.residual_history.len(), 6);
}

#[test]
fn flat_cones_are_fixed_points() {
    let q = fixtures::solver_quadrature();
    let (t, rep) =
        solve_cone(&ConeTrace::line(0.5, 0.5), &ConeConstraint::Free, &params(), &q, &SolveConfig::default()).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 0);
    assert_eq!(rep.wall_residual, None);
    assert_eq!(t, ConeTrace::line(0.5, 0.5));
}

#[test]
fn free_cone_relaxation_flattens_abs() {
    let q = fixtures::solver_quadrature();
    let cfg = SolveConfig::default();
    let (t, rep) = solve_cone(&ConeTrace::line(1.0, -1.0), &ConeConstraint::Free, &params(), &q, &cfg).unwrap();
    let ConeTrace::Line { pos, neg } = t else { panic!("line trace expected") };
    assert!((pos - neg).abs() < 0.05, "({pos}, {neg}) after {} iterations", rep.iterations);
    // the flattened cone has (numerically) zero curvature
    let cone = fracmin::geometry::Cone::graph(ConeTrace::line(pos, neg)).unwrap();
    let r = nmc_graph(&cone, &[1.0], &params(), &q).unwrap();
    assert!(r.value.abs() < 0.05);
}

#[test]
fn pinned_cone_relaxes_to_the_pinned_slope() {
    let q = fixtures::solver_quadrature();
    let cfg = SolveConfig::default();
    let fixed = ConeConstraint::Fixed(vec![true, false]);
    let (t, rep) = solve_cone(&ConeTrace::line(1.0, -1.0), &fixed, &params(), &q, &cfg).unwrap();
    let ConeTrace::Line { pos, neg } = t else { panic!("line trace expected") };
    assert_eq!(pos, 1.0);
    assert!((neg - 1.0).abs() < 0.05, "neg = {neg} after {} iterations", rep.iterations);
}

#[test]
fn invalid_configurations_are_rejected() {
    let (ext, interior) = fixtures::abs_exterior(1.0 / 16.0).unwrap();
    let q = fixtures::solver_quadrature();
    for cfg in [
        SolveConfig { damping: 0.0, ..SolveConfig::default() },
        SolveConfig { damping: 1.5, ..SolveConfig::default() },
        SolveConfig { max_iters: 0, ..SolveConfig::default() },
        SolveConfig { residual_tol: -1.0, ..SolveConfig::default() },
    ] {
        assert!(matches!(solve_dirichlet(&ext, &interior, &params(), &q, &cfg), Err(Error::Config(_))));
    }
    let wrong = FractionalParams::new(2, 0.5).unwrap();
    assert!(solve_dirichlet(&ext, &interior, &wrong, &q, &SolveConfig::default()).is_err());
}
