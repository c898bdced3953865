mod common;

use fracmin::analysis::{dimension_reduction_oracle, ReductionConfig};
use fracmin::geometry::{AffineGraph, Cone, ConeTrace, Extension, FnGraph, Graph, GraphFunction};
use fracmin::operators::{nmc_graph, nmc_linearized, nmc_linearized_pv, GraphOperator, QuadratureConfig};
use fracmin::FractionalParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(n: usize, s: f64) -> FractionalParams {
    FractionalParams::new(n, s).unwrap()
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn bump_prime(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let q = 1.0 - x * x;
        -2.0 * x / (q * q) * bump(x)
    } else {
        0.0
    }
}

/// `u = a x + c·bump(x)`: affine outside `[-1, 1]`.
fn perturbed(a: f64, c: f64) -> (FnGraph, FnGraph) {
    let u = FnGraph::new(1, move |x: &[f64]| a * x[0] + c * bump(x[0])).with_far_field(1.0);
    let du = FnGraph::new(1, move |x: &[f64]| a + c * bump_prime(x[0])).with_far_field(1.0);
    (u, du)
}

#[test]
fn affine_graphs_have_zero_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2] {
        let op = GraphOperator::new(params(n, 0.5), QuadratureConfig::default()).unwrap();
        for _ in 0..4 {
            let slope: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let offset = rng.gen_range(-2.0..2.0);
            let ext = Extension::Affine { slope: slope.clone(), offset };
            let sampled = GraphFunction::from_fn(vec![0.0; n], 1.0, 1.0 / 16.0, ext, |x| {
                slope.iter().zip(x).map(|(p, v)| p * v).sum::<f64>() + offset
            })
            .unwrap();
            let exact = AffineGraph::new(slope.clone(), offset);
            for _ in 0..5 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
                for u in [&sampled as &dyn Graph, &exact] {
                    let rep = op.nmc(u, &x).unwrap();
                    assert_eq!(rep.value, 0.0, "slope {slope:?} at {x:?}");
                    assert!(rep.value.abs() <= rep.total_error());
                }
            }
        }
    }
}

/// `𝓕` of the line cone `(pos, neg)` at `x = 1`. Only `θ > 1` contributes
/// (for `θ < 1` the pair is `F(pos) + F(−pos)`); with `w = θ^{-s}` the
/// integral becomes `(1/s)∫_0^1 [F(pos) + F(a(w))] dw`.
fn cone_oracle(pos: f64, neg: f64, s: f64) -> f64 {
    let f = |r: f64| common::kernel_f(r, 1, s);
    let integrand = |w: f64| {
        let theta = w.powf(-1.0 / s);
        let a = (neg * (1.0 - theta) - pos) / theta;
        f(pos) + f(a)
    };
    common::composite_gl(&integrand, 0.0, 1.0, 64, 10) / s
}

#[test]
fn line_cones_match_the_substitution_oracle() {
    let s = 0.5;
    let oracle = cone_oracle(1.0, -1.0, s);
    // reference value for |x| at x = 1, s = 1/2
    assert!((oracle - 2.015023656720807).abs() < 1e-10, "{oracle}");
    for (pos, neg) in [(1.0, -1.0), (1.0, 0.0), (2.0, 1.0), (0.5, 0.5)] {
        let c = Cone::graph(ConeTrace::line(pos, neg)).unwrap();
        let rep = nmc_graph(&c, &[1.0], &params(1, s), &QuadratureConfig::default()).unwrap();
        let oracle = cone_oracle(pos, neg, s);
        assert!((rep.value - oracle).abs() <= rep.total_error(), "({pos},{neg}): {} vs {oracle}", rep.value);
    }
    // convex cones bend upward: positive curvature
    let abs = Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap();
    assert!(nmc_graph(&abs, &[1.0], &params(1, s), &QuadratureConfig::default()).unwrap().value > 0.0);
}

#[test]
fn cone_curvature_is_minus_s_homogeneous() {
    let s = 0.5;
    let c = Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap();
    let q = QuadratureConfig::default();
    let at1 = nmc_graph(&c, &[1.0], &params(1, s), &q).unwrap();
    for t in [0.5, 3.0] {
        let at_t = nmc_graph(&c, &[t], &params(1, s), &q).unwrap();
        let want = t.powf(-s) * at1.value;
        assert!((at_t.value - want).abs() <= at_t.total_error() + t.powf(-s) * at1.total_error());
    }
}

#[test]
fn apex_is_rejected() {
    let c = Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap();
    let err = nmc_graph(&c, &[0.0], &params(1, 0.5), &QuadratureConfig::default()).unwrap_err();
    assert!(matches!(err, fracmin::Error::Domain(_)));
}

#[test]
fn convex_bump_has_positive_curvature_at_its_minimum() {
    // u = −bump is convex near 0 and affine (zero) outside [-1, 1]
    let (u, _) = perturbed(0.0, -1.0);
    let rep = nmc_graph(&u, &[0.0], &params(1, 0.5), &QuadratureConfig::default()).unwrap();
    assert!(rep.value > rep.total_error(), "{} ± {}", rep.value, rep.total_error());
    let (u, _) = perturbed(0.0, 1.0);
    let rep_c = nmc_graph(&u, &[0.0], &params(1, 0.5), &QuadratureConfig::default()).unwrap();
    assert!((rep.value + rep_c.value).abs() <= rep.total_error() + rep_c.total_error());
}

#[test]
fn rescaling_covariance() {
    let s = 0.5;
    let q = QuadratureConfig::default();
    // homogeneous beyond |x| = 1.5
    let base = |x: f64| x.abs() + 0.2 * bump(2.0 * x - 1.0);
    let u = FnGraph::new(1, move |x: &[f64]| base(x[0])).with_far_field(1.5);
    for r in [0.5, 2.0] {
        let ur = FnGraph::new(1, move |y: &[f64]| base(r * y[0]) / r).with_far_field(1.5 / r);
        for x in [0.3, -0.7] {
            let lhs = nmc_graph(&ur, &[x], &params(1, s), &q).unwrap();
            let rhs = nmc_graph(&u, &[r * x], &params(1, s), &q).unwrap();
            let gap = (lhs.value - r.powf(s) * rhs.value).abs();
            assert!(gap <= 2.0 * (lhs.total_error() + r.powf(s) * rhs.total_error()), "r={r} x={x}: {gap}");
        }
    }
}

/// `∫_ℝ (cos θ + cos(−θ) − 2) |θ|^{-2-s} dθ = 4∫_0^∞ (cos θ − 1) θ^{-2-s} dθ`:
/// a power series on `[0, 1]`, composite
/// Gauss–Legendre on `[1, T]` and an integration-by-parts bound beyond.
fn cosine_oracle(s: f64) -> f64 {
    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..30 {
        fact *= ((2 * k - 1) * (2 * k)) as f64;
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        head += sign / fact / (2.0 * k as f64 - 1.0 - s);
    }
    let t = 4000.0;
    let mid = common::composite_gl(&|th: f64| (th.cos() - 1.0) * th.powf(-2.0 - s), 1.0, t, 4000, 12);
    // ∫_T^∞ cos θ θ^{-2-s} = O(T^{-2-s}); the −1 part is exact
    let tail = -t.powf(-1.0 - s) / (1.0 + s);
    4.0 * (head + mid + tail)
}

#[test]
fn linearization_at_zero_of_cosine() {
    let s = 0.5;
    let zero = AffineGraph::new(vec![0.0], 0.0);
    let v = FnGraph::new(1, |x: &[f64]| x[0].cos());
    let oracle = cosine_oracle(s);
    // the excised ball |θ| < δ is the dominant error term
    for delta in [1e-3, 1e-6] {
        let q = QuadratureConfig { inner_cutoff: delta, ..QuadratureConfig::default() };
        let rep = nmc_linearized(&zero, &v, &[0.0], &params(1, s), &q).unwrap();
        assert!(rep.value < 0.0);
        assert!((rep.value - oracle).abs() <= rep.total_error(), "δ={delta}: {} vs {oracle}", rep.value);
    }
    let q = QuadratureConfig { inner_cutoff: 1e-6, ..QuadratureConfig::default() };
    let rep = nmc_linearized(&zero, &v, &[0.0], &params(1, s), &q).unwrap();
    assert!((rep.value - oracle).abs() < 5e-3, "{} vs {oracle}", rep.value);
}

#[test]
fn linearization_of_constants_vanishes() {
    let (u, _) = perturbed(0.4, 0.7);
    let v = AffineGraph::new(vec![0.0], 3.5);
    for x in [-0.4, 0.0, 0.6, 2.0] {
        let rep = nmc_linearized(&u, &v, &[x], &params(1, 0.5), &QuadratureConfig::default()).unwrap();
        assert_eq!(rep.value, 0.0);
    }
}

#[test]
fn principal_value_form_agrees_with_the_symmetric_form() {
    let q = QuadratureConfig::default();
    let mut cases = 0;
    for (a, c) in [(0.3, 0.8), (-0.5, 1.2)] {
        let (u, du) = perturbed(a, c);
        let w = FnGraph::new(1, |x: &[f64]| bump(0.7 * x[0] - 0.1)).with_far_field(2.0);
        for (x, v) in [(0.1, &du as &dyn Graph), (-0.45, &du), (0.7, &w), (0.0, &w), (1.3, &du)] {
            let p = params(1, 0.5);
            let sym = nmc_linearized(&u, v, &[x], &p, &q).unwrap();
            let pv = nmc_linearized_pv(&u, v, &[x], &p, &q).unwrap();
            let gap = (sym.value - pv.value).abs();
            assert!(gap <= sym.total_error() + pv.total_error(), "x={x}: {} vs {}", sym.value, pv.value);
            cases += 1;
        }
    }
    assert_eq!(cases, 10);
}

#[test]
fn difference_quotients_converge_to_the_linearization() {
    let p = params(1, 0.5);
    let q = QuadratureConfig { radial_tol: 1e-13, ..QuadratureConfig::default() };
    let steps = [1e-2, 5e-3, 2.5e-3];
    for (a, c, x0) in [(0.3, 2.0, 0.2), (-0.5, 1.0, -0.3), (1.0, -1.5, 0.45)] {
        let (u, du) = perturbed(a, c);
        let f0 = nmc_graph(&u, &[x0], &p, &q).unwrap().value;
        let lin = nmc_linearized(&u, &du, &[x0], &p, &q).unwrap().value;
        // 𝓕 integrates over a hemisphere of pairs, 𝓛 over the full space:
        // d/dx 𝓕 = 𝓛/2
        let errs: Vec<f64> = steps
            .iter()
            .map(|h| {
                let f1 = nmc_graph(&u, &[x0 + h], &p, &q).unwrap().value;
                (2.0 * (f1 - f0) / h - lin).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.0, "a={a} c={c}: errors {errs:?}");
        }
    }
}

#[test]
fn slab_integral_is_minus_the_curvature() {
    let s = 0.5;
    let p = params(1, s);
    let (a, c, x0) = (0.3, 0.6, 0.2);
    let (u, du) = perturbed(a, c);
    let (u0, slope) = (u.value(&[x0]).unwrap(), du.value(&[x0]).unwrap());
    let tangent = AffineGraph::new(vec![slope], u0 - slope * x0);
    let cfg = ReductionConfig::default();
    let rec = dimension_reduction_oracle(&u, &tangent, &[x0], &p, 200_000, 7, &cfg).unwrap();
    let curv = nmc_graph(&u, &[x0], &p, &QuadratureConfig::default()).unwrap();
    let gap = (rec.f_form_value + curv.value).abs();
    assert!(gap <= rec.f_form_error + rec.tail_bound + curv.total_error(), "{} vs {}", rec.f_form_value, curv.value);
    assert!(rec.discrepancy <= 3.0 * rec.slab_std_error + rec.f_form_error, "{} σ", rec.sigmas());
}
