use fracmin::geometry::{AffineGraph, Cone, ConeTrace, Graph};
use fracmin::operators::{nmc_graph, QuadratureConfig};
use fracmin::{FractionalParams, Kernel};
use proptest::prelude::*;

fn params(s: f64) -> FractionalParams {
    FractionalParams::new(1, s).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn kernel_is_odd_and_increasing(s in 0.05f64..0.95, r in 0.0f64..50.0, dr in 1e-3f64..5.0) {
        let k = Kernel::with_defaults(params(s)).unwrap();
        prop_assert_eq!(k.f(-r), -k.f(r));
        prop_assert!(k.f(r + dr) > k.f(r));
        prop_assert!(k.f(r).abs() < k.f_infinity());
    }

    #[test]
    fn affine_graphs_have_zero_curvature(s in 0.1f64..0.9, p in -3.0f64..3.0, c in -2.0f64..2.0, x in -2.0f64..2.0) {
        let u = AffineGraph::new(vec![p], c);
        let r = nmc_graph(&u, &[x], &params(s), &QuadratureConfig::default()).unwrap();
        prop_assert!(r.value.abs() <= 1e-12, "{}", r.value);
    }

    #[test]
    fn cones_are_homogeneous(pos in -2.0f64..2.0, neg in -2.0f64..2.0, t in 0.25f64..4.0) {
        let u = Cone::graph(ConeTrace::line(pos, neg)).unwrap();
        for x in [-1.3, 0.7, 2.0] {
            let a = u.value(&[t * x]).unwrap();
            prop_assert!((a - t * u.value(&[x]).unwrap()).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn reflecting_the_graph_flips_the_curvature(s in 0.2f64..0.8, pos in -2.0f64..2.0, neg in -2.0f64..2.0) {
        prop_assume!((pos - neg).abs() > 0.05);
        let q = QuadratureConfig::default();
        let u = Cone::graph(ConeTrace::line(pos, neg)).unwrap();
        let minus = Cone::graph(ConeTrace::line(-pos, -neg)).unwrap();
        let a = nmc_graph(&u, &[1.0], &params(s), &q).unwrap();
        let b = nmc_graph(&minus, &[1.0], &params(s), &q).unwrap();
        prop_assert!((a.value + b.value).abs() <= a.total_error() + b.total_error());
    }
}
