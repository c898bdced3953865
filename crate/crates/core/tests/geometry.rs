use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use fracmin::geometry::io::{read_binary, read_csv, write_binary, write_csv};
use fracmin::geometry::*;

fn abs_grid(h: f64, half_width: f64) -> GraphFunction {
    GraphFunction::from_fn(vec![0.0], half_width, h, Extension::Homogeneous(ConeTrace::line(1.0, -1.0)), |x| {
        x[0].abs()
    })
    .unwrap()
}

#[test]
fn homogeneous_extension_continues_the_cone() {
    let u = abs_grid(1.0 / 16.0, 2.0);
    for x in [4.0, -4.0, 7.3, -100.0] {
        assert_eq!(u.value(&[x]).unwrap(), x.abs());
    }
    let trace = ConeTrace::circle_from_fn(64, |phi| 1.0 + 0.25 * phi.cos());
    let cone = Cone::graph(trace.clone()).unwrap();
    let u = GraphFunction::sample(&cone, vec![0.0, 0.0], 1.0, 0.125, Extension::Homogeneous(trace)).unwrap();
    for p in [[2.0, 0.0], [0.0, -2.0], [1.4142, 1.4142], [-3.0, 0.5]] {
        assert!((u.value(&p).unwrap() - cone.value(&p).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn line_cone_values() {
    let c = Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap();
    assert_eq!(c.value(&[0.5]).unwrap(), 0.5);
    assert_eq!(c.value(&[-0.5]).unwrap(), 0.5);
    let c = Cone::graph(ConeTrace::line(2.0, 1.0)).unwrap();
    assert_eq!(c.value(&[-3.0]).unwrap(), -3.0);
    assert_eq!(c.value(&[3.0]).unwrap(), 6.0);
}

#[test]
fn interpolation_is_exact_for_affine_data() {
    let (p, c) = ([0.7, -1.3], 0.4);
    let ext = Extension::Affine { slope: p.to_vec(), offset: c };
    let u = GraphFunction::from_fn(vec![0.0, 0.0], 1.0, 0.25, ext, |x| p[0] * x[0] + p[1] * x[1] + c).unwrap();
    for x in [[0.13, -0.91], [0.999, 0.5], [-0.3, 0.77], [3.0, -5.0]] {
        let exact = p[0] * x[0] + p[1] * x[1] + c;
        assert!((u.value(&x).unwrap() - exact).abs() < 1e-13);
    }
}

#[test]
fn rescaling_an_affine_graph() {
    let (p, c) = (0.6, 1.5);
    let u = GraphFunction::from_fn(
        vec![0.0],
        2.0,
        1.0 / 16.0,
        Extension::Affine { slope: vec![p], offset: c },
        |x| p * x[0] + c,
    )
    .unwrap();
    for r in [0.5, 2.0, 8.0] {
        let ur = rescale(&u, r, None).unwrap();
        for y in [-0.9, -0.1, 0.0, 0.33, 5.0] {
            assert!((ur.value(&[y]).unwrap() - (p * y + c / r)).abs() < 1e-12, "r={r} y={y}");
        }
    }
}

#[test]
fn cones_are_fixed_points_of_rescaling() {
    let u = abs_grid(1.0 / 16.0, 2.0);
    for r in [0.5, 4.0] {
        let ur = rescale(&u, r, Some(1.0 / 16.0)).unwrap();
        for k in 0..ur.len() {
            let x = ur.node(k);
            assert!((ur.samples()[k] - x[0].abs()).abs() < 1e-12);
        }
    }
}

#[test]
fn lipschitz_constant_is_scale_invariant() {
    let u = FnGraph::new(1, |x: &[f64]| x[0].abs() + 0.3 * (2.0 * x[0]).sin());
    let region = Region::Box { lower: vec![-1.0], upper: vec![1.0] };
    let base = lipschitz_constant(&u, &region, 1.0 / 64.0).unwrap();
    // the constant of u_r on B/r equals the constant of u on B
    for r in [0.5, 2.0] {
        let ur = FnGraph::new(1, move |y: &[f64]| (r * y[0]).abs() / r + 0.3 * (2.0 * r * y[0]).sin() / r);
        let lr = lipschitz_constant(&ur, &region.scaled(1.0 / r), 1.0 / (64.0 * r)).unwrap();
        assert!((lr - base).abs() < 1e-9, "r={r}: {lr} vs {base}");
    }
    let abs = Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap();
    let annulus = Region::Annulus { center: vec![0.0], inner: 1.0, outer: 2.0 };
    assert!((lipschitz_constant(&abs, &annulus, 1.0 / 32.0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn blowup_away_from_the_kink_is_linear() {
    let u = abs_grid(1.0 / 16.0, 4.0);
    let v = blowup_at(&u, &[1.0], 0.1, 5.0, 0.25).unwrap();
    for k in 0..v.len() {
        let x = v.node(k);
        assert!((v.samples()[k] - x[0]).abs() < 1e-12, "x={}", x[0]);
    }
    // at the apex the blow-up is the cone itself
    let v = blowup_at(&u, &[0.0], 0.5, 2.0, 0.25).unwrap();
    for k in 0..v.len() {
        assert!((v.samples()[k] - v.node(k)[0].abs()).abs() < 1e-12);
    }
}

#[test]
fn grid_files_round_trip_exactly() {
    let u = GraphFunction::from_fn(vec![0.1, -0.2], 1.0, 0.125, Extension::LinearGrowth { m: 3.0 }, |x| {
        (x[0] * 3.1).sin() * x[1].exp() / 7.0
    })
    .unwrap();
    let mut buf = vec![];
    write_csv(&u, &mut buf).unwrap();
    assert_eq!(read_csv(&buf[..]).unwrap(), u);
    let mut buf = vec![];
    write_binary(&u, &mut buf).unwrap();
    assert_eq!(read_binary(&buf[..]).unwrap(), u);
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(GraphFunction::new(vec![0.0], 1.0, 0.3, vec![0.0; 7], Extension::LinearGrowth { m: 1.0 }).is_err());
    assert!(GraphFunction::new(vec![0.0], 1.0, 0.5, vec![0.0; 4], Extension::LinearGrowth { m: 1.0 }).is_err());
    let mut s = vec![0.0; 5];
    s[2] = f64::NAN;
    assert!(GraphFunction::new(vec![0.0], 1.0, 0.5, s, Extension::LinearGrowth { m: 1.0 }).is_err());
    let u = GraphFunction::new(vec![0.0], 1.0, 0.5, vec![0.0; 5], Extension::LinearGrowth { m: 1.0 }).unwrap();
    assert!(matches!(u.value(&[3.0]), Err(fracmin::Error::Unsupported(_))));
}

#[test]
fn rotation_by_zero_is_the_identity() {
    let r = RotationTheta::from_slope(0.0).unwrap();
    for p in [[1.0, 2.0, 3.0], [-0.5, 0.0, 7.0]] {
        assert_eq!(r.apply(&p), p.to_vec());
    }
}

#[test]
fn flat_split_cone_rotates_to_a_half_space() {
    let flat = SplitCone::new(Arc::new(AffineGraph::new(vec![0.0], 0.0)), 1.0).unwrap();
    let theta = RotationTheta::from_slope(1.0).unwrap();
    assert!((theta.theta() - FRAC_PI_4).abs() < 1e-15);
    let rotated = rotate_cone(&flat, theta).unwrap();
    let half = HalfSpace::new(vec![0.0, 0.0, 1.0], 0.0).unwrap();
    for k in 0..200 {
        let y = [((k * 7) as f64 * 0.31).sin() * 3.0, ((k * 3) as f64 * 0.17).cos() * 2.0, ((k as f64) * 0.77).sin()];
        if y[2].abs() < 1e-9 {
            continue;
        }
        assert_eq!(rotated.contains(&y).unwrap(), half.contains(&y).unwrap(), "{y:?}");
    }
}

#[test]
fn rotation_requires_a_homogeneous_v_star() {
    let not_cone = SplitCone::new(Arc::new(AffineGraph::new(vec![1.0], 0.5)), 0.0).unwrap();
    let err = rotate_cone(&not_cone, RotationTheta::new(0.0).unwrap()).unwrap_err();
    assert!(matches!(err, fracmin::Error::Precondition(_)));
}
