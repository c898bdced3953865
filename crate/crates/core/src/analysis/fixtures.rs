//! Shipped fixtures shared by the verification suites, the CLI and the tests.

use std::sync::Arc;

use crate::geometry::{Cone, ConeTrace, Extension, FnGraph, Graph, GraphFunction};
use crate::operators::{QuadratureConfig, RadialMode};
use crate::solver::{InteriorBox, SolveConfig};
use crate::Result;

use super::BoundFixture;

/// `u(x) = |x|` on ℝ.
pub fn abs_cone() -> Result<Cone> {
    Cone::graph(ConeTrace::line(1.0, -1.0))
}

/// The degree-zero derivative of `|x|`: `+1` for `x > 0`, `−1` for `x < 0`.
pub fn abs_cone_derivative() -> Result<Cone> {
    Cone::new(ConeTrace::line(1.0, 1.0), 0)
}

/// Exterior data `|x|` on `[-2, 2]` (homogeneous outside) with the unknowns
/// in `(-1, 1)`.
pub fn abs_exterior(h: f64) -> Result<(GraphFunction, InteriorBox)> {
    let ext =
        GraphFunction::from_fn(vec![0.0], 2.0, h, Extension::Homogeneous(ConeTrace::line(1.0, -1.0)), |x| x[0].abs())?;
    Ok((ext, InteriorBox::cube(1, 1.0)?))
}

/// Quadrature used by the solver fixtures: one Gauss–Kronrod rule per panel.
pub fn solver_quadrature() -> QuadratureConfig {
    QuadratureConfig { radial_mode: RadialMode::Fixed, ..Default::default() }
}

pub fn solver_config() -> SolveConfig {
    SolveConfig::default()
}

/// Three smooth fixtures and, optionally, `|x|` declared smooth (a kink at
/// the center of its evaluation points).
pub fn bound_fixtures(include_nonsmooth: bool) -> Vec<BoundFixture> {
    let smooth: Vec<(&str, Arc<dyn Graph>, Vec<f64>)> = vec![
        ("sine", Arc::new(FnGraph::new(1, |x| 0.3 * (2.0 * x[0]).sin() + 0.1 * x[0])), vec![0.3]),
        ("gaussian-bump", Arc::new(FnGraph::new(1, |x| 0.4 * x[0] + 0.5 * (-x[0] * x[0]).exp())), vec![-0.2]),
        (
            "planar-bump",
            Arc::new(FnGraph::new(2, |x| 0.3 * x[0] - 0.2 * x[1] + 0.4 * (-(x[0] * x[0] + x[1] * x[1])).exp())),
            vec![0.2, -0.1],
        ),
    ];
    let mut out: Vec<BoundFixture> = smooth
        .into_iter()
        .map(|(name, graph, center)| BoundFixture { name: name.into(), graph, center, apex: None })
        .collect();
    if include_nonsmooth {
        out.push(BoundFixture {
            name: "abs-kink".into(),
            graph: Arc::new(FnGraph::new(1, |x| x[0].abs())),
            center: vec![0.0],
            apex: None,
        });
    }
    out
}
