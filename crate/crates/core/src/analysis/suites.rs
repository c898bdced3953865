//! Verification suites: each runs a fixed set of property checks on shipped
//! fixtures and reports measured values against pinned thresholds.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fixtures;
use super::*;
use crate::geometry::{
    rescale, rotate_cone, Cone, ConeTrace, Exterior, Extension, FnGraph, Graph, GraphFunction, HalfSpace,
    MembershipPredicate, Omega, RotationTheta, SplitCone, VoxelGrid, VoxelSet,
};
use crate::operators::{
    interaction, mean_curvature_set, nmc_graph, s_perimeter, GraphOperator, QuadratureConfig, SetQuadrature,
};
use crate::solver::solve_dirichlet;
use crate::{Error, FractionalParams, Result};

/// Required weighted share of strictly negative certificate nodes.
pub const MIN_NEGATIVE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Scaling,
    MaxPrinciple,
    DimensionReduction,
    Blowdown,
    ProductStructure,
    AppendixBounds,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Scaling,
        Suite::MaxPrinciple,
        Suite::DimensionReduction,
        Suite::Blowdown,
        Suite::ProductStructure,
        Suite::AppendixBounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Scaling => "scaling",
            Suite::MaxPrinciple => "max-principle",
            Suite::DimensionReduction => "dimension-reduction",
            Suite::Blowdown => "blowdown",
            Suite::ProductStructure => "product-structure",
            Suite::AppendixBounds => "appendix-bounds",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::config(format!("unknown suite {s:?} (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub s: f64,
    pub seed: u64,
    pub mc_samples: usize,
    /// Adds `|x|`, declared smooth, to the bound fixtures (expected to fail).
    pub include_nonsmooth: bool,
    /// Node spacing of the bound suite (halved once).
    pub bound_spacing: f64,
    /// Grid spacing of the `|x|` solver fixture used by the blow-down suite.
    pub solver_spacing: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            s: 0.5,
            seed: 20240917,
            mc_samples: 1_000_000,
            include_nonsmooth: false,
            bound_spacing: 1.0 / 32.0,
            solver_spacing: 1.0 / 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
}

impl PropertyCheck {
    /// Passes when `measured ≤ threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: measured <= threshold, measured, threshold }
    }

    /// Passes when `measured ≥ threshold`.
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: measured >= threshold, measured, threshold }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), passed: ok, measured: f64::from(u8::from(ok)), threshold: 1.0 }
    }

    /// Signed distance to the threshold, positive when passing.
    pub fn margin(&self) -> f64 {
        if self.passed {
            (self.threshold - self.measured).abs()
        } else {
            -(self.threshold - self.measured).abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub properties: Vec<PropertyCheck>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn first_failure(&self) -> Option<&PropertyCheck> {
        self.properties.iter().find(|p| !p.passed)
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let properties = match suite {
        Suite::Scaling => scaling(opts)?,
        Suite::MaxPrinciple => max_principle(opts)?,
        Suite::DimensionReduction => dimension_reduction(opts)?,
        Suite::Blowdown => blowdown(opts)?,
        Suite::ProductStructure => product_structure()?,
        Suite::AppendixBounds => bounds(opts)?,
    };
    Ok(SuiteOutcome { suite, properties })
}

fn scaling(opts: &SuiteOptions) -> Result<Vec<PropertyCheck>> {
    let s = opts.s;
    let set_params = FractionalParams::new(1, s)?;
    let quad = SetQuadrature::default();
    let mut out = vec![];

    // two disjoint blobs on a 12×12 grid
    let grid = VoxelGrid::cube(2, -1.0, 1.0, 12)?;
    let x = VoxelSet::from_fn(grid.clone(), Exterior::Empty, |p| (p[0] + 0.4).powi(2) + p[1] * p[1] < 0.2)?;
    let y = VoxelSet::from_fn(grid.clone(), Exterior::Empty, |p| p[0] > 0.2 && p[1].abs() < 0.6)?;
    let base = interaction(&x, &y, &set_params, &quad)?;
    for r in [0.5, 2.0] {
        let scaled = interaction(&x.scaled(r)?, &y.scaled(r)?, &set_params, &quad)?;
        let factor = r.powf(2.0 - s);
        out.push(PropertyCheck::at_most(
            format!("interaction scales as r^(N-s), r = {r}"),
            (scaled.value - factor * base.value).abs(),
            2.0 * (scaled.error + factor * base.error) + 1e-12 * scaled.value.abs(),
        ));
    }

    let grid = VoxelGrid::cube(2, -1.5, 1.5, 24)?;
    let half = VoxelSet::from_exterior(grid, Exterior::HalfSpace { normal: vec![0.0, 1.0], offset: 0.0 })?;
    let omega = Omega::Ball { center: vec![0.0, 0.0], radius: 1.0 };
    let base = s_perimeter(&half, &omega, &set_params, &quad)?;
    for r in [0.5, 2.0] {
        let scaled = s_perimeter(&half.scaled(r)?, &omega.scaled(r), &set_params, &quad)?;
        let factor = r.powf(2.0 - s);
        out.push(PropertyCheck::at_most(
            format!("s-perimeter scales as r^(N-s), r = {r}"),
            (scaled.value - factor * base.value).abs(),
            2.0 * (scaled.total_error() + factor * base.total_error()),
        ));
    }

    let grid = VoxelGrid::cube(2, -2.0, 2.0, 64)?;
    let disk = VoxelSet::from_fn(grid, Exterior::Empty, |p| p[0] * p[0] + p[1] * p[1] < 1.0)?;
    let point = [1.0 + 1.0 / 32.0, 1.0 / 64.0];
    let base = mean_curvature_set(&disk, &point, &set_params, &quad)?;
    for r in [0.5, 2.0] {
        let q = SetQuadrature { inner_cutoff: r * quad.inner_cutoff, ..quad };
        let p: Vec<f64> = point.iter().map(|v| r * v).collect();
        let scaled = mean_curvature_set(&disk.scaled(r)?, &p, &set_params, &q)?;
        let factor = r.powf(-s);
        out.push(PropertyCheck::at_most(
            format!("set curvature scales as r^(-s), r = {r}"),
            (scaled.value - factor * base.value).abs(),
            2.0 * (scaled.total_error() + factor * base.total_error()) + 1e-12 * scaled.value.abs(),
        ));
    }

    let params = FractionalParams::new(1, s)?;
    let gq = QuadratureConfig::default();
    let u = GraphFunction::from_fn(vec![0.0], 4.0, 1.0 / 16.0, Extension::Homogeneous(ConeTrace::line(1.0, -1.0)), |x| {
        x[0].abs()
    })?;
    for r in [0.5, 2.0] {
        let ur = rescale(&u, r, None)?;
        let lhs = nmc_graph(&ur, &[1.0], &params, &gq)?;
        let rhs = nmc_graph(&u, &[r], &params, &gq)?;
        let factor = r.powf(s);
        out.push(PropertyCheck::at_most(
            format!("graph curvature covariance F[u_r](x) = r^s F[u](rx), r = {r}"),
            (lhs.value - factor * rhs.value).abs(),
            2.0 * (lhs.total_error() + factor * rhs.total_error()),
        ));
    }
    Ok(out)
}

fn max_principle(opts: &SuiteOptions) -> Result<Vec<PropertyCheck>> {
    let params = FractionalParams::new(1, opts.s)?;
    let quad = QuadratureConfig::default();
    let cfg = CertificateConfig::default();
    let u = fixtures::abs_cone()?;
    let v = fixtures::abs_cone_derivative()?;
    let cert = check_max_principle(&u, &v, &params, &quad, &cfg)?;
    let mut out = vec![
        PropertyCheck::flag("certificate holds for |x| with v = u'", cert.verdict == Verdict::CertificateHolds),
        PropertyCheck::at_most("largest integrand sample <= node tolerance", cert.max_sample(), cert.tolerance),
        PropertyCheck::at_least(
            "weighted fraction of strictly negative nodes",
            cert.fraction_strictly_negative,
            MIN_NEGATIVE_FRACTION,
        ),
    ];
    let lin = GraphOperator::new(params, quad)?.linearized(&u, &v, &cert.argmax)?;
    out.push(PropertyCheck::at_most(
        "independent L_u[v](argmax) + error < 0",
        lin.value + lin.total_error(),
        -f64::MIN_POSITIVE,
    ));

    let scaled_v = Cone::new(ConeTrace::line(3.0, 3.0), 0)?;
    let scaled = check_max_principle(&u, &scaled_v, &params, &quad, &cfg)?;
    let worst = cert
        .samples
        .iter()
        .zip(&scaled.samples)
        .map(|(a, b)| (b.value - 3.0 * a.value).abs())
        .fold(0.0, f64::max);
    out.push(PropertyCheck::flag(
        "argmax and verdict invariant under v -> 3v",
        scaled.argmax_index == cert.argmax_index && scaled.verdict == cert.verdict,
    ));
    out.push(PropertyCheck::at_most("samples scale with v", worst, 1e-12 * cert.max_sample().abs().max(1.0)));

    let plane = Cone::graph(ConeTrace::line(0.7, 0.7))?;
    let slope = Cone::new(ConeTrace::line(0.7, -0.7), 0)?;
    let flat = check_max_principle(&plane, &slope, &params, &quad, &cfg)?;
    out.push(PropertyCheck::flag("affine u gives constant v", flat.verdict == Verdict::ConstantV));
    Ok(out)
}

fn dimension_reduction(opts: &SuiteOptions) -> Result<Vec<PropertyCheck>> {
    let params = FractionalParams::new(1, opts.s)?;
    let cfg = ReductionConfig::default();
    let f = FnGraph::new(1, |_| 0.0);
    let g = FnGraph::new(1, |y| (y[0] * y[0]).min(1.0));
    let rec = dimension_reduction_oracle(&f, &g, &[0.0], &params, opts.mc_samples, opts.seed, &cfg)?;
    let mut out = vec![PropertyCheck::at_most(
        "slab Monte Carlo matches the F-form within 3 standard errors",
        rec.discrepancy,
        3.0 * rec.slab_std_error + rec.f_form_error,
    )];
    let swapped = dimension_reduction_oracle(&g, &f, &[0.0], &params, opts.mc_samples, opts.seed, &cfg)?;
    out.push(PropertyCheck::at_most(
        "swapping f and g negates the F-form",
        (swapped.f_form_value + rec.f_form_value).abs(),
        rec.f_form_error + swapped.f_form_error,
    ));
    out.push(PropertyCheck::at_most(
        "swapping f and g negates the slab integral",
        (swapped.slab_value + rec.slab_value).abs(),
        3.0 * (rec.slab_std_error + swapped.slab_std_error),
    ));
    let same = dimension_reduction_oracle(&f, &f, &[0.0], &params, 1000, opts.seed, &cfg)?;
    out.push(PropertyCheck::at_most("f = g gives zero", same.slab_value.abs() + same.f_form_value.abs(), 0.0));
    let wide = ReductionConfig { truncation: 2.0 * cfg.truncation, ..cfg };
    let doubled = dimension_reduction_oracle(&f, &g, &[0.0], &params, 1000, opts.seed, &wide)?;
    out.push(PropertyCheck::at_most(
        "doubling the truncation changes the F-form by less than the tail bound",
        (doubled.f_form_value - rec.f_form_value).abs(),
        rec.tail_bound + rec.f_form_error + doubled.f_form_error,
    ));
    Ok(out)
}

fn blowdown(opts: &SuiteOptions) -> Result<Vec<PropertyCheck>> {
    let cfg = BlowdownConfig::default();
    let radii = [2.0, 4.0, 8.0];
    let mut out = vec![];

    let affine = GraphFunction::from_fn(
        vec![0.0, 0.0],
        2.0,
        0.25,
        Extension::Affine { slope: vec![0.3, -1.2], offset: 0.7 },
        |x| 0.3 * x[0] - 1.2 * x[1] + 0.7,
    )?;
    let rep = blowdown_diagnostics(&affine, &radii, &cfg)?;
    let worst = rep.steps.iter().map(|s| s.affine_distance).fold(0.0, f64::max);
    out.push(PropertyCheck::at_most("affine u: all affine distances vanish", worst, 1e-12));

    let cone = GraphFunction::from_fn(vec![0.0], 2.0, 1.0 / 16.0, Extension::Homogeneous(ConeTrace::line(1.0, -0.5)), |x| {
        if x[0] >= 0.0 {
            x[0]
        } else {
            -0.5 * x[0]
        }
    })?;
    let rep = blowdown_diagnostics(&cone, &radii, &cfg)?;
    let worst = rep.steps.iter().filter_map(|s| s.cauchy_distance).fold(0.0, f64::max);
    out.push(PropertyCheck::at_most("homogeneous u: rescalings coincide", worst, 1e-12));

    let params = FractionalParams::new(1, opts.s)?;
    let (ext, interior) = fixtures::abs_exterior(opts.solver_spacing)?;
    let (solution, report) =
        solve_dirichlet(&ext, &interior, &params, &fixtures::solver_quadrature(), &fixtures::solver_config())?;
    out.push(PropertyCheck::flag("|x| exterior fixture converged", report.converged));
    let rep = blowdown_diagnostics(&solution, &radii, &cfg)?;
    for w in rep.steps.windows(2) {
        out.push(PropertyCheck::at_most(
            format!("|x| exterior solution: affine distance decreases from r = {} to r = {}", w[0].radius, w[1].radius),
            w[1].affine_distance,
            w[0].affine_distance,
        ));
    }
    Ok(out)
}

fn product_structure() -> Result<Vec<PropertyCheck>> {
    let v_star: Arc<dyn Graph> = Arc::new(FnGraph::new(1, |x| x[0].abs()));
    let split = SplitCone::new(v_star, 1.0)?;
    let rotated = rotate_cone(&split, RotationTheta::from_slope(1.0)?)?;
    let lattice = ProbeLattice::cube(3, 1.0, 10);
    let rep = product_structure_test(&rotated, &lattice)?;
    let mut out = vec![PropertyCheck::at_most("rotated split cone: no violations on 10^3 lattice", rep.violations as f64, 0.0)];

    let mut worst: f64 = 0.0;
    let mut disagreements = 0;
    let c = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                let at = |m: usize| -1.0 + 2.0 * m as f64 / 9.0;
                let y = [at(i), at(j), at(k)];
                let expected = y[2] - y[0].abs() * c;
                let got = c * rotated.level(&y)?;
                worst = worst.max((got - expected).abs());
                if rotated.contains(&y)? != (expected < 0.0) {
                    disagreements += 1;
                }
            }
        }
    }
    out.push(PropertyCheck::at_most("rotated level matches y3 < |y1|/sqrt(2)", worst, 1e-12));
    out.push(PropertyCheck::at_most("rotated membership matches y3 < |y1|/sqrt(2)", disagreements as f64, 0.0));

    let flat = HalfSpace::new(vec![0.3, 0.0, 1.0], 0.1)?;
    out.push(PropertyCheck::flag(
        "half-space with normal orthogonal to e_n is a product",
        product_structure_test(&flat, &lattice)?.is_product,
    ));
    let tilted = HalfSpace::new(vec![0.0, 0.5, 1.0], 0.0)?;
    let rep = product_structure_test(&tilted, &lattice)?;
    out.push(PropertyCheck::flag(
        "tilted half-space is rejected with a violating pair",
        !rep.is_product && rep.max_violation.is_some(),
    ));
    Ok(out)
}

fn bounds(opts: &SuiteOptions) -> Result<Vec<PropertyCheck>> {
    let cfg = BoundsConfig::default();
    let mut out = vec![];
    for fixture in fixtures::bound_fixtures(opts.include_nonsmooth) {
        let v = check_bounds(&fixture, opts.s, opts.bound_spacing, &cfg)?;
        let drift_a = (v.ratio_a.ln()).abs();
        let drift_b = (v.ratio_b.ln()).abs();
        let limit = (1.0 + cfg.stability).ln();
        let nodes_ok = v.coarse.node_violations_a + v.fine.node_violations_a == 0;
        out.push(PropertyCheck {
            name: format!("{} [{}]", BOUND_A, v.fixture),
            passed: nodes_ok && drift_a <= limit,
            measured: drift_a.exp(),
            threshold: 1.0 + cfg.stability,
        });
        out.push(PropertyCheck::at_most(format!("{} [{}]", BOUND_B, v.fixture), drift_b.exp(), 1.0 + cfg.stability));
    }
    Ok(out)
}
