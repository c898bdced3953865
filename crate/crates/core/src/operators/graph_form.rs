//! Graph-form nonlocal mean curvature `𝓕[u]` and its linearization `𝓛_u`.
//!
//! Conventions (pinned by tests against a Monte-Carlo evaluation of the
//! set form):
//!
//! * `𝓕[u](x) = ½ ∫ [F(A) + F(a)] |θ|^{-(n+s)} dθ` with
//!   `A = (u(x+θ) − u(x))/|θ|`, `a = (u(x−θ) − u(x))/|θ|`. Convex `u` gives
//!   a positive value; `2𝓕[u](x) = −∫ [(χ_{E^c} − χ_{L^c}) − (χ_E − χ_L)]
//!   |X−Y|^{-(N+s)} dY` with `L` the tangent half-space, i.e.
//!   `𝓕[u](x) = −½ ℋ_s^E(x, u(x))`.
//! * `𝓛_u[v](x) = ∫ [F'(A)(v(x+θ) − v(x)) + F'(a)(v(x−θ) − v(x))]
//!   |θ|^{-(n+s+1)} dθ`, the derivative of `2𝓕`, so
//!   `𝓛_u[∂_j u] = 2 ∂_j 𝓕[u]`.
//!
//! Both integrands are even in `θ`, so the integral runs over a hemisphere
//! of directions. Each node pairs `+θ` with `−θ`: the pair is evaluated as
//! `F(M + D/2) − F(M − D/2)` with `M` the centered first difference and `D`
//! the second difference, and `D` below the round-off floor is set to zero.
//! Affine graphs therefore give exactly zero at every node.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::config::{CurvatureReport, QuadratureConfig, RadialMode, TailMode};
use crate::geometry::{Graph, MAX_DIM};
use crate::kernel::Kernel;
use crate::quad::{adaptive_gk, gauss_legendre, gk15, pairwise_sum};
use crate::{Error, FractionalParams, Result};

/// Breakpoint budget for rays through sampled data.
const MAX_GRID_PANELS: f64 = 20_000.0;

/// Quadrature over the unit directions `ω` with `ω ~ −ω` identified.
#[derive(Debug, Clone)]
pub struct HemisphereRule {
    pub directions: Vec<[f64; MAX_DIM]>,
    pub weights: Vec<f64>,
    /// Weights of the embedded half-resolution rule (zero on dropped nodes),
    /// used for the angular error estimate.
    pub coarse_weights: Option<Vec<f64>>,
    /// Total measure of the hemisphere (half of `|Sⁿ⁻¹|`).
    pub measure: f64,
}

impl HemisphereRule {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        match n {
            1 => Ok(Self { directions: vec![unit(&[1.0])], weights: vec![1.0], coarse_weights: None, measure: 1.0 }),
            2 => {
                let w = PI / m as f64;
                let directions = (0..m)
                    .map(|k| {
                        let phi = PI * k as f64 / m as f64;
                        unit(&[phi.cos(), phi.sin()])
                    })
                    .collect();
                let coarse = (0..m).map(|k| if k % 2 == 0 { 2.0 * w } else { 0.0 }).collect();
                Ok(Self { directions, weights: vec![w; m], coarse_weights: Some(coarse), measure: PI })
            }
            3 => {
                let q = (m / 4).max(4);
                let (z, wz) = gauss_legendre(q);
                let mut directions = vec![];
                let mut weights = vec![];
                let mut coarse = vec![];
                for (zi, wi) in z.iter().zip(&wz) {
                    let zc = 0.5 * (zi + 1.0);
                    let rho = (1.0 - zc * zc).sqrt();
                    for k in 0..m {
                        let phi = 2.0 * PI * k as f64 / m as f64;
                        directions.push(unit(&[rho * phi.cos(), rho * phi.sin(), zc]));
                        let w = 0.5 * wi * 2.0 * PI / m as f64;
                        weights.push(w);
                        coarse.push(if k % 2 == 0 { 2.0 * w } else { 0.0 });
                    }
                }
                Ok(Self { directions, weights, coarse_weights: Some(coarse), measure: 2.0 * PI })
            }
            _ => Err(Error::Unsupported(format!("graph-form quadrature in base dimension {n}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Full-sphere rule with no antipodal node pairs (odd counts), for the
/// single-sided principal-value form.
#[derive(Debug, Clone)]
struct SphereRule {
    directions: Vec<[f64; MAX_DIM]>,
    weights: Vec<f64>,
}

impl SphereRule {
    fn new(n: usize, m: usize) -> Result<Self> {
        match n {
            1 => Ok(Self { directions: vec![unit(&[1.0]), unit(&[-1.0])], weights: vec![1.0, 1.0] }),
            2 => {
                let m = m + 1;
                let directions = (0..m)
                    .map(|k| {
                        let phi = 2.0 * PI * k as f64 / m as f64;
                        unit(&[phi.cos(), phi.sin()])
                    })
                    .collect();
                Ok(Self { directions, weights: vec![2.0 * PI / m as f64; m] })
            }
            3 => {
                let q = (m / 2) | 1;
                let (z, wz) = gauss_legendre(q);
                let m = m + 1;
                let mut directions = vec![];
                let mut weights = vec![];
                for (zi, wi) in z.iter().zip(&wz) {
                    let rho = (1.0 - zi * zi).sqrt();
                    for k in 0..m {
                        let phi = 2.0 * PI * k as f64 / m as f64;
                        directions.push(unit(&[rho * phi.cos(), rho * phi.sin(), *zi]));
                        weights.push(wi * 2.0 * PI / m as f64);
                    }
                }
                Ok(Self { directions, weights })
            }
            _ => Err(Error::Unsupported(format!("graph-form quadrature in base dimension {n}"))),
        }
    }
}

fn unit(v: &[f64]) -> [f64; MAX_DIM] {
    let mut out = [0.0; MAX_DIM];
    out[..v.len()].copy_from_slice(v);
    out
}

#[inline]
fn offset(x: &[f64], omega: &[f64; MAX_DIM], t: f64) -> [f64; MAX_DIM] {
    let mut out = [0.0; MAX_DIM];
    for i in 0..x.len() {
        out[i] = x[i] + t * omega[i];
    }
    out
}

/// Per-point data shared by all nodes: `u(x)` and a slope scale used for
/// the round-off floor of second differences (magnitudes of `u(x ± θ)` can
/// cancel inside the evaluation, so the floor also scales with
/// `slope·(|x| + |θ|)`).
#[derive(Debug, Clone, Copy)]
pub struct PointContext {
    pub u0: f64,
    pub slope: f64,
    pub radius: f64,
}

/// Radial layout of one evaluation.
#[derive(Debug, Clone)]
pub struct RadialLayout {
    pub breaks: Vec<f64>,
    /// Where the explicit quadrature stops and the tail model starts.
    pub r_eff: f64,
}

/// The graph-form operators with a cached kernel and direction rules.
#[derive(Debug, Clone)]
pub struct GraphOperator {
    kernel: Kernel,
    quad: QuadratureConfig,
    hemi: HemisphereRule,
    sphere: SphereRule,
}

struct RayResult {
    value: f64,
    radial_error: f64,
    tail: f64,
    tail_error: f64,
}

impl GraphOperator {
    pub fn new(params: FractionalParams, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        let kernel = Kernel::new(params, quad.kernel)?;
        let hemi = HemisphereRule::new(params.n(), quad.angular_nodes)?;
        let sphere = SphereRule::new(params.n(), quad.angular_nodes)?;
        Ok(Self { kernel, quad, hemi, sphere })
    }

    /// Reuses an already certified kernel.
    pub fn with_kernel(kernel: Kernel, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        if kernel.accuracy() != &quad.kernel {
            return Err(Error::config("kernel accuracy differs from the quadrature configuration"));
        }
        let n = kernel.params().n();
        let hemi = HemisphereRule::new(n, quad.angular_nodes)?;
        let sphere = SphereRule::new(n, quad.angular_nodes)?;
        Ok(Self { kernel, quad, hemi, sphere })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn params(&self) -> &FractionalParams {
        self.kernel.params()
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn hemisphere(&self) -> &HemisphereRule {
        &self.hemi
    }

    fn s(&self) -> f64 {
        self.params().s()
    }

    /// Validates the evaluation point and returns `u(x)`.
    pub fn check_point(&self, u: &dyn Graph, x: &[f64]) -> Result<f64> {
        let n = self.params().n();
        if u.dim() != n || x.len() != n {
            return Err(Error::domain(format!(
                "graph over ℝ^{} evaluated at a point of dimension {} with n = {n}",
                u.dim(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("evaluation point {x:?} is not finite")));
        }
        if u.is_excluded(x) {
            return Err(Error::domain(format!("evaluation point {x:?} is the excluded cone apex")));
        }
        u.value(x)
    }

    /// `u(x)` and the round-off scale of the point (see [`PointContext`]).
    pub fn point_context(&self, u: &dyn Graph, x: &[f64]) -> Result<PointContext> {
        let u0 = self.check_point(u, x)?;
        let n = x.len();
        let mut slope: f64 = 0.0;
        for omega in &self.hemi.directions {
            let (Ok(up), Ok(um)) = (u.value(&offset(x, omega, 1.0)[..n]), u.value(&offset(x, omega, -1.0)[..n]))
            else {
                continue;
            };
            slope = slope.max(0.5 * (up - um).abs()).max((up - u0).abs()).max((um - u0).abs());
        }
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(PointContext { u0, slope: slope * n as f64, radius: xn })
    }

    /// `F(A) + F(a)` from the three values `u(x+θ)`, `u(x−θ)`, `u(x)`.
    #[inline]
    pub fn pair_from_values(&self, up: f64, um: f64, ctx: &PointContext, rho: f64) -> f64 {
        let u0 = ctx.u0;
        let sd = up + um - 2.0 * u0;
        let floor = 16.0
            * f64::EPSILON
            * (up.abs() + um.abs() + 2.0 * u0.abs() + 4.0 * ctx.slope * (ctx.radius + rho));
        let d = if sd.abs() <= floor { 0.0 } else { sd / rho };
        let m = (up - um) / (2.0 * rho);
        self.kernel.f(m + 0.5 * d) - self.kernel.f(m - 0.5 * d)
    }

    /// `F(A) + F(a)` at `θ = ρω`.
    pub fn pair(&self, u: &dyn Graph, x: &[f64], ctx: &PointContext, omega: &[f64; MAX_DIM], rho: f64) -> Result<f64> {
        let n = x.len();
        let up = u.value(&offset(x, omega, rho)[..n])?;
        let um = u.value(&offset(x, omega, -rho)[..n])?;
        Ok(self.pair_from_values(up, um, ctx, rho))
    }

    /// `F'(A)(v(x+θ) − v(x)) + F'(a)(v(x−θ) − v(x))` at `θ = ρω`.
    #[allow(clippy::too_many_arguments)]
    pub fn linearized_numerator(
        &self,
        u: &dyn Graph,
        v: &dyn Graph,
        x: &[f64],
        u0: f64,
        v0: f64,
        omega: &[f64; MAX_DIM],
        rho: f64,
    ) -> Result<f64> {
        let n = x.len();
        let xp = offset(x, omega, rho);
        let xm = offset(x, omega, -rho);
        let a_plus = (u.value(&xp[..n])? - u0) / rho;
        let a_minus = (u.value(&xm[..n])? - u0) / rho;
        let dv_plus = v.value(&xp[..n])? - v0;
        let dv_minus = v.value(&xm[..n])? - v0;
        Ok(self.kernel.f_prime(a_plus) * dv_plus + self.kernel.f_prime(a_minus) * dv_minus)
    }

    /// Radial breakpoints: multiples of the grid resolution while the ray
    /// may still be inside sampled data, geometric panels beyond.
    pub fn radial_layout(&self, u: &dyn Graph, x: &[f64]) -> Result<RadialLayout> {
        let delta = self.quad.inner_cutoff;
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let far = u.far_field_radius();
        let r_eff = match far {
            Some(f) => self.quad.outer_cutoff.max(xn + f),
            None => {
                if self.quad.tail_mode == TailMode::AnalyticAffine {
                    return Err(Error::config(
                        "analytic tail requested for a graph without a far-field model; use tail_mode = bound-only",
                    ));
                }
                self.quad.outer_cutoff
            }
        };
        let mut breaks = vec![delta];
        if let Some(h) = u.resolution() {
            let reach = far.map_or(r_eff, |f| (xn + f).min(r_eff));
            if reach > delta {
                let count = ((reach - delta) / h).ceil();
                let step = h * (count / MAX_GRID_PANELS).ceil().max(1.0);
                let mut k = (delta / step).floor() + 1.0;
                while k * step < reach {
                    if k * step > delta * (1.0 + 1e-12) {
                        breaks.push(k * step);
                    }
                    k += 1.0;
                }
            }
        }
        let ratio = self.quad.panel_ratio;
        loop {
            let last = *breaks.last().expect("non-empty");
            let next = last * ratio;
            if next >= r_eff * (1.0 - 1e-12) || last >= r_eff {
                break;
            }
            breaks.push(next);
        }
        if *breaks.last().expect("non-empty") < r_eff {
            breaks.push(r_eff);
        }
        Ok(RadialLayout { breaks, r_eff })
    }

    /// `∫ num(ρ) ρ^{-e} dρ` over the layout, plus the fitted tail.
    fn ray<G>(&self, layout: &RadialLayout, e: f64, num: G) -> Result<RayResult>
    where
        G: Fn(f64) -> Result<f64>,
    {
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let integrand = |rho: f64| match num(rho) {
            Ok(v) => v * rho.powf(-e),
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                0.0
            }
        };
        let (value, radial_error) = match self.quad.radial_mode {
            RadialMode::Adaptive => {
                let r = adaptive_gk(integrand, &layout.breaks, self.quad.radial_tol, self.quad.max_subdivisions);
                (r.value, r.error)
            }
            RadialMode::Fixed => {
                let mut f = integrand;
                let parts: Vec<(f64, f64)> = layout.breaks.windows(2).map(|w| gk15(&mut f, w[0], w[1])).collect();
                (parts.iter().map(|p| p.0).sum(), parts.iter().map(|p| p.1).sum())
            }
        };
        if let Some(err) = failure.into_inner() {
            return Err(err);
        }
        let (tail, tail_error) = match self.quad.tail_mode {
            TailMode::AnalyticAffine => {
                let r = layout.r_eff;
                let g = [num(r)?, num(2.0 * r)?, num(4.0 * r)?];
                tail_fit(g, r, e)
            }
            TailMode::BoundOnly => (0.0, 0.0),
        };
        Ok(RayResult { value, radial_error, tail, tail_error })
    }

    /// Estimate of `sup |D²u|` near `x` from resolved second differences.
    pub fn second_difference_norm(&self, u: &dyn Graph, x: &[f64], ctx: &PointContext) -> Result<f64> {
        let u0 = ctx.u0;
        let eta = self.quad.inner_cutoff.max(u.resolution().unwrap_or(0.0));
        let n = x.len();
        let mut worst: f64 = 0.0;
        for t in [eta, 2.0 * eta] {
            for omega in &self.hemi.directions {
                let up = u.value(&offset(x, omega, t)[..n])?;
                let um = u.value(&offset(x, omega, -t)[..n])?;
                let sd = up + um - 2.0 * u0;
                let floor = 16.0
                    * f64::EPSILON
                    * (up.abs() + um.abs() + 2.0 * u0.abs() + 4.0 * ctx.slope * (ctx.radius + t));
                if sd.abs() > floor {
                    worst = worst.max(sd.abs() / (t * t));
                }
            }
        }
        Ok(worst)
    }

    fn combine(&self, rays: Vec<RayResult>, scale: f64) -> (f64, f64, f64) {
        let totals: Vec<f64> = rays.iter().zip(&self.hemi.weights).map(|(r, w)| w * (r.value + r.tail)).collect();
        let value = scale * pairwise_sum(&totals);
        let radial: f64 = rays.iter().zip(&self.hemi.weights).map(|(r, w)| w * r.radial_error).sum();
        let tail: f64 = rays.iter().zip(&self.hemi.weights).map(|(r, w)| w * r.tail_error).sum();
        let angular = match &self.hemi.coarse_weights {
            Some(c) => {
                let coarse: Vec<f64> = rays.iter().zip(c).map(|(r, w)| w * (r.value + r.tail)).collect();
                (value - scale * pairwise_sum(&coarse)).abs()
            }
            None => 0.0,
        };
        (value, scale * (radial + angular), scale * tail)
    }

    /// `𝓕[u](x)` with its error budget.
    pub fn nmc(&self, u: &dyn Graph, x: &[f64]) -> Result<CurvatureReport> {
        let ctx = self.point_context(u, x)?;
        let layout = self.radial_layout(u, x)?;
        let s = self.s();
        let rays = self
            .hemi
            .directions
            .par_iter()
            .map(|omega| self.ray(&layout, 1.0 + s, |rho| self.pair(u, x, &ctx, omega, rho)))
            .collect::<Result<Vec<_>>>()?;
        let (value, quadrature_error, mut tail_error) = self.combine(rays, 1.0);
        if self.quad.tail_mode == TailMode::BoundOnly {
            tail_error += 2.0 * self.kernel.f_infinity() * self.hemi.measure * layout.r_eff.powf(-s) / s;
        }
        let delta = self.quad.inner_cutoff;
        let k = self.second_difference_norm(u, x, &ctx)?;
        Ok(CurvatureReport {
            point: x.to_vec(),
            value,
            inner_error: self.hemi.measure * k * delta.powf(1.0 - s) / (1.0 - s),
            tail_error,
            quadrature_error,
            kernel_error: 2.0 * self.kernel.error_bound() * self.hemi.measure * delta.powf(-s) / s,
        })
    }

    fn linearized_inner_bound(&self, u: &dyn Graph, v: &dyn Graph, x: &[f64], u0: f64, v0: f64) -> Result<f64> {
        let eta = self.quad.inner_cutoff.max(u.resolution().unwrap_or(0.0)).max(v.resolution().unwrap_or(0.0));
        let mut worst: f64 = 0.0;
        for t in [eta, 2.0 * eta] {
            for omega in &self.hemi.directions {
                let num = self.linearized_numerator(u, v, x, u0, v0, omega, t)?;
                worst = worst.max(num.abs() / (t * t));
            }
        }
        let s = self.s();
        Ok(2.0 * self.hemi.measure * worst * self.quad.inner_cutoff.powf(1.0 - s) / (1.0 - s))
    }

    fn linearized_tail_bound(&self, rays: &[RayResult], layout: &RadialLayout, num_at_r: &[f64]) -> f64 {
        let s = self.s();
        let _ = rays;
        let g = num_at_r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        2.0 * self.hemi.measure * 2.0 * g * layout.r_eff.powf(-1.0 - s) / (1.0 + s)
    }

    /// `𝓛_u[v](x)` in the symmetric form.
    pub fn linearized(&self, u: &dyn Graph, v: &dyn Graph, x: &[f64]) -> Result<CurvatureReport> {
        let u0 = self.check_point(u, x)?;
        if v.dim() != u.dim() {
            return Err(Error::domain("u and v must live over the same space"));
        }
        let v0 = v.value(x)?;
        let layout = self.radial_layout(u, x)?;
        let s = self.s();
        let rays = self
            .hemi
            .directions
            .par_iter()
            .map(|omega| self.ray(&layout, 2.0 + s, |rho| self.linearized_numerator(u, v, x, u0, v0, omega, rho)))
            .collect::<Result<Vec<_>>>()?;
        let mut tail_extra = 0.0;
        if self.quad.tail_mode == TailMode::BoundOnly {
            let at_r = self
                .hemi
                .directions
                .iter()
                .map(|omega| self.linearized_numerator(u, v, x, u0, v0, omega, layout.r_eff))
                .collect::<Result<Vec<_>>>()?;
            tail_extra = self.linearized_tail_bound(&rays, &layout, &at_r);
        }
        let (value, quadrature_error, tail_error) = self.combine(rays, 2.0);
        Ok(CurvatureReport {
            point: x.to_vec(),
            value,
            inner_error: self.linearized_inner_bound(u, v, x, u0, v0)?,
            tail_error: tail_error + tail_extra,
            quadrature_error,
            kernel_error: 0.0,
        })
    }

    /// The single-sided principal-value form
    /// `2 p.v. ∫ F'(A)(v(x+θ) − v(x)) |θ|^{-(n+s+1)} dθ`, integrated shell by
    /// shell over a full-sphere rule without antipodal pairs.
    pub fn linearized_pv(&self, u: &dyn Graph, v: &dyn Graph, x: &[f64]) -> Result<CurvatureReport> {
        let u0 = self.check_point(u, x)?;
        let v0 = v.value(x)?;
        let layout = self.radial_layout(u, x)?;
        let s = self.s();
        let n = x.len();
        let shell = |rho: f64| -> Result<f64> {
            let mut terms = Vec::with_capacity(self.sphere.directions.len());
            for (omega, w) in self.sphere.directions.iter().zip(&self.sphere.weights) {
                let xp = offset(x, omega, rho);
                let a = (u.value(&xp[..n])? - u0) / rho;
                terms.push(w * self.kernel.f_prime(a) * (v.value(&xp[..n])? - v0));
            }
            Ok(pairwise_sum(&terms))
        };
        let ray = self.ray(&layout, 2.0 + s, shell)?;
        let mut tail_error = 2.0 * ray.tail_error;
        if self.quad.tail_mode == TailMode::BoundOnly {
            let g = shell(layout.r_eff)?.abs();
            tail_error += 2.0 * 2.0 * g * layout.r_eff.powf(-1.0 - s) / (1.0 + s);
        }
        Ok(CurvatureReport {
            point: x.to_vec(),
            value: 2.0 * (ray.value + ray.tail),
            inner_error: self.linearized_inner_bound(u, v, x, u0, v0)?,
            tail_error,
            quadrature_error: 2.0 * ray.radial_error,
            kernel_error: 0.0,
        })
    }
}

/// Integrates `G₀ + G₁/ρ + G₂/ρ²` against `ρ^{-e}` on `[R, ∞)` from samples
/// at `R, 2R, 4R`; the error is the change relative to the two-term fit.
fn tail_fit(g: [f64; 3], r: f64, e: f64) -> (f64, f64) {
    let t = [1.0 / r, 0.5 / r, 0.25 / r];
    // Newton form in t
    let d01 = (g[1] - g[0]) / (t[1] - t[0]);
    let d12 = (g[2] - g[1]) / (t[2] - t[1]);
    let d012 = (d12 - d01) / (t[2] - t[0]);
    let c2 = d012;
    let c1 = d01 - d012 * (t[0] + t[1]);
    let c0 = g[0] - t[0] * d01 + d012 * t[0] * t[1];
    let integral = |c0: f64, c1: f64, c2: f64| {
        c0 * r.powf(1.0 - e) / (e - 1.0) + c1 * r.powf(-e) / e + c2 * r.powf(-1.0 - e) / (e + 1.0)
    };
    let three = integral(c0, c1, c2);
    let lin1 = (g[1] - g[0]) / (t[1] - t[0]);
    let two = integral(g[0] - lin1 * t[0], lin1, 0.0);
    (three, (three - two).abs())
}

pub fn nmc_graph(
    u: &dyn Graph,
    x: &[f64],
    params: &FractionalParams,
    quad: &QuadratureConfig,
) -> Result<CurvatureReport> {
    GraphOperator::new(*params, *quad)?.nmc(u, x)
}

pub fn nmc_linearized(
    u: &dyn Graph,
    v: &dyn Graph,
    x: &[f64],
    params: &FractionalParams,
    quad: &QuadratureConfig,
) -> Result<CurvatureReport> {
    GraphOperator::new(*params, *quad)?.linearized(u, v, x)
}

pub fn nmc_linearized_pv(
    u: &dyn Graph,
    v: &dyn Graph,
    x: &[f64],
    params: &FractionalParams,
    quad: &QuadratureConfig,
) -> Result<CurvatureReport> {
    GraphOperator::new(*params, *quad)?.linearized_pv(u, v, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AffineGraph, Cone, ConeTrace, Extension, FnGraph, GraphFunction};

    fn op(n: usize, s: f64) -> GraphOperator {
        GraphOperator::new(FractionalParams::new(n, s).unwrap(), QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn tail_fit_is_exact_on_quadratics_in_inverse_radius() {
        let e = 1.5;
        let r = 10.0;
        let g = |rho: f64| 0.3 - 2.0 / rho + 5.0 / (rho * rho);
        let (v, _) = tail_fit([g(r), g(2.0 * r), g(4.0 * r)], r, e);
        let exact = 0.3 * r.powf(1.0 - e) / (e - 1.0) - 2.0 * r.powf(-e) / e + 5.0 * r.powf(-1.0 - e) / (e + 1.0);
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn affine_graphs_vanish_at_node_level() {
        let o = op(2, 0.4);
        let u = AffineGraph::new(vec![0.7, -2.3], 0.4);
        for omega in &o.hemisphere().directions {
            for rho in [1e-3, 0.37, 5.0, 1e4] {
                let ctx = o.point_context(&u, &[0.3, -1.1]).unwrap();
                assert_eq!(o.pair(&u, &[0.3, -1.1], &ctx, omega, rho).unwrap(), 0.0, "{omega:?} {rho}");
            }
        }
        let r = o.nmc(&u, &[0.3, -1.1]).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn apex_is_rejected() {
        let o = op(1, 0.5);
        let cone = Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap();
        assert!(matches!(o.nmc(&cone, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn analytic_tail_needs_far_field() {
        let o = op(1, 0.5);
        let u = GraphFunction::from_fn(vec![0.0], 2.0, 0.25, Extension::LinearGrowth { m: 1.0 }, |x| x[0]).unwrap();
        assert!(matches!(o.nmc(&u, &[0.5]), Err(Error::Config(_))));
    }

    #[test]
    fn convex_parabola_is_positive() {
        let o = op(1, 0.5);
        let u = FnGraph::new(1, |x: &[f64]| x[0] * x[0]).with_far_field(0.0);
        let quad = QuadratureConfig { tail_mode: TailMode::BoundOnly, ..QuadratureConfig::default() };
        let o2 = GraphOperator::new(*o.params(), quad).unwrap();
        let r = o2.nmc(&u, &[0.2]).unwrap();
        assert!(r.value > 0.0);
    }

    #[test]
    fn constant_v_linearizes_to_zero() {
        let o = op(2, 0.6);
        let u = FnGraph::new(2, |x: &[f64]| x[0] * x[1] * (-(x[0] * x[0] + x[1] * x[1])).exp()).with_far_field(8.0);
        let v = AffineGraph::new(vec![0.0, 0.0], 3.0);
        let r = o.linearized(&u, &v, &[0.2, 0.1]).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
