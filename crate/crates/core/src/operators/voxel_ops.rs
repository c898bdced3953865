//! Operators on voxelized sets: the `s`-interaction, the relative
//! `s`-perimeter, and the set-form nonlocal mean curvature.
//!
//! Voxel–voxel interactions use the exact cube-pair kernel
//! `∫_{Q_i}∫_{Q_j} |x−y|^{-(N+s)} = h^{N−s} T(j − i)`, where
//! `T(k) = ∫ |z|^{-(N+s)} Λ(z − k) dz` and `Λ` is the autocorrelation of the
//! unit cube. `T` is tabulated for `|k|_∞ ≤ NEAR`; the corner singularity of
//! touching cubes is integrated exactly in the radial variable of a pyramid
//! (Duffy) split. Beyond the table a second-order moment expansion is used.
//!
//! Parts of a set outside the voxel box are described analytically and
//! handled along rays, where `∫ r^{-1-s} dr` is exact on every segment.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::CurvatureReport;
use crate::geometry::{Exterior, Omega, VoxelSet};
use crate::quad::{gauss_legendre, pairwise_sum};
use crate::{Error, FractionalParams, Result};

/// Offsets with `|k|_∞ ≤ NEAR` use the tabulated cube-pair kernel.
const NEAR: i64 = 6;
/// Geometric samples per ray through a graph exterior.
const GRAPH_RAY_RATIO: f64 = 1.2;
const GRAPH_RAY_SPAN: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetQuadrature {
    /// Radius of the excised ball for the set-form curvature.
    pub inner_cutoff: f64,
    /// Directions for the set-form curvature (half circle for N = 2, azimuth
    /// count for N = 3).
    pub curvature_directions: usize,
    /// Directions for rays from voxels into the exterior description.
    pub exterior_directions: usize,
}

impl Default for SetQuadrature {
    fn default() -> Self {
        Self { inner_cutoff: 0.05, curvature_directions: 2048, exterior_directions: 256 }
    }
}

impl SetQuadrature {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_cutoff > 0.0 && self.inner_cutoff.is_finite()) {
            return Err(Error::config("set inner_cutoff must be positive"));
        }
        if self.curvature_directions < 8 || self.curvature_directions % 2 != 0 {
            return Err(Error::config("curvature_directions must be an even number ≥ 8"));
        }
        if self.exterior_directions < 8 || self.exterior_directions % 2 != 0 {
            return Err(Error::config("exterior_directions must be an even number ≥ 8"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub value: f64,
    /// Table, far-field expansion and exterior-ray quadrature errors.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerimeterReport {
    /// `𝓘(E∩Ω, E^c∩Ω)`.
    pub inside_inside: InteractionReport,
    /// `𝓘(E∩Ω, E^c∖Ω)`.
    pub inside_outside: InteractionReport,
    /// `𝓘(E∖Ω, E^c∩Ω)`.
    pub outside_inside: InteractionReport,
    pub value: f64,
    pub quadrature_error: f64,
    /// Heuristic for representing Ω by whole voxels: half the interaction
    /// mass carried by voxels on the voxelized boundary of Ω.
    pub voxelization_error: f64,
}

impl PerimeterReport {
    pub fn total_error(&self) -> f64 {
        self.quadrature_error + self.voxelization_error
    }
}

/// Tabulated cube-pair kernel for one `(N, s)`.
#[derive(Debug, Clone)]
pub struct CubeKernel {
    dim: usize,
    s: f64,
    p: f64,
    table: HashMap<Vec<i64>, f64>,
}

impl CubeKernel {
    pub fn new(params: &FractionalParams) -> Result<Self> {
        let dim = params.ambient_dim();
        if !(2..=3).contains(&dim) {
            return Err(Error::Unsupported(format!("voxel interactions in dimension N = {dim}")));
        }
        let s = params.s();
        let p = dim as f64 + s;
        let mut table = HashMap::new();
        let mut key = vec![0i64; dim];
        fill_keys(&mut key, 0, 0, &mut |k| {
            if k.iter().any(|&v| v != 0) {
                table.insert(k.to_vec(), cube_pair_integral(k, dim, s));
            }
        });
        Ok(Self { dim, s, p, table })
    }

    /// `T(k)` for any non-zero integer offset.
    pub fn t(&self, k: &[i64]) -> f64 {
        let mut key: Vec<i64> = k.iter().map(|v| v.abs()).collect();
        key.sort_unstable();
        if key[self.dim - 1] <= NEAR {
            return self.table[&key];
        }
        let r2: f64 = key.iter().map(|&v| (v * v) as f64).sum();
        r2.powf(-0.5 * self.p) * (1.0 + self.p * (self.p + 2.0 - self.dim as f64) / (12.0 * r2))
    }

    /// Size of the neglected fourth-order term of the far-field expansion.
    fn far_error(&self, k: &[i64]) -> f64 {
        let r2: f64 = k.iter().map(|&v| (v * v) as f64).sum();
        let c = self.p * (self.p + 2.0) / (12.0 * r2);
        r2.powf(-0.5 * self.p) * c * c
    }
}

fn fill_keys(key: &mut [i64], pos: usize, min: i64, f: &mut impl FnMut(&[i64])) {
    if pos == key.len() {
        f(key);
        return;
    }
    for v in min..=NEAR {
        key[pos] = v;
        fill_keys(key, pos + 1, v, f);
    }
}

/// `∫ |z|^{-(N+s)} Λ(z − k) dz`, summed over the unit subcubes of the support.
fn cube_pair_integral(k: &[i64], dim: usize, s: f64) -> f64 {
    let p = dim as f64 + s;
    let mut total = 0.0;
    for corner in 0..(1usize << dim) {
        // subcube [lo_i, lo_i + 1] with lo_i = k_i - 1 or k_i
        let lo: Vec<i64> = (0..dim).map(|i| k[i] - 1 + ((corner >> i) & 1) as i64).collect();
        let touches_origin = lo.iter().all(|&l| l == 0 || l == -1);
        total += if touches_origin {
            duffy_subcube(k, &lo, dim, s)
        } else {
            let dist2: f64 = lo.iter().map(|&l| if l >= 0 { (l * l) as f64 } else { ((l + 1) * (l + 1)) as f64 }).sum();
            let order = if dist2 <= 1.0 { 14 } else if dist2 <= 4.0 { 10 } else { 8 };
            tensor_subcube(k, &lo, dim, p, order)
        };
    }
    total
}

/// `1 − |z − k|` clipped at zero, written so that it stays accurate near the
/// ends of the support.
fn lambda_factor(z: f64, k: i64) -> f64 {
    let k = k as f64;
    if z <= k { z - (k - 1.0) } else { (k + 1.0) - z }.max(0.0)
}

fn tensor_subcube(k: &[i64], lo: &[i64], dim: usize, p: f64, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let nodes: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
    let mut total = 0.0;
    let count = order.pow(dim as u32);
    for idx in 0..count {
        let mut rest = idx;
        let mut wt = 1.0;
        let mut r2 = 0.0;
        let mut lam = 1.0;
        for i in 0..dim {
            let j = rest % order;
            rest /= order;
            let z = lo[i] as f64 + nodes[j];
            wt *= weights[j];
            r2 += z * z;
            lam *= lambda_factor(z, k[i]);
        }
        total += wt * lam * r2.powf(-0.5 * p);
    }
    total
}

/// Subcube with the origin as a corner: map to `ξ ∈ [0,1]^N` (origin at
/// `ξ = 0`), split into the `N` pyramids `ξ_j = max`, write `ξ = t w` with
/// `w_j = 1`, and integrate the polynomial in `t` exactly.
fn duffy_subcube(k: &[i64], lo: &[i64], dim: usize, s: f64) -> f64 {
    let p = dim as f64 + s;
    let sigma: Vec<f64> = lo.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
    // on this subcube the Λ-factor is ξ_i when k_i = σ_i, and 1 − ξ_i when k_i = 0
    let nonzero: Vec<bool> = (0..dim).map(|i| k[i] != 0).collect();
    debug_assert!((0..dim).all(|i| k[i] == 0 || k[i] as f64 == sigma[i]));
    let m = nonzero.iter().filter(|b| **b).count();
    debug_assert!(m >= 1);
    let order = 20;
    let (x, w) = gauss_legendre(order);
    let nodes: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
    let mut total = 0.0;
    for j in 0..dim {
        let free: Vec<usize> = (0..dim).filter(|&i| i != j).collect();
        let count = order.pow(free.len() as u32);
        for idx in 0..count {
            let mut rest = idx;
            let mut wvec = vec![1.0; dim];
            let mut wt = 1.0;
            for &i in &free {
                let q = rest % order;
                rest /= order;
                wvec[i] = nodes[q];
                wt *= weights[q];
            }
            let norm2: f64 = wvec.iter().map(|v| v * v).sum();
            let mut prefactor = norm2.powf(-0.5 * p);
            // polynomial ∏_{k_i = 0} (1 − t w_i) in t
            let mut poly = vec![1.0];
            for i in 0..dim {
                if nonzero[i] {
                    prefactor *= wvec[i];
                } else {
                    let mut next = vec![0.0; poly.len() + 1];
                    for (d, c) in poly.iter().enumerate() {
                        next[d] += c;
                        next[d + 1] -= c * wvec[i];
                    }
                    poly = next;
                }
            }
            let radial: f64 = poly.iter().enumerate().map(|(d, c)| c / (m as f64 + d as f64 - s)).sum();
            total += wt * prefactor * radial;
        }
    }
    total
}

/// Membership segments `(a, b, inside)` along `x + rω`, `r ∈ [r0, ∞)`.
fn ray_segments(set: &VoxelSet, x: &[f64], omega: &[f64], r0: f64, out: &mut Vec<(f64, f64, bool)>) -> Result<()> {
    out.clear();
    let grid = &set.grid;
    let dim = grid.dim();
    let upper = grid.upper();
    let mut r_exit = f64::INFINITY;
    for i in 0..dim {
        if omega[i] > 0.0 {
            r_exit = r_exit.min((upper[i] - x[i]) / omega[i]);
        } else if omega[i] < 0.0 {
            r_exit = r_exit.min((grid.lower[i] - x[i]) / omega[i]);
        }
    }
    let r_exit = r_exit.max(0.0);
    if r0 < r_exit {
        // plane crossings inside the box
        let mut crossings: Vec<f64> = Vec::new();
        for i in 0..dim {
            if omega[i] == 0.0 {
                continue;
            }
            let h = grid.spacing;
            let t0 = (x[i] + r0 * omega[i] - grid.lower[i]) / h;
            let (mut k, step) = if omega[i] > 0.0 { (t0.floor() + 1.0, 1.0) } else { (t0.ceil() - 1.0, -1.0) };
            loop {
                let r = (grid.lower[i] + k * h - x[i]) / omega[i];
                if r >= r_exit {
                    break;
                }
                if r > r0 {
                    crossings.push(r);
                }
                k += step;
            }
        }
        crossings.sort_by(f64::total_cmp);
        let mut a = r0;
        let mut point = vec![0.0; dim];
        for b in crossings.into_iter().chain(std::iter::once(r_exit)) {
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            for i in 0..dim {
                point[i] = x[i] + mid * omega[i];
            }
            let inside = match grid.locate(&point) {
                Some(k) => set.indicator[k],
                None => set.exterior.contains(&point)?,
            };
            push_segment(out, a, b, inside);
            a = b;
        }
    }
    exterior_segments(&set.exterior, x, omega, r0.max(r_exit), out)
}

fn push_segment(out: &mut Vec<(f64, f64, bool)>, a: f64, b: f64, inside: bool) {
    if let Some(last) = out.last_mut() {
        if last.2 == inside && last.1 == a {
            last.1 = b;
            return;
        }
    }
    out.push((a, b, inside));
}

fn exterior_segments(ext: &Exterior, x: &[f64], omega: &[f64], start: f64, out: &mut Vec<(f64, f64, bool)>) -> Result<()> {
    let inf = f64::INFINITY;
    match ext {
        Exterior::Empty => push_segment(out, start, inf, false),
        Exterior::Full => push_segment(out, start, inf, true),
        Exterior::HalfSpace { normal, offset } => {
            let a: f64 = normal.iter().zip(omega).map(|(n, w)| n * w).sum();
            let b: f64 = offset - normal.iter().zip(x).map(|(n, v)| n * v).sum::<f64>();
            // inside ⇔ a r < b
            if a == 0.0 {
                push_segment(out, start, inf, 0.0 < b);
            } else {
                let root = b / a;
                if a > 0.0 {
                    if root > start {
                        push_segment(out, start, root, true);
                        push_segment(out, root, inf, false);
                    } else {
                        push_segment(out, start, inf, false);
                    }
                } else if root > start {
                    push_segment(out, start, root, false);
                    push_segment(out, root, inf, true);
                } else {
                    push_segment(out, start, inf, true);
                }
            }
        }
        Exterior::Subgraph(_) | Exterior::Supergraph(_) => {
            let base = start.max(1e-300);
            let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max).max(base);
            let mut point = vec![0.0; x.len()];
            let mut member = |r: f64| -> Result<bool> {
                for i in 0..x.len() {
                    point[i] = x[i] + r * omega[i];
                }
                ext.contains(&point)
            };
            let mut a = start;
            let mut state = member(start + 1e-12 * scale)?;
            let mut r = if start > 0.0 { start } else { scale * 1e-6 };
            let end = scale * GRAPH_RAY_SPAN;
            while r < end {
                let next = r * GRAPH_RAY_RATIO;
                let next_state = member(next)?;
                if next_state != state {
                    let (mut lo, mut hi) = (r, next);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if member(mid)? == state {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    push_segment(out, a, hi, state);
                    a = hi;
                    state = next_state;
                }
                r = next;
            }
            push_segment(out, a, inf, state);
        }
    }
    Ok(())
}

#[inline]
fn power_integral(a: f64, b: f64, s: f64) -> f64 {
    let tail_b = if b.is_finite() { b.powf(-s) } else { 0.0 };
    (a.powf(-s) - tail_b) / s
}

/// Directions on the full sphere with weights, plus a flag for the nested
/// half-resolution subset. Azimuths are offset by half a step so that no
/// direction lies in a coordinate plane.
fn sphere_directions(dim: usize, m: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<bool>) {
    let mut dirs = vec![];
    let mut weights = vec![];
    let mut coarse = vec![];
    match dim {
        2 => {
            for k in 0..m {
                let phi = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                dirs.push(vec![phi.cos(), phi.sin()]);
                weights.push(2.0 * PI / m as f64);
                coarse.push(k % 2 == 0);
            }
        }
        _ => {
            let q = (m / 4).max(8);
            let (z, wz) = gauss_legendre(q);
            for (zi, wi) in z.iter().zip(&wz) {
                let rho = (1.0 - zi * zi).sqrt();
                for k in 0..m {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    dirs.push(vec![rho * phi.cos(), rho * phi.sin(), *zi]);
                    weights.push(wi * 2.0 * PI / m as f64);
                    coarse.push(k % 2 == 0);
                }
            }
        }
    }
    (dirs, weights, coarse)
}

/// `∫_{ext ∖ box} |x − y|^{-(N+s)} dy` and an angular error estimate.
fn exterior_potential(
    set: &VoxelSet,
    x: &[f64],
    s: f64,
    dirs: &(Vec<Vec<f64>>, Vec<f64>, Vec<bool>),
) -> Result<(f64, f64)> {
    let mut segs = Vec::new();
    let mut fine = Vec::with_capacity(dirs.0.len());
    let mut coarse = Vec::with_capacity(dirs.0.len());
    for ((omega, w), c) in dirs.0.iter().zip(&dirs.1).zip(&dirs.2) {
        // only the part of the ray outside the voxel box counts
        let grid = &set.grid;
        let upper = grid.upper();
        let mut r_exit = f64::INFINITY;
        for i in 0..grid.dim() {
            if omega[i] > 0.0 {
                r_exit = r_exit.min((upper[i] - x[i]) / omega[i]);
            } else if omega[i] < 0.0 {
                r_exit = r_exit.min((grid.lower[i] - x[i]) / omega[i]);
            }
        }
        segs.clear();
        exterior_segments(&set.exterior, x, omega, r_exit.max(0.0), &mut segs)?;
        let ray: f64 = segs.iter().filter(|g| g.2).map(|g| power_integral(g.0, g.1, s)).sum();
        fine.push(w * ray);
        coarse.push(if *c { 2.0 * w * ray } else { 0.0 });
    }
    let v = pairwise_sum(&fine);
    Ok((v, (v - pairwise_sum(&coarse)).abs()))
}

/// `𝓘_s(X, Y)` for two sets on the same voxel grid. At most one of them may
/// extend beyond the voxel box.
pub fn interaction(
    x: &VoxelSet,
    y: &VoxelSet,
    params: &FractionalParams,
    quad: &SetQuadrature,
) -> Result<InteractionReport> {
    let kernel = CubeKernel::new(params)?;
    interaction_with(&kernel, x, y, quad)
}

pub fn interaction_with(
    kernel: &CubeKernel,
    x: &VoxelSet,
    y: &VoxelSet,
    quad: &SetQuadrature,
) -> Result<InteractionReport> {
    quad.validate()?;
    if x.grid != y.grid {
        return Err(Error::config("interaction requires both sets on the same voxel grid"));
    }
    if x.dim() != kernel.dim {
        return Err(Error::config("voxel grid dimension does not match N = n + 1"));
    }
    if x.indicator.iter().zip(&y.indicator).any(|(a, b)| *a && *b) {
        return Err(Error::domain("interaction of overlapping sets (shared voxels)"));
    }
    if !x.exterior.is_empty() && !y.exterior.is_empty() {
        return Err(Error::domain(
            "both sets extend beyond the voxel box; their exterior interaction is not finite or they overlap",
        ));
    }
    // canonical order so that interaction(X, Y) and interaction(Y, X) run the
    // same computation
    let swap = if !x.exterior.is_empty() {
        true
    } else if !y.exterior.is_empty() {
        false
    } else {
        match x.indicator.iter().zip(&y.indicator).position(|(a, b)| a != b) {
            Some(k) => y.indicator[k],
            None => false,
        }
    };
    let (a, b) = if swap { (y, x) } else { (x, y) };
    let grid = &a.grid;
    let h = grid.spacing;
    let dim = grid.dim();
    let a_idx: Vec<usize> = (0..grid.len()).filter(|&k| a.indicator[k]).collect();
    let b_idx: Vec<Vec<i64>> = (0..grid.len())
        .filter(|&k| b.indicator[k])
        .map(|k| grid.multi_index(k).into_iter().map(|v| v as i64).collect())
        .collect();
    let dirs = sphere_directions(dim, quad.exterior_directions);
    let scale = h.powf(dim as f64 - kernel.s);
    let rows = a_idx
        .par_iter()
        .map(|&i| -> Result<(f64, f64)> {
            let mi: Vec<i64> = grid.multi_index(i).into_iter().map(|v| v as i64).collect();
            let mut sum = 0.0;
            let mut err = 0.0;
            let mut k = vec![0i64; dim];
            for mj in &b_idx {
                let mut far = false;
                for d in 0..dim {
                    k[d] = mj[d] - mi[d];
                    far |= k[d].abs() > NEAR;
                }
                sum += kernel.t(&k);
                if far {
                    err += kernel.far_error(&k);
                }
            }
            let mut value = scale * sum;
            let mut error = scale * (err + 1e-10 * sum);
            if !b.exterior.is_empty() {
                let center = grid.center(i);
                let (phi, ang) = exterior_potential(b, &center, kernel.s, &dirs)?;
                // midpoint rule in x: relative error ~ (h/d)²/24 with d the
                // distance to the box boundary
                let upper = grid.upper();
                let d = (0..dim)
                    .map(|q| (center[q] - grid.lower[q]).min(upper[q] - center[q]))
                    .fold(f64::INFINITY, f64::min);
                let vol = h.powi(dim as i32);
                value += vol * phi;
                error += vol * (ang + phi * (kernel.p * (kernel.p + 2.0)) * (h / d).powi(2) / 24.0);
            }
            Ok((value, error))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(InteractionReport { value: pairwise_sum(&values), error: pairwise_sum(&errors) })
}

fn restrict(set: &VoxelSet, keep: impl Fn(usize) -> bool, exterior: Exterior) -> VoxelSet {
    VoxelSet {
        grid: set.grid.clone(),
        indicator: set.indicator.iter().enumerate().map(|(k, &b)| b && keep(k)).collect(),
        exterior,
    }
}

/// `Per_s(E, Ω) = 𝓘(E∩Ω, E^c∩Ω) + 𝓘(E∩Ω, E^c∖Ω) + 𝓘(E∖Ω, E^c∩Ω)`, with Ω
/// represented by the voxels whose centers lie in Ω.
pub fn s_perimeter(
    e: &VoxelSet,
    omega: &Omega,
    params: &FractionalParams,
    quad: &SetQuadrature,
) -> Result<PerimeterReport> {
    let kernel = CubeKernel::new(params)?;
    let grid = &e.grid;
    let (lo, hi) = omega.bounds();
    let upper = grid.upper();
    if lo.len() != grid.dim() {
        return Err(Error::config("Ω dimension does not match the voxel grid"));
    }
    for i in 0..grid.dim() {
        if lo[i] < grid.lower[i] + grid.spacing || hi[i] > upper[i] - grid.spacing {
            return Err(Error::Unsupported(
                "Ω must lie inside the voxel box with a margin of one voxel".into(),
            ));
        }
    }
    let in_omega: Vec<bool> = (0..grid.len()).map(|k| omega.contains(&grid.center(k))).collect();
    let ec = e.complement();
    let e_in = restrict(e, |k| in_omega[k], Exterior::Empty);
    let ec_in = restrict(&ec, |k| in_omega[k], Exterior::Empty);
    let e_out = restrict(e, |k| !in_omega[k], e.exterior.clone());
    let ec_out = restrict(&ec, |k| !in_omega[k], ec.exterior.clone());
    let inside_inside = interaction_with(&kernel, &e_in, &ec_in, quad)?;
    let inside_outside = interaction_with(&kernel, &e_in, &ec_out, quad)?;
    let outside_inside = interaction_with(&kernel, &e_out, &ec_in, quad)?;

    // boundary layer of Ω: voxels with a face neighbour on the other side
    let layer: Vec<usize> = (0..grid.len())
        .filter(|&k| {
            let m = grid.multi_index(k);
            (0..grid.dim()).any(|axis| {
                [-1i64, 1].iter().any(|&d| {
                    let v = m[axis] as i64 + d;
                    if v < 0 || v >= grid.shape[axis] as i64 {
                        return false;
                    }
                    let mut nb = m.clone();
                    nb[axis] = v as usize;
                    in_omega[grid.flat_index(&nb)] != in_omega[k]
                })
            })
        })
        .collect();
    let layer_mass = layer
        .par_iter()
        .map(|&k| -> Result<f64> {
            let single = |set: &VoxelSet| restrict(set, |j| j == k, Exterior::Empty);
            let (own, other) = if e.indicator[k] { (single(e), &ec) } else { (single(&ec), e) };
            Ok(interaction_with(&kernel, &own, other, quad)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let value = inside_inside.value + inside_outside.value + outside_inside.value;
    let quadrature_error = inside_inside.error + inside_outside.error + outside_inside.error;
    Ok(PerimeterReport {
        inside_inside,
        inside_outside,
        outside_inside,
        value,
        quadrature_error,
        voxelization_error: 0.5 * pairwise_sum(&layer_mass),
    })
}

/// `ℋ_s^E(x) = p.v. ∫ (χ_{E^c} − χ_E)(y) |x − y|^{-(N+s)} dy`, computed ray by
/// ray (exact on every voxel segment) with `±ω` paired and `|y − x| < δ`
/// dropped.
pub fn mean_curvature_set(
    e: &VoxelSet,
    x: &[f64],
    params: &FractionalParams,
    quad: &SetQuadrature,
) -> Result<CurvatureReport> {
    quad.validate()?;
    let dim = e.dim();
    if dim != params.ambient_dim() || x.len() != dim {
        return Err(Error::config("set, point and parameters disagree on the dimension"));
    }
    if !(2..=3).contains(&dim) {
        return Err(Error::Unsupported(format!("set curvature in dimension N = {dim}")));
    }
    if x.iter().any(|v| !v.is_finite()) || !e.grid.in_box(x) {
        return Err(Error::domain(format!("evaluation point {x:?} must lie inside the voxel box")));
    }
    check_near_boundary(e, x)?;
    let s = params.s();
    let delta = quad.inner_cutoff;
    // half the sphere: pairs (ω, −ω)
    let (dirs, weights, coarse) = match dim {
        2 => {
            let m = quad.curvature_directions;
            let dirs: Vec<Vec<f64>> = (0..m)
                .map(|k| {
                    let phi = PI * (k as f64 + 0.5) / m as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect();
            (dirs, vec![PI / m as f64; m], (0..m).map(|k| k % 2 == 0).collect::<Vec<_>>())
        }
        _ => {
            let (d, w, c) = sphere_directions(3, quad.curvature_directions);
            // keep the upper hemisphere (z > 0); GL nodes are symmetric
            let mut dirs = vec![];
            let mut weights = vec![];
            let mut coarse = vec![];
            for ((d, w), c) in d.into_iter().zip(w).zip(c) {
                if d[2] > 0.0 {
                    dirs.push(d);
                    weights.push(w);
                    coarse.push(c);
                }
            }
            (dirs, weights, coarse)
        }
    };
    let rays = dirs
        .par_iter()
        .map(|omega| -> Result<(f64, f64)> {
            let minus: Vec<f64> = omega.iter().map(|v| -v).collect();
            let mut segs = Vec::new();
            let mut at = |r0: f64| -> Result<f64> {
                let mut total = 0.0;
                for w in [omega.as_slice(), minus.as_slice()] {
                    ray_segments(e, x, w, r0, &mut segs)?;
                    for &(a, b, inside) in &segs {
                        let v = power_integral(a, b, s);
                        total += if inside { -v } else { v };
                    }
                }
                Ok(total)
            };
            Ok((at(delta)?, at(2.0 * delta)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let fine: Vec<f64> = rays.iter().zip(&weights).map(|(r, w)| w * r.0).collect();
    let wide: Vec<f64> = rays.iter().zip(&weights).map(|(r, w)| w * r.1).collect();
    let coarse_v: Vec<f64> =
        rays.iter().zip(&weights).zip(&coarse).map(|((r, w), c)| if *c { 2.0 * w * r.0 } else { 0.0 }).collect();
    let value = pairwise_sum(&fine);
    let value_2delta = pairwise_sum(&wide);
    // the dropped ball contributes ~ C δ^{1-s}; extrapolate from δ and 2δ
    let inner_error = 2.0 * (value - value_2delta).abs() / (2f64.powf(1.0 - s) - 1.0);
    let angular_error = (value - pairwise_sum(&coarse_v)).abs();
    Ok(CurvatureReport {
        point: x.to_vec(),
        value,
        inner_error,
        tail_error: 0.0,
        quadrature_error: angular_error + voxel_error(e, x, s, delta),
        kernel_error: 0.0,
    })
}

/// Half the kernel mass, seen from `x` beyond `δ`, of the voxels on the
/// voxelized boundary: the true set and its voxelization differ only there.
fn voxel_error(e: &VoxelSet, x: &[f64], s: f64, delta: f64) -> f64 {
    let grid = &e.grid;
    let dim = grid.dim();
    let vol = grid.spacing.powi(dim as i32);
    let masses: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let c = grid.center(k);
            let r2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if r2 <= delta * delta || !on_voxel_boundary(e, k) {
                return 0.0;
            }
            vol * r2.powf(-0.5 * (dim as f64 + s))
        })
        .collect();
    0.5 * pairwise_sum(&masses)
}

fn on_voxel_boundary(e: &VoxelSet, k: usize) -> bool {
    let grid = &e.grid;
    let m = grid.multi_index(k);
    let mut nb = m.clone();
    for axis in 0..grid.dim() {
        for d in [-1i64, 1] {
            let v = m[axis] as i64 + d;
            if v < 0 || v >= grid.shape[axis] as i64 {
                continue;
            }
            nb[axis] = v as usize;
            let differs = e.indicator[grid.flat_index(&nb)] != e.indicator[k];
            nb[axis] = m[axis];
            if differs {
                return true;
            }
        }
    }
    false
}

/// `x` must be within one voxel of the voxelized boundary: the voxels within
/// one spacing of `x` must contain both phases.
fn check_near_boundary(e: &VoxelSet, x: &[f64]) -> Result<()> {
    let dim = x.len();
    let h = e.grid.spacing;
    let mut seen_in = false;
    let mut seen_out = false;
    let mut probe = vec![0.0; dim];
    for code in 0..3usize.pow(dim as u32) {
        let mut rest = code;
        for i in 0..dim {
            probe[i] = x[i] + h * ((rest % 3) as f64 - 1.0);
            rest /= 3;
        }
        if e.contains(&probe)? {
            seen_in = true;
        } else {
            seen_out = true;
        }
    }
    if seen_in && seen_out {
        Ok(())
    } else {
        Err(Error::domain(format!("point {x:?} is not within one voxel of the set boundary")))
    }
}
