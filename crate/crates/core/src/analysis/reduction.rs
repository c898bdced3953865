//! Two evaluations of the slab integral between the graphs of `f` and `g`:
//! directly in ℝ^{n+1} by Monte Carlo, and through the kernel `F` as an
//! n-dimensional integral.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Graph;
use crate::operators::HemisphereRule;
use crate::quad::adaptive_gk;
use crate::{Error, FractionalParams, Kernel, KernelAccuracy, Result};

pub const DEFAULT_TRUNCATION: f64 = 30.0;
pub const DEFAULT_PARTITIONS: usize = 64;

/// Growth ratio of `sup|g − f|` between radii `2R` and `4R` above which the
/// configuration is rejected as non-integrable.
const SUPERLINEAR_RATIO: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    /// Radius of the truncated cylinder `|θ| < R` in the base variables.
    pub truncation: f64,
    pub partitions: usize,
    /// Directions on the half circle for the F-form (n = 2).
    pub angular_nodes: usize,
    pub radial_tol: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self { truncation: DEFAULT_TRUNCATION, partitions: DEFAULT_PARTITIONS, angular_nodes: 128, radial_tol: 1e-11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRecord {
    pub point: Vec<f64>,
    pub height: f64,
    pub s: f64,
    pub seed: u64,
    pub samples: usize,
    pub truncation: f64,
    /// Slab integral over `|θ| < R` by Monte Carlo.
    pub slab_value: f64,
    pub slab_std_error: f64,
    /// The same truncated integral through `F`.
    pub f_form_value: f64,
    pub f_form_error: f64,
    /// Bound on the contribution of `|θ| > R` (identical for both sides).
    pub tail_bound: f64,
    pub discrepancy: f64,
}

impl ReductionRecord {
    /// Discrepancy in units of the Monte-Carlo standard error.
    pub fn sigmas(&self) -> f64 {
        if self.slab_std_error > 0.0 {
            self.discrepancy / self.slab_std_error
        } else if self.discrepancy == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn sphere_measure(n: usize) -> Result<f64> {
    match n {
        1 => Ok(2.0),
        2 => Ok(2.0 * PI),
        3 => Ok(4.0 * PI),
        _ => Err(Error::Unsupported(format!("slab oracle in base dimension {n}"))),
    }
}

fn random_direction(n: usize, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    match n {
        1 => out[0] = if rng.gen::<f64>() < 0.5 { 1.0 } else { -1.0 },
        2 => {
            let phi = 2.0 * PI * rng.gen::<f64>();
            out[0] = phi.cos();
            out[1] = phi.sin();
        }
        _ => {
            let z = 2.0 * rng.gen::<f64>() - 1.0;
            let phi = 2.0 * PI * rng.gen::<f64>();
            let r = (1.0 - z * z).sqrt();
            out[0] = r * phi.cos();
            out[1] = r * phi.sin();
            out[2] = z;
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let d = v - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.count == 0.0 {
            return self;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * o.count / count,
            m2: self.m2 + o.m2 + d * d * self.count * o.count / count,
        }
    }
}

/// Max of `|g − f|` over the hemisphere directions at `x ± ρω`.
fn gap_at(f: &dyn Graph, g: &dyn Graph, x: &[f64], dirs: &HemisphereRule, rho: f64) -> Result<f64> {
    let n = x.len();
    let mut worst: f64 = 0.0;
    let mut y = vec![0.0; n];
    for omega in &dirs.directions {
        for sign in [1.0, -1.0] {
            for i in 0..n {
                y[i] = x[i] + sign * rho * omega[i];
            }
            worst = worst.max((g.value(&y)? - f.value(&y)?).abs());
        }
    }
    Ok(worst)
}

/// Compares `∫_{f(y) ≤ y_{n+1} < g(y)} |X − Y|^{-(N+s)} dY` (signed where
/// `g < f`), with `X = (x, f(x))`, against its F-form
/// `∫ [F((g(x+θ) − x_{n+1})/|θ|) − F((f(x+θ) − x_{n+1})/|θ|)] |θ|^{-(n+s)} dθ`.
///
/// Both sides are restricted to `|θ| < R`; the remainder is bounded by
/// `tail_bound`. `f` and `g` must agree at `x` and be tangent there for the
/// integrals to converge.
pub fn dimension_reduction_oracle(
    f: &dyn Graph,
    g: &dyn Graph,
    x: &[f64],
    params: &FractionalParams,
    mc_samples: usize,
    seed: u64,
    cfg: &ReductionConfig,
) -> Result<ReductionRecord> {
    let n = params.n();
    if f.dim() != n || g.dim() != n || x.len() != n {
        return Err(Error::config("f, g, x and the parameters disagree on n"));
    }
    if !(cfg.truncation > 1.0 && cfg.truncation.is_finite()) || cfg.partitions == 0 || mc_samples == 0 {
        return Err(Error::config("oracle needs truncation > 1, at least one partition and one sample"));
    }
    let s = params.s();
    let big_n = params.ambient_dim() as f64;
    let area = sphere_measure(n)?;
    let r = cfg.truncation;
    let height = f.value(x)?;
    let gx = g.value(x)?;
    if (gx - height).abs() > 1e-12 * height.abs().max(1.0) {
        return Err(Error::Precondition(format!("f(x) = {height} and g(x) = {gx} differ")));
    }
    let dirs = HemisphereRule::new(n, cfg.angular_nodes)?;

    // integrability at the origin and at infinity
    let probe = 1e-6;
    if gap_at(f, g, x, &dirs, probe)? / probe > 1e-3 {
        return Err(Error::domain("f and g are not tangent at x; the slab integral diverges"));
    }
    let far = [gap_at(f, g, x, &dirs, r)?, gap_at(f, g, x, &dirs, 2.0 * r)?, gap_at(f, g, x, &dirs, 4.0 * r)?];
    if far[1] > 0.0 && far[2] / far[1] > SUPERLINEAR_RATIO {
        return Err(Error::domain(format!(
            "g − f grows superlinearly ({:.3e} at 2R, {:.3e} at 4R)",
            far[1], far[2]
        )));
    }
    let kernel = Kernel::new(*params, KernelAccuracy::default())?;
    let f_inf = kernel.f_infinity();
    let mut tail_bound = area * 2.0 * f_inf * r.powf(-s) / s;
    let sup_gap = far.iter().copied().fold(0.0, f64::max);
    if far[2] <= 1.1 * far[0].max(far[1]) {
        tail_bound = tail_bound.min(area * sup_gap * r.powf(-1.0 - s) / (1.0 + s));
    }

    // Monte Carlo over the cylinder: ρ = R·U^{1/(1−s)}, uniform direction,
    // y_{n+1} uniform across the slab.
    let per = mc_samples / cfg.partitions;
    let extra = mc_samples % cfg.partitions;
    let inv_density_scale = area * r.powf(1.0 - s) / (1.0 - s);
    let parts = (0..cfg.partitions)
        .into_par_iter()
        .map(|p| -> Result<Moments> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let count = per + usize::from(p < extra);
            let mut m = Moments::default();
            let mut omega = [0.0; 3];
            let mut y = vec![0.0; n];
            for _ in 0..count {
                let rho = r * rng.gen::<f64>().powf(1.0 / (1.0 - s));
                random_direction(n, &mut rng, &mut omega);
                let t = rng.gen::<f64>();
                if rho == 0.0 {
                    m.push(0.0);
                    continue;
                }
                for i in 0..n {
                    y[i] = x[i] + rho * omega[i];
                }
                let (fy, gy) = (f.value(&y)?, g.value(&y)?);
                let gap = gy - fy;
                if gap == 0.0 {
                    m.push(0.0);
                    continue;
                }
                let z = fy.min(gy) + gap.abs() * t - height;
                let dist2 = rho * rho + z * z;
                let weight = inv_density_scale * rho.powi(n as i32 - 1) * rho.powf(s);
                m.push(gap * dist2.powf(-0.5 * (big_n + s)) * weight);
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let slab_value = total.mean;
    let slab_std_error = if total.count > 1.0 { (total.m2 / (total.count - 1.0) / total.count).sqrt() } else { 0.0 };

    // F-form: paired rays, ρ = t^{1/(1−s)} removes the ρ^{-s} singularity.
    let tmax = r.powf(1.0 - s);
    let mut breaks: Vec<f64> = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .filter(|b| **b < r)
        .map(|b: &f64| b.powf(1.0 - s))
        .collect();
    breaks.push(tmax);
    let rays = dirs
        .directions
        .par_iter()
        .map(|omega| -> Result<(f64, f64)> {
            let failure = std::cell::RefCell::new(None);
            let integrand = |t: f64| {
                if t <= 0.0 {
                    return 0.0;
                }
                let rho = t.powf(1.0 / (1.0 - s));
                let mut acc = 0.0;
                let mut y = [0.0; 3];
                for sign in [1.0, -1.0] {
                    for i in 0..n {
                        y[i] = x[i] + sign * rho * omega[i];
                    }
                    match (f.value(&y[..n]), g.value(&y[..n])) {
                        (Ok(fy), Ok(gy)) => {
                            // midpoint/difference form: `(g − f)/ρ` keeps its
                            // accuracy when both heights cancel against u(x)
                            let floor = 16.0 * f64::EPSILON * (gy.abs() + fy.abs() + 2.0 * height.abs());
                            if (gy - fy).abs() > floor {
                                let d = (gy - fy) / rho;
                                let m = (0.5 * (gy + fy) - height) / rho;
                                acc += kernel.f(m + 0.5 * d) - kernel.f(m - 0.5 * d);
                            }
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            failure.borrow_mut().get_or_insert(e);
                        }
                    }
                }
                acc / rho / (1.0 - s)
            };
            let q = adaptive_gk(integrand, &breaks, cfg.radial_tol, 2000);
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok((q.value, q.error))
        })
        .collect::<Result<Vec<_>>>()?;
    let f_form_value: f64 = rays.iter().zip(&dirs.weights).map(|(r, w)| w * r.0).sum();
    let mut f_form_error: f64 = rays.iter().zip(&dirs.weights).map(|(r, w)| w * r.1).sum();
    if let Some(coarse) = &dirs.coarse_weights {
        let c: f64 = rays.iter().zip(coarse).map(|(r, w)| w * r.0).sum();
        f_form_error += (f_form_value - c).abs();
    }
    // kernel interpolation error, ρ ≥ 1 (below, the arguments are small and
    // the interpolant is accurate to round-off)
    f_form_error += 4.0 * kernel.error_bound() * dirs.measure / s;

    Ok(ReductionRecord {
        point: x.to_vec(),
        height,
        s,
        seed,
        samples: mc_samples,
        truncation: r,
        slab_value,
        slab_std_error,
        f_form_value,
        f_form_error,
        tail_bound,
        discrepancy: (slab_value - f_form_value).abs(),
    })
}
