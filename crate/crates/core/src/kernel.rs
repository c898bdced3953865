//! The scalar kernel primitive
//! `F(r) = ∫_0^r (1 + τ²)^{-(n+1+s)/2} dτ` and its derivative.
//!
//! `F` is odd, strictly increasing and 1-Lipschitz. Every curvature
//! evaluation calls it at millions of points, so [`Kernel`] caches a
//! piecewise Chebyshev interpolant on `[0, R_SPLIT]`, certified against
//! adaptive quadrature at construction, and reflects it for negative
//! arguments. Beyond `R_SPLIT` the integrand is expanded in powers of
//! `1/τ²` and integrated term by term.

use serde::{Deserialize, Serialize};

use crate::quad::adaptive_gk;
use crate::{Error, Result};

/// Arguments beyond this radius use the asymptotic tail series.
pub const R_SPLIT: f64 = 50.0;

const S_MIN: f64 = 0.05;
const S_MAX: f64 = 0.95;
const CHEB_DEGREE: usize = 24;
const TAIL_TERMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalParams {
    n: usize,
    s: f64,
}

impl FractionalParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::config("base dimension n must be at least 1"));
        }
        if !s.is_finite() || !(S_MIN..=S_MAX).contains(&s) {
            return Err(Error::config(format!(
                "fractional exponent s = {s} outside the supported range [{S_MIN}, {S_MAX}]"
            )));
        }
        Ok(Self { n, s })
    }

    /// Base dimension `n` (the graph lives over ℝⁿ).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Ambient dimension `N = n + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    /// The exponent `(n+1+s)/2` of `F'`.
    pub fn exponent(&self) -> f64 {
        0.5 * (self.n as f64 + 1.0 + self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelAccuracy {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for KernelAccuracy {
    fn default() -> Self {
        Self { abs_tol: 1e-12, max_subdivisions: 200 }
    }
}

impl KernelAccuracy {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 10.0 * f64::EPSILON) || !self.abs_tol.is_finite() {
            return Err(Error::config(format!(
                "kernel abs_tol = {} must be finite and at least 10 machine epsilons",
                self.abs_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::config("kernel max_subdivisions must be positive"));
        }
        Ok(())
    }
}

fn check_finite(r: f64) -> Result<()> {
    if r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("kernel argument {r} is not finite")))
    }
}

fn integrand(alpha: f64) -> impl Fn(f64) -> f64 {
    move |t: f64| (1.0 + t * t).powf(-alpha)
}

/// `∫_r^∞ (1+τ²)^{-α} dτ` for `r ≥ R_SPLIT`, by the binomial series of
/// `(1 + τ^{-2})^{-α}`.
fn tail_integral(r: f64, alpha: f64) -> f64 {
    let mut coeff = 1.0;
    let mut total = 0.0;
    let inv_r2 = 1.0 / (r * r);
    let mut power = r.powf(1.0 - 2.0 * alpha);
    for k in 0..TAIL_TERMS {
        let kf = k as f64;
        total += coeff * power / (2.0 * alpha - 1.0 + 2.0 * kf);
        coeff *= -(alpha + kf) / (kf + 1.0);
        power *= inv_r2;
    }
    total
}

/// `F(r)` by direct adaptive quadrature (no cache). Used to certify the
/// cached interpolant and as the reference route.
pub fn eval_f(r: f64, params: &FractionalParams, acc: &KernelAccuracy) -> Result<f64> {
    check_finite(r)?;
    acc.validate()?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let alpha = params.exponent();
    let x = r.abs();
    let head = adaptive_gk(integrand(alpha), &[0.0, x.min(R_SPLIT)], 0.1 * acc.abs_tol, acc.max_subdivisions).value;
    let value = if x > R_SPLIT { head + tail_integral(R_SPLIT, alpha) - tail_integral(x, alpha) } else { head };
    Ok(value.copysign(r))
}

/// `F'(r) = (1+r²)^{-(n+1+s)/2}`.
pub fn eval_f_prime(r: f64, params: &FractionalParams) -> Result<f64> {
    check_finite(r)?;
    Ok((1.0 + r * r).powf(-params.exponent()))
}

/// `lim_{r→∞} F(r)`.
pub fn f_infinity(params: &FractionalParams, acc: &KernelAccuracy) -> Result<f64> {
    acc.validate()?;
    let alpha = params.exponent();
    let head = adaptive_gk(integrand(alpha), &[0.0, R_SPLIT], 0.1 * acc.abs_tol, acc.max_subdivisions).value;
    Ok(head + tail_integral(R_SPLIT, alpha))
}

/// One Chebyshev–Lobatto panel, evaluated by the barycentric formula.
#[derive(Debug, Clone)]
struct ChebPanel {
    nodes: [f64; CHEB_DEGREE + 1],
    values: [f64; CHEB_DEGREE + 1],
}

impl ChebPanel {
    fn eval(&self, x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=CHEB_DEGREE {
            let diff = x - self.nodes[j];
            if diff == 0.0 {
                return self.values[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == CHEB_DEGREE {
                w *= 0.5;
            }
            let t = w / diff;
            num += t * self.values[j];
            den += t;
        }
        num / den
    }
}

fn panel_breaks() -> Vec<f64> {
    let mut breaks = Vec::new();
    let mut x = 0.0;
    while x < 4.0 {
        breaks.push(x);
        x += 0.25;
    }
    while x < 16.0 {
        breaks.push(x);
        x += 1.0;
    }
    while x < R_SPLIT {
        breaks.push(x);
        x += 2.0;
    }
    breaks.push(R_SPLIT);
    breaks
}

fn panel_index(x: f64) -> usize {
    if x < 4.0 {
        (x / 0.25) as usize
    } else if x < 16.0 {
        16 + (x - 4.0) as usize
    } else {
        (28 + ((x - 16.0) / 2.0) as usize).min(44)
    }
}

/// Cached, immutable evaluator for `F` and `F'` at fixed parameters.
///
/// The interpolant is odd by construction (fit on `r ≥ 0`, reflected), so
/// `f(-r) == -f(r)` holds bit for bit.
#[derive(Debug, Clone)]
pub struct Kernel {
    params: FractionalParams,
    accuracy: KernelAccuracy,
    alpha: f64,
    panels: Vec<ChebPanel>,
    f_split: f64,
    tail_split: f64,
    certified_error: f64,
}

impl Kernel {
    pub fn new(params: FractionalParams, accuracy: KernelAccuracy) -> Result<Self> {
        accuracy.validate()?;
        let alpha = params.exponent();
        let g = integrand(alpha);
        let quad = |a: f64, b: f64| adaptive_gk(&g, &[a, b], 1e-3 * accuracy.abs_tol, accuracy.max_subdivisions).value;

        let breaks = panel_breaks();
        let mut panels = Vec::with_capacity(breaks.len() - 1);
        let mut f_left = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut nodes = [0.0; CHEB_DEGREE + 1];
            let mut values = [0.0; CHEB_DEGREE + 1];
            for j in 0..=CHEB_DEGREE {
                let t = (std::f64::consts::PI * j as f64 / CHEB_DEGREE as f64).cos();
                let x = 0.5 * (a + b) - 0.5 * (b - a) * t;
                nodes[j] = x;
                values[j] = f_left + quad(a, x);
            }
            f_left = values[CHEB_DEGREE];
            panels.push(ChebPanel { nodes, values });
        }

        let mut kernel = Self {
            params,
            accuracy,
            alpha,
            panels,
            f_split: f_left,
            tail_split: tail_integral(R_SPLIT, alpha),
            certified_error: 0.0,
        };

        // certify between the interpolation nodes against direct quadrature
        let mut worst: f64 = 0.0;
        for (p, panel) in kernel.panels.iter().enumerate() {
            let a = breaks[p];
            let f_a = panel.values[0];
            for j in 0..CHEB_DEGREE {
                let x = 0.5 * (panel.nodes[j] + panel.nodes[j + 1]);
                let reference = f_a + quad(a, x);
                worst = worst.max((panel.eval(x) - reference).abs());
            }
        }
        if worst > accuracy.abs_tol {
            return Err(Error::config(format!(
                "kernel interpolant error {worst:e} exceeds abs_tol {:e}",
                accuracy.abs_tol
            )));
        }
        kernel.certified_error = worst.max(f64::EPSILON);
        Ok(kernel)
    }

    pub fn with_defaults(params: FractionalParams) -> Result<Self> {
        Self::new(params, KernelAccuracy::default())
    }

    pub fn params(&self) -> &FractionalParams {
        &self.params
    }

    pub fn accuracy(&self) -> &KernelAccuracy {
        &self.accuracy
    }

    /// Largest deviation from direct quadrature observed during certification.
    pub fn certified_error(&self) -> f64 {
        self.certified_error
    }

    /// Error bound for a single evaluation of [`Kernel::f`].
    pub fn error_bound(&self) -> f64 {
        self.accuracy.abs_tol
    }

    /// `F(r)` for finite `r`. Non-finite input yields NaN; use
    /// [`Kernel::eval_f`] for a checked call.
    #[inline]
    pub fn f(&self, r: f64) -> f64 {
        let x = r.abs();
        let v = if x <= R_SPLIT {
            self.panels[panel_index(x)].eval(x)
        } else if x.is_finite() {
            self.f_split + self.tail_split - tail_integral(x, self.alpha)
        } else {
            f64::NAN
        };
        if r < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn eval_f(&self, r: f64) -> Result<f64> {
        check_finite(r)?;
        Ok(self.f(r))
    }

    #[inline]
    pub fn f_prime(&self, r: f64) -> f64 {
        (1.0 + r * r).powf(-self.alpha)
    }

    pub fn eval_f_prime(&self, r: f64) -> Result<f64> {
        check_finite(r)?;
        Ok(self.f_prime(r))
    }

    pub fn f_infinity(&self) -> f64 {
        self.f_split + self.tail_split
    }

    /// `sup |F''|`, the Lipschitz constant of `F'`.
    pub fn f_second_bound(&self) -> f64 {
        let a = self.alpha;
        let r = 1.0 / (2.0 * a + 1.0).sqrt();
        2.0 * a * r * (1.0 + r * r).powf(-a - 1.0)
    }
}
