//! Node-level checks of the two integrability bounds behind the graph
//! operators:
//!
//! * bound A: `|F(A) + F(a)| ≤ ‖D²u‖·|θ|` near `x` (the pair integrand is
//!   `O(|θ|^{1−n−s})`), with `‖D²u‖` measured from second differences on the
//!   same nodes. This holds for any `u` because `F` is 1-Lipschitz; what
//!   distinguishes smooth `u` is that the fitted constant `max |pair|/|θ|`
//!   converges as the node spacing is refined.
//! * bound B: `|J(x + h e₁, θ) − J(x, θ)|/h ≤ C·min{1, |θ|}/|θ|^{n+s}` with
//!   `J = [F(A) + F(a)]/|θ|^{n+s}`, again with the constant fitted and
//!   required to be stable under refinement.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::Graph;
use crate::operators::HemisphereRule;
use crate::{Error, FractionalParams, Kernel, KernelAccuracy, Result};

pub const BOUND_A: &str = "bound-a: |F(A)+F(a)| <= |D2u|*|theta|, fitted constant stable";
pub const BOUND_B: &str = "bound-b: difference quotient <= C*min(1,|theta|)/|theta|^(n+s), fitted constant stable";

#[derive(Clone)]
pub struct BoundFixture {
    pub name: String,
    pub graph: Arc<dyn Graph>,
    /// Evaluation points straddle this point along `e₁`.
    pub center: Vec<f64>,
    /// Declared singular point (cone apex); the local ball shrinks towards it.
    pub apex: Option<Vec<f64>>,
}

impl std::fmt::Debug for BoundFixture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundFixture").field("name", &self.name).field("center", &self.center).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// Radius of the local ball for bound A away from any apex.
    pub ball_radius: f64,
    /// Outer radius of the nodes for bound B.
    pub outer_radius: f64,
    /// Directions on the half circle (n = 2).
    pub directions: usize,
    /// Relative slack of the node-wise bound-A inequality.
    pub margin: f64,
    /// Allowed relative drift of fitted constants under halving of `h`.
    pub stability: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { ball_radius: 0.5, outer_radius: 4.0, directions: 8, margin: 1e-9, stability: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsMeasurement {
    pub h: f64,
    pub points: usize,
    pub nodes: usize,
    /// `max |u(x+θ) + u(x−θ) − 2u(x)|/|θ|²` over the bound-A nodes.
    pub second_difference_norm: f64,
    /// `max |F(A) + F(a)|/|θ|` over the bound-A nodes.
    pub constant_a: f64,
    /// Nodes where `|F(A) + F(a)| > ‖D²u‖·|θ|·(1 + margin)`.
    pub node_violations_a: usize,
    /// `max |pair(x + h e₁) − pair(x)|/(h·min{1, |θ|})` over the bound-B nodes.
    pub constant_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsVerdict {
    pub fixture: String,
    pub coarse: BoundsMeasurement,
    pub fine: BoundsMeasurement,
    /// `C(h/2)/C(h)` for both constants.
    pub ratio_a: f64,
    pub ratio_b: f64,
    pub passed: bool,
    pub first_failure: Option<String>,
}

fn radii(h: f64, limit: f64, geometric_to: Option<f64>) -> Vec<f64> {
    let mut out = vec![];
    let mut k = 1.0;
    while k * h < limit * (1.0 - 1e-12) {
        out.push(k * h);
        k += 1.0;
    }
    if let Some(outer) = geometric_to {
        let mut r = out.last().copied().unwrap_or(h).max(limit);
        while r < outer {
            out.push(r);
            r *= 1.25;
        }
        out.push(outer);
    }
    out
}

/// Fitted constants at node spacing `h`, from the two evaluation points
/// `center ± (h/2)e₁`.
pub fn measure_bounds(fixture: &BoundFixture, s: f64, h: f64, cfg: &BoundsConfig) -> Result<BoundsMeasurement> {
    let u = fixture.graph.as_ref();
    let n = u.dim();
    if fixture.center.len() != n {
        return Err(Error::config(format!("fixture {} has a center of the wrong dimension", fixture.name)));
    }
    let params = FractionalParams::new(n, s)?;
    if !(h > 0.0 && h < cfg.ball_radius) {
        return Err(Error::config("node spacing must be positive and below the ball radius"));
    }
    let kernel = Kernel::new(params, KernelAccuracy::default())?;
    let slack = 2.0 * kernel.error_bound();
    let dirs = HemisphereRule::new(n, cfg.directions.max(4))?;
    let pair = |x: &[f64], omega: &[f64], rho: f64| -> Result<(f64, f64)> {
        let xp: Vec<f64> = x.iter().zip(omega).map(|(a, w)| a + rho * w).collect();
        let xm: Vec<f64> = x.iter().zip(omega).map(|(a, w)| a - rho * w).collect();
        let (up, um, u0) = (u.value(&xp)?, u.value(&xm)?, u.value(x)?);
        let value = kernel.f((up - u0) / rho) + kernel.f((um - u0) / rho);
        Ok((value, up + um - 2.0 * u0))
    };

    let points: Vec<Vec<f64>> = (-1..1)
        .map(|k| {
            let mut x = fixture.center.clone();
            x[0] += (k as f64 + 0.5) * h;
            x
        })
        .collect();
    let mut nodes = 0;
    let mut d2: f64 = 0.0;
    let mut constant_a: f64 = 0.0;
    let mut a_nodes = vec![];
    for x in &points {
        let ball = match &fixture.apex {
            Some(p) => 0.5 * x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().min(1.0),
            None => cfg.ball_radius,
        };
        for rho in radii(h, ball, None) {
            for omega in &dirs.directions {
                let (value, sd) = pair(x, &omega[..n], rho)?;
                d2 = d2.max(sd.abs() / (rho * rho));
                constant_a = constant_a.max(value.abs() / rho);
                a_nodes.push((value, rho));
                nodes += 1;
            }
        }
    }
    let node_violations_a =
        a_nodes.iter().filter(|(v, rho)| v.abs() > d2 * rho * (1.0 + cfg.margin) + slack).count();

    let mut constant_b: f64 = 0.0;
    for x in &points {
        let mut shifted = x.clone();
        shifted[0] += h;
        for rho in radii(h, 1.0, Some(cfg.outer_radius)) {
            for omega in &dirs.directions {
                let (a, _) = pair(x, &omega[..n], rho)?;
                let (b, _) = pair(&shifted, &omega[..n], rho)?;
                constant_b = constant_b.max((b - a).abs() / (h * rho.min(1.0)));
                nodes += 1;
            }
        }
    }
    Ok(BoundsMeasurement {
        h,
        points: points.len(),
        nodes,
        second_difference_norm: d2,
        constant_a,
        node_violations_a,
        constant_b,
    })
}

fn stable(ratio: f64, tol: f64) -> bool {
    ratio.is_finite() && ratio <= 1.0 + tol && ratio >= 1.0 / (1.0 + tol)
}

fn ratio(fine: f64, coarse: f64) -> f64 {
    if coarse == 0.0 && fine == 0.0 {
        1.0
    } else {
        fine / coarse
    }
}

/// Measures at `h` and `h/2` and checks node-wise validity and stability.
pub fn check_bounds(fixture: &BoundFixture, s: f64, h: f64, cfg: &BoundsConfig) -> Result<BoundsVerdict> {
    let coarse = measure_bounds(fixture, s, h, cfg)?;
    let fine = measure_bounds(fixture, s, 0.5 * h, cfg)?;
    let ratio_a = ratio(fine.constant_a, coarse.constant_a);
    let ratio_b = ratio(fine.constant_b, coarse.constant_b);
    let a_ok = coarse.node_violations_a == 0 && fine.node_violations_a == 0 && stable(ratio_a, cfg.stability);
    let b_ok = stable(ratio_b, cfg.stability);
    let first_failure = if !a_ok {
        Some(BOUND_A.to_string())
    } else if !b_ok {
        Some(BOUND_B.to_string())
    } else {
        None
    };
    Ok(BoundsVerdict {
        fixture: fixture.name.clone(),
        coarse,
        fine,
        ratio_a,
        ratio_b,
        passed: first_failure.is_none(),
        first_failure,
    })
}
