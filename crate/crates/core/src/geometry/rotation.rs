use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{dot, Graph, SplitCone};
use crate::{Error, Result};

/// Rotation angle in the `(x_n, x_{n+1})` plane, restricted to `(-π/2, π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationTheta {
    theta: f64,
}

impl RotationTheta {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta.abs() < FRAC_PI_2) {
            return Err(Error::domain(format!("rotation angle {theta} outside (-π/2, π/2)")));
        }
        Ok(Self { theta })
    }

    /// The angle that maps a hyperplane of slope `kappa` in `x_n` to a
    /// horizontal one.
    pub fn from_slope(kappa: f64) -> Result<Self> {
        Self::new(kappa.atan())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `y = R_θ x`: `ŷ = x̂`, `y_n = cos θ x_n + sin θ x_{n+1}`,
    /// `y_{n+1} = −sin θ x_n + cos θ x_{n+1}`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (s, c) = self.theta.sin_cos();
        let mut y = x.to_vec();
        let k = x.len();
        if k >= 2 {
            let (a, b) = (x[k - 2], x[k - 1]);
            y[k - 2] = c * a + s * b;
            y[k - 1] = -s * a + c * b;
        }
        y
    }

    pub fn inverse(&self, y: &[f64]) -> Vec<f64> {
        Self { theta: -self.theta }.apply(y)
    }
}

/// A set in ℝᴺ described by a level function: points with negative level
/// are inside.
pub trait MembershipPredicate: Send + Sync {
    fn ambient_dim(&self) -> usize;

    fn level(&self, y: &[f64]) -> Result<f64>;

    fn contains(&self, y: &[f64]) -> Result<bool> {
        Ok(self.level(y)? < 0.0)
    }
}

/// `{y : normal·y < offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().all(|v| *v == 0.0) || normal.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("half-space normal must be finite and non-zero"));
        }
        Ok(Self { normal, offset })
    }
}

impl MembershipPredicate for HalfSpace {
    fn ambient_dim(&self) -> usize {
        self.normal.len()
    }

    fn level(&self, y: &[f64]) -> Result<f64> {
        Ok(dot(&self.normal, y) - self.offset)
    }
}

/// The subgraph of a split cone `v⋆(x̂) + κx_n`, seen in rotated coordinates
/// `y = R_θ x`.
#[derive(Debug, Clone)]
pub struct RotatedSubgraph {
    cone: SplitCone,
    rotation: RotationTheta,
}

impl RotatedSubgraph {
    pub fn rotation(&self) -> RotationTheta {
        self.rotation
    }

    pub fn cone(&self) -> &SplitCone {
        &self.cone
    }

    /// Level function of the reduced cone `{y_{n+1} < cos θ·v⋆(ŷ)}`; it is
    /// `cos θ` times the rotated level.
    pub fn reduced_level(&self, y: &[f64]) -> Result<f64> {
        let k = y.len();
        let c = self.rotation.theta.cos();
        Ok(y[k - 1] - c * self.cone.v_star.value(&y[..k - 2])?)
    }
}

impl MembershipPredicate for RotatedSubgraph {
    fn ambient_dim(&self) -> usize {
        self.cone.dim() + 1
    }

    fn level(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.ambient_dim() {
            return Err(Error::domain("probe point has the wrong dimension"));
        }
        let x = self.rotation.inverse(y);
        let n = x.len() - 1;
        Ok(x[n] - self.cone.value(&x[..n])?)
    }
}

/// Rotates the subgraph of `v0 = v⋆(x̂) + κx_n` by `theta`, which must equal
/// `arctan κ`.
///
/// Degree-one homogeneity of `v⋆` is probed at a few points before the
/// rotated predicate is returned.
pub fn rotate_cone(v0: &SplitCone, theta: RotationTheta) -> Result<RotatedSubgraph> {
    let expected = v0.kappa.atan();
    if (theta.theta - expected).abs() > 1e-10 {
        return Err(Error::Consistency(format!(
            "rotation angle {} differs from arctan(κ) = {expected}",
            theta.theta
        )));
    }
    let m = v0.v_star.dim();
    for k in 0..8 {
        let probe: Vec<f64> = (0..m).map(|i| ((k * (i + 2) + 1) as f64 * 0.7).sin()).collect();
        let base = v0.v_star.value(&probe)?;
        for t in [0.5, 2.0] {
            let scaled: Vec<f64> = probe.iter().map(|p| t * p).collect();
            let v = v0.v_star.value(&scaled)?;
            if (v - t * base).abs() > 1e-10 * (1.0 + t * base.abs()) {
                return Err(Error::Precondition(format!("v⋆ is not 1-homogeneous at {probe:?}")));
            }
        }
    }
    Ok(RotatedSubgraph { cone: v0.clone(), rotation: theta })
}
