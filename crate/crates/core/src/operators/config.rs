use serde::{Deserialize, Serialize};

use crate::kernel::KernelAccuracy;
use crate::{Error, Result};

/// How the far field beyond the outer cutoff is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// Fit `G₀ + G₁/ρ + G₂/ρ²` to the integrand numerator along each ray and
    /// integrate it analytically. Requires a graph with a far-field model.
    AnalyticAffine,
    /// Drop the tail and report a bound for it.
    BoundOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialMode {
    /// Bisect the worst panel until the radial tolerance is met.
    Adaptive,
    /// One Gauss–Kronrod rule per panel, no refinement (cheap, used by the
    /// solver and by the node-level diagnostics).
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Radius `δ` of the excised singular ball.
    pub inner_cutoff: f64,
    /// Truncation radius `R` of the radial integral.
    pub outer_cutoff: f64,
    /// Number of directions on the half circle (n = 2) or in azimuth (n = 3);
    /// the angular error estimate compares with every other direction.
    pub angular_nodes: usize,
    /// Absolute tolerance per ray for adaptive radial integration.
    pub radial_tol: f64,
    pub max_subdivisions: usize,
    pub radial_mode: RadialMode,
    pub tail_mode: TailMode,
    /// Geometric ratio of radial panels away from grid resolution.
    pub panel_ratio: f64,
    pub kernel: KernelAccuracy,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            inner_cutoff: 1e-3,
            outer_cutoff: 20.0,
            angular_nodes: 64,
            radial_tol: 1e-10,
            max_subdivisions: 400,
            radial_mode: RadialMode::Adaptive,
            tail_mode: TailMode::AnalyticAffine,
            panel_ratio: 1.5,
            kernel: KernelAccuracy::default(),
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_cutoff > 0.0 && self.inner_cutoff < 1.0) {
            return Err(Error::config(format!("inner_cutoff = {} must lie in (0, 1)", self.inner_cutoff)));
        }
        if !(self.outer_cutoff > 1.0 && self.outer_cutoff.is_finite()) {
            return Err(Error::config(format!("outer_cutoff = {} must be finite and > 1", self.outer_cutoff)));
        }
        if self.angular_nodes < 4 || self.angular_nodes % 2 != 0 {
            return Err(Error::config("angular_nodes must be an even number ≥ 4"));
        }
        if !(self.radial_tol > 0.0) {
            return Err(Error::config("radial_tol must be positive"));
        }
        if !(self.panel_ratio > 1.0 && self.panel_ratio <= 4.0) {
            return Err(Error::config("panel_ratio must lie in (1, 4]"));
        }
        self.kernel.validate()
    }
}

/// One curvature evaluation with its error budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub value: f64,
    /// Bound for the excised singular ball.
    pub inner_error: f64,
    /// Far-field truncation/fit error.
    pub tail_error: f64,
    /// Radial and angular quadrature error estimates.
    pub quadrature_error: f64,
    /// Propagated kernel interpolation error.
    pub kernel_error: f64,
}

impl CurvatureReport {
    pub fn total_error(&self) -> f64 {
        self.inner_error + self.tail_error + self.quadrature_error + self.kernel_error
    }

    pub fn to_json_line(&self, fingerprint: &str) -> String {
        serde_json::json!({
            "point": self.point,
            "value": self.value,
            "inner_error": self.inner_error,
            "tail_error": self.tail_error,
            "quadrature_error": self.quadrature_error,
            "kernel_error": self.kernel_error,
            "total_error": self.total_error(),
            "fingerprint": fingerprint,
        })
        .to_string()
    }
}
