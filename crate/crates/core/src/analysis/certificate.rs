use serde::{Deserialize, Serialize};

use crate::geometry::Graph;
use crate::operators::{GraphOperator, QuadratureConfig};
use crate::quad::gauss_legendre;
use crate::{Error, FractionalParams, Result};

/// Dilations probed by the homogeneity gate.
pub const HOMOGENEITY_PROBES: [f64; 2] = [0.5, 2.0];
pub const HOMOGENEITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConstantV,
    CertificateHolds,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateConfig {
    /// Candidate maximizers on the circle (n = 2) or azimuths (n = 3).
    pub sphere_nodes: usize,
    /// Gauss–Legendre nodes per radial panel.
    pub radial_order: usize,
    /// Node tolerance relative to the largest integrand sample.
    pub tolerance: f64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self { sphere_nodes: 64, radial_order: 8, tolerance: 1e-12 }
    }
}

/// One integrand node of the linearized operator at the maximizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandSample {
    pub direction: Vec<f64>,
    pub radius: f64,
    /// The paired integrand `[F′(A)(v₊ − v) + F′(a)(v₋ − v)] / ρ^{n+s+1}`.
    pub value: f64,
    /// Quadrature weight in the `θ`-measure (`ρ^{n−1} dρ dω`).
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleCertificate {
    pub argmax: Vec<f64>,
    pub argmax_index: usize,
    pub max_value: f64,
    pub samples: Vec<IntegrandSample>,
    /// Absolute node tolerance actually used.
    pub tolerance: f64,
    pub fraction_strictly_negative: f64,
    pub verdict: Verdict,
}

impl MaxPrincipleCertificate {
    pub fn max_sample(&self) -> f64 {
        self.samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ w·value`, a quadrature of the linearized operator over the sampled
    /// nodes (without the fitted far tail).
    pub fn weighted_sum(&self) -> f64 {
        self.samples.iter().map(|s| s.weight * s.value).sum()
    }
}

/// Unit vectors searched for the maximum of `v`, in index order.
pub fn sphere_nodes(n: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    use std::f64::consts::PI;
    match n {
        1 => Ok(vec![vec![-1.0], vec![1.0]]),
        2 => Ok((0..m)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / m as f64;
                vec![phi.cos(), phi.sin()]
            })
            .collect()),
        3 => {
            let (z, _) = gauss_legendre((m / 2).max(4));
            let mut out = vec![];
            for zi in z {
                let r = (1.0 - zi * zi).sqrt();
                for k in 0..m {
                    let phi = 2.0 * PI * k as f64 / m as f64;
                    out.push(vec![r * phi.cos(), r * phi.sin(), zi]);
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!("sphere sampling in dimension {n}"))),
    }
}

fn check_homogeneity(g: &dyn Graph, nodes: &[Vec<f64>], degree: i32, what: &str) -> Result<()> {
    for w in nodes {
        let base = g.value(w)?;
        for t in HOMOGENEITY_PROBES {
            let p: Vec<f64> = w.iter().map(|c| t * c).collect();
            let expected = t.powi(degree) * base;
            let got = g.value(&p)?;
            if (got - expected).abs() > HOMOGENEITY_TOL * expected.abs().max(1.0) {
                return Err(Error::Precondition(format!(
                    "{what} is not positively homogeneous of degree {degree}: value {got} at {p:?}, expected {expected}"
                )));
            }
        }
    }
    Ok(())
}

/// Maximum-principle certificate for `𝓛_u[v]` at the sphere maximizer of `v`.
pub fn check_max_principle(
    u: &dyn Graph,
    v: &dyn Graph,
    params: &FractionalParams,
    quad: &QuadratureConfig,
    cfg: &CertificateConfig,
) -> Result<MaxPrincipleCertificate> {
    let n = params.n();
    if u.dim() != n || v.dim() != n {
        return Err(Error::config("u, v and the parameters disagree on n"));
    }
    if !(cfg.tolerance > 0.0) || cfg.radial_order == 0 || cfg.sphere_nodes < 3 {
        return Err(Error::config("certificate needs a positive tolerance, radial order and ≥ 3 sphere nodes"));
    }
    let nodes = sphere_nodes(n, cfg.sphere_nodes)?;
    check_homogeneity(u, &nodes, 1, "u")?;
    check_homogeneity(v, &nodes, 0, "v")?;

    let values = nodes.iter().map(|w| v.value(w)).collect::<Result<Vec<_>>>()?;
    let mut argmax_index = 0;
    for (k, val) in values.iter().enumerate() {
        if *val > values[argmax_index] {
            argmax_index = k;
        }
    }
    let max_value = values[argmax_index];
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let xbar = nodes[argmax_index].clone();

    let op = GraphOperator::new(*params, *quad)?;
    let layout = op.radial_layout(u, &xbar)?;
    let (gx, gw) = gauss_legendre(cfg.radial_order);
    let u0 = op.check_point(u, &xbar)?;
    let v0 = v.value(&xbar)?;
    let hemi = op.hemisphere();
    let exponent = n as f64 + params.s() + 1.0;
    let mut samples = vec![];
    for (omega, w_dir) in hemi.directions.iter().zip(&hemi.weights) {
        for panel in layout.breaks.windows(2) {
            let (a, b) = (panel[0], panel[1]);
            for (t, w) in gx.iter().zip(&gw) {
                let rho = 0.5 * (a + b) + 0.5 * (b - a) * t;
                let num = op.linearized_numerator(u, v, &xbar, u0, v0, omega, rho)?;
                samples.push(IntegrandSample {
                    direction: omega[..n].to_vec(),
                    radius: rho,
                    value: num / rho.powf(exponent),
                    weight: w_dir * 0.5 * (b - a) * w * rho.powi(n as i32 - 1),
                });
            }
        }
    }
    let scale = samples.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
    let tolerance = cfg.tolerance * scale.max(f64::MIN_POSITIVE);
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    let negative: f64 = samples.iter().filter(|s| s.value < -10.0 * tolerance).map(|s| s.weight).sum();
    let fraction_strictly_negative = if total > 0.0 { negative / total } else { 0.0 };
    let verdict = if max_value - min_value < cfg.tolerance.max(HOMOGENEITY_TOL) {
        Verdict::ConstantV
    } else if samples.iter().any(|s| s.value > tolerance) {
        Verdict::Violation
    } else {
        Verdict::CertificateHolds
    };
    Ok(MaxPrincipleCertificate {
        argmax: xbar,
        argmax_index,
        max_value,
        samples,
        tolerance,
        fraction_strictly_negative,
        verdict,
    })
}
