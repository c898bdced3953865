use serde::{Deserialize, Serialize};

use crate::geometry::{Extension, Graph, GraphFunction, Region};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowdownConfig {
    /// Lattice spacing on the unit box `[-1, 1]ⁿ`.
    pub probe_spacing: f64,
    /// Successive rescalings closer than this count as Cauchy.
    pub cauchy_tol: f64,
}

impl Default for BlowdownConfig {
    fn default() -> Self {
        Self { probe_spacing: 1.0 / 32.0, cauchy_tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowdownStep {
    pub radius: f64,
    pub lipschitz: f64,
    /// Least-squares affine fit `slope·y + offset` on the unit box.
    pub affine_slope: Vec<f64>,
    pub affine_offset: f64,
    pub affine_distance: f64,
    /// Sup-distance to the previous rescaling (absent for the first radius).
    pub cauchy_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowdownReport {
    pub steps: Vec<BlowdownStep>,
    pub cauchy: bool,
    /// Affine distances strictly decreasing in `r`.
    pub decreasing: bool,
}

impl BlowdownReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,lipschitz,affine_distance,cauchy_distance\n");
        for s in &self.steps {
            let c = s.cauchy_distance.map_or(String::new(), |d| format!("{d:e}"));
            out.push_str(&format!("{:e},{:e},{:e},{c}\n", s.radius, s.lipschitz, s.affine_distance));
        }
        out
    }
}

/// Solves the small symmetric system `a x = b` by Gaussian elimination with
/// partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::domain("singular least-squares system"));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Least-squares affine fit of `values` over `points`; returns
/// `(slope, offset, sup distance)`.
pub fn affine_fit(points: &[Vec<f64>], values: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let n = points.first().map_or(0, Vec::len);
    let k = n + 1;
    let mut ata = vec![vec![0.0; k]; k];
    let mut atb = vec![0.0; k];
    for (p, v) in points.iter().zip(values) {
        let row: Vec<f64> = p.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..k {
            atb[i] += row[i] * v;
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve_dense(ata, atb)?;
    let (slope, offset) = (coef[..n].to_vec(), coef[n]);
    let dist = points
        .iter()
        .zip(values)
        .map(|(p, v)| (v - p.iter().zip(&slope).map(|(a, b)| a * b).sum::<f64>() - offset).abs())
        .fold(0.0, f64::max);
    Ok((slope, offset, dist))
}

/// Blow-down rescalings `u_r(y) = u(r y)/r` on the unit box for an
/// increasing sequence of radii.
pub fn blowdown_diagnostics(u: &GraphFunction, radii: &[f64], cfg: &BlowdownConfig) -> Result<BlowdownReport> {
    if radii.is_empty() {
        return Err(Error::domain("no radii given"));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::domain("radii must be positive and finite"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("radii {radii:?} are not strictly increasing")));
    }
    if !(cfg.probe_spacing > 0.0 && cfg.probe_spacing <= 0.5) || !(cfg.cauchy_tol > 0.0) {
        return Err(Error::config("probe_spacing must lie in (0, 0.5] and cauchy_tol be positive"));
    }
    let n = u.dim();
    if let Extension::LinearGrowth { .. } = u.extension() {
        let reach = radii.last().copied().unwrap_or(1.0) * (n as f64).sqrt();
        let box_reach = u.half_width() - u.center().iter().map(|c| c.abs()).fold(0.0, f64::max);
        if reach > box_reach {
            return Err(Error::domain(format!(
                "radius {reach} leaves the sampled box and the extension carries no data"
            )));
        }
    }
    let unit = Region::Box { lower: vec![-1.0; n], upper: vec![1.0; n] };
    let points = unit.lattice(cfg.probe_spacing);
    let m = (2.0 / cfg.probe_spacing).round() as usize + 1;
    if points.len() != m.pow(n as u32) {
        return Err(Error::config("probe_spacing must divide the unit box evenly"));
    }

    let mut steps: Vec<BlowdownStep> = vec![];
    let mut previous: Option<Vec<f64>> = None;
    for &r in radii {
        let values = points
            .iter()
            .map(|y| {
                let x: Vec<f64> = y.iter().map(|v| r * v).collect();
                u.value(&x).map(|v| v / r)
            })
            .collect::<Result<Vec<f64>>>()?;
        // lattice is ordered with the last axis fastest
        let mut lipschitz: f64 = 0.0;
        for idx in 0..values.len() {
            let mut stride = 1;
            let mut rest = idx;
            for _ in 0..n {
                if rest % m + 1 < m {
                    lipschitz = lipschitz.max((values[idx + stride] - values[idx]).abs() / cfg.probe_spacing);
                }
                rest /= m;
                stride *= m;
            }
        }
        let (affine_slope, affine_offset, affine_distance) = affine_fit(&points, &values)?;
        let cauchy_distance =
            previous.as_ref().map(|p| p.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        steps.push(BlowdownStep { radius: r, lipschitz, affine_slope, affine_offset, affine_distance, cauchy_distance });
        previous = Some(values);
    }
    let cauchy = steps.iter().filter_map(|s| s.cauchy_distance).all(|d| d <= cfg.cauchy_tol);
    let decreasing = steps.windows(2).all(|w| w[1].affine_distance < w[0].affine_distance);
    Ok(BlowdownReport { steps, cauchy, decreasing })
}
