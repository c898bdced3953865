use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{norm, Graph, MAX_DIM};
use crate::{Error, Result};

/// Trace of a positively homogeneous function on the unit sphere `Sⁿ⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConeTrace {
    /// `n = 1`: `u(x) = pos·x` for `x > 0` and `u(x) = neg·x` for `x < 0`.
    Line { pos: f64, neg: f64 },
    /// `n = 2`: values at the angles `2πk/m`, linear in the angle in between.
    Circle { values: Vec<f64> },
    /// `n ≥ 3`: scattered unit vectors with values, interpolated on the
    /// nearest spherical simplex (gnomonic barycentric weights).
    Sphere { points: Vec<Vec<f64>>, values: Vec<f64> },
}

impl ConeTrace {
    pub fn line(pos: f64, neg: f64) -> Self {
        ConeTrace::Line { pos, neg }
    }

    pub fn circle_from_fn(m: usize, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..m).map(|k| f(2.0 * PI * k as f64 / m as f64)).collect();
        ConeTrace::Circle { values }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConeTrace::Line { .. } => 1,
            ConeTrace::Circle { .. } => 2,
            ConeTrace::Sphere { points, .. } => points.first().map_or(3, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConeTrace::Line { pos, neg } if pos.is_finite() && neg.is_finite() => Ok(()),
            ConeTrace::Line { .. } => Err(Error::config("cone trace values must be finite")),
            ConeTrace::Circle { values } => {
                if values.len() < 3 || values.iter().any(|v| !v.is_finite()) {
                    Err(Error::config("circle trace needs at least 3 finite samples"))
                } else {
                    Ok(())
                }
            }
            ConeTrace::Sphere { points, values } => {
                let d = self.dim();
                if points.len() != values.len() || points.len() < d + 1 || d > MAX_DIM {
                    return Err(Error::config("sphere trace needs at least n+1 points with matching values"));
                }
                for p in points {
                    if p.len() != d || (norm(p) - 1.0).abs() > 1e-9 {
                        return Err(Error::config("sphere trace points must be unit vectors of equal dimension"));
                    }
                }
                Ok(())
            }
        }
    }

    /// Value at a unit vector.
    pub fn unit_value(&self, omega: &[f64]) -> f64 {
        match self {
            ConeTrace::Line { pos, neg } => {
                if omega[0] >= 0.0 {
                    *pos
                } else {
                    -*neg
                }
            }
            ConeTrace::Circle { values } => {
                let m = values.len();
                let mut phi = omega[1].atan2(omega[0]);
                if phi < 0.0 {
                    phi += 2.0 * PI;
                }
                let t = phi * m as f64 / (2.0 * PI);
                let k = (t.floor() as usize).min(m - 1);
                let frac = t - k as f64;
                let a = values[k];
                let b = values[(k + 1) % m];
                a + (b - a) * frac
            }
            ConeTrace::Sphere { points, values } => sphere_interpolate(points, values, omega),
        }
    }

    /// Degree-one homogeneous extension `|x|·trace(x/|x|)`, zero at the origin.
    pub fn eval_homogeneous(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        if r == 0.0 {
            return 0.0;
        }
        let mut buf = [0.0; MAX_DIM];
        for (b, xi) in buf.iter_mut().zip(x) {
            *b = xi / r;
        }
        r * self.unit_value(&buf[..x.len()])
    }

    /// Degree-zero homogeneous extension `trace(x/|x|)`.
    pub fn eval_degree_zero(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let mut buf = [0.0; MAX_DIM];
        for (b, xi) in buf.iter_mut().zip(x) {
            *b = if r > 0.0 { xi / r } else { 0.0 };
        }
        self.unit_value(&buf[..x.len()])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            ConeTrace::Line { pos, neg } => ConeTrace::Line { pos: pos * factor, neg: neg * factor },
            ConeTrace::Circle { values } => ConeTrace::Circle { values: values.iter().map(|v| v * factor).collect() },
            ConeTrace::Sphere { points, values } => ConeTrace::Sphere {
                points: points.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        }
    }

    /// Sample directions used by sphere-based diagnostics, in index order.
    pub fn sphere_samples(&self) -> Vec<Vec<f64>> {
        match self {
            ConeTrace::Line { .. } => vec![vec![-1.0], vec![1.0]],
            ConeTrace::Circle { values } => {
                let m = values.len();
                (0..m)
                    .map(|k| {
                        let phi = 2.0 * PI * k as f64 / m as f64;
                        vec![phi.cos(), phi.sin()]
                    })
                    .collect()
            }
            ConeTrace::Sphere { points, .. } => points.clone(),
        }
    }
}

fn sphere_interpolate(points: &[Vec<f64>], values: &[f64], omega: &[f64]) -> f64 {
    let d = omega.len();
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(omega).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nearest = order[0].1;
    // solve P λ = ω with the d nearest points as columns
    let mut a = [[0.0; MAX_DIM + 1]; MAX_DIM];
    for row in 0..d {
        for col in 0..d {
            a[row][col] = points[order[col].1][row];
        }
        a[row][d] = omega[row];
    }
    for col in 0..d {
        let pivot = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return values[nearest];
        }
        a.swap(col, pivot);
        for row in 0..d {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=d {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    let lambda: Vec<f64> = (0..d).map(|i| a[i][d] / a[i][i]).collect();
    if lambda.iter().any(|&l| l < -1e-9) {
        return values[nearest];
    }
    let total: f64 = lambda.iter().sum();
    lambda.iter().enumerate().map(|(i, l)| l * values[order[i].1]).sum::<f64>() / total
}

/// A positively homogeneous function given by its sphere trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub trace: ConeTrace,
    /// Homogeneity degree, 0 or 1.
    pub degree: u8,
}

impl Cone {
    pub fn new(trace: ConeTrace, degree: u8) -> Result<Self> {
        trace.validate()?;
        if degree > 1 {
            return Err(Error::config("cone degree must be 0 or 1"));
        }
        Ok(Self { trace, degree })
    }

    /// Degree-one cone.
    pub fn graph(trace: ConeTrace) -> Result<Self> {
        Self::new(trace, 1)
    }
}

impl Graph for Cone {
    fn dim(&self) -> usize {
        self.trace.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite evaluation point"));
        }
        Ok(match self.degree {
            0 => self.trace.eval_degree_zero(x),
            _ => self.trace.eval_homogeneous(x),
        })
    }

    fn far_field_radius(&self) -> Option<f64> {
        Some(0.0)
    }

    fn is_excluded(&self, x: &[f64]) -> bool {
        norm(x) < 1e-12
    }
}

/// A cone with the split structure `v₀(x̂, xₙ) = v⋆(x̂) + κ xₙ`, where `v⋆`
/// is homogeneous on ℝⁿ⁻¹.
#[derive(Clone)]
pub struct SplitCone {
    pub v_star: Arc<dyn Graph>,
    pub kappa: f64,
}

impl std::fmt::Debug for SplitCone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitCone").field("dim", &self.dim()).field("kappa", &self.kappa).finish()
    }
}

impl SplitCone {
    pub fn new(v_star: Arc<dyn Graph>, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::config("kappa must be finite"));
        }
        if v_star.dim() + 1 > MAX_DIM {
            return Err(Error::Unsupported(format!("split cone in dimension {}", v_star.dim() + 1)));
        }
        Ok(Self { v_star, kappa })
    }
}

impl Graph for SplitCone {
    fn dim(&self) -> usize {
        self.v_star.dim() + 1
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let n = self.dim();
        Ok(self.v_star.value(&x[..n - 1])? + self.kappa * x[n - 1])
    }

    fn far_field_radius(&self) -> Option<f64> {
        self.v_star.far_field_radius()
    }

    fn is_excluded(&self, x: &[f64]) -> bool {
        norm(x) < 1e-12
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AffineGraph;

    #[test]
    fn line_trace_is_abs_for_unit_slopes() {
        let c = Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap();
        assert_eq!(c.value(&[0.5]).unwrap(), 0.5);
        assert_eq!(c.value(&[-0.5]).unwrap(), 0.5);
        assert_eq!(c.value(&[0.0]).unwrap(), 0.0);
        assert!(c.is_excluded(&[0.0]));
    }

    #[test]
    fn homogeneity_is_structural() {
        let trace = ConeTrace::circle_from_fn(48, |phi| phi.cos().abs() + 0.3 * (3.0 * phi).sin());
        let c = Cone::graph(trace).unwrap();
        for k in 0..20 {
            let phi = 0.37 * k as f64;
            let w = [phi.cos(), phi.sin()];
            let base = c.value(&w).unwrap();
            for t in [0.1, 0.5, 2.0, 10.0] {
                let v = c.value(&[t * w[0], t * w[1]]).unwrap();
                assert!((v - t * base).abs() <= 1e-12 * (1.0 + t * base.abs()));
            }
        }
    }

    #[test]
    fn sphere_trace_reproduces_linear_data() {
        // u(x) = x₃ sampled on an octahedron plus diagonals
        let mut points = vec![];
        for i in 0..3 {
            for sgn in [-1.0, 1.0] {
                let mut p = vec![0.0; 3];
                p[i] = sgn;
                points.push(p);
            }
        }
        let values = points.iter().map(|p| p[2]).collect();
        let trace = ConeTrace::Sphere { points, values };
        trace.validate().unwrap();
        let w = [0.0, 0.0, 1.0];
        assert!((trace.unit_value(&w) - 1.0).abs() < 1e-12);
        let c = Cone::graph(trace).unwrap();
        assert!((c.value(&[0.0, 0.0, 3.0]).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn split_cone_homogeneity() {
        let v_star = Arc::new(Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap());
        let v0 = SplitCone::new(v_star.clone(), 0.7).unwrap();
        for &(a, b) in &[(0.3, -1.2), (-2.0, 0.5), (1.5, 1.5)] {
            let base = v0.value(&[a, b]).unwrap();
            for t in [0.25, 3.0] {
                let scaled = v0.value(&[t * a, t * b]).unwrap();
                assert!((scaled - t * base).abs() < 1e-12);
                assert!((v_star.value(&[t * a]).unwrap() - t * v_star.value(&[a]).unwrap()).abs() < 1e-12);
            }
        }
        let flat = SplitCone::new(Arc::new(AffineGraph::new(vec![], 0.0)), 1.0).unwrap();
        assert_eq!(flat.value(&[2.0]).unwrap(), 2.0);
    }
}
