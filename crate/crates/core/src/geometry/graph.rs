use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dot, norm, ConeTrace, Graph, MAX_DIM};
use crate::{Error, Result};

/// How a [`GraphFunction`] continues outside its sampling box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Extension {
    /// `u(x) = slope·x + offset`.
    Affine { slope: Vec<f64>, offset: f64 },
    /// `u(x) = |x|·trace(x/|x|)`.
    Homogeneous(ConeTrace),
    /// `u(x) = trace(x/|x|)`, used for gradients of cones.
    DegreeZero(ConeTrace),
    /// Envelope only: asserts `|u(x)| ≤ M|x|` for `|x| ≥ 1`. There is no data
    /// outside the box.
    LinearGrowth { m: f64 },
}

impl Extension {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Extension::Affine { slope, offset } => {
                if slope.len() != n || slope.iter().chain(std::iter::once(offset)).any(|v| !v.is_finite()) {
                    return Err(Error::config("affine extension needs n finite slope components"));
                }
            }
            Extension::Homogeneous(t) | Extension::DegreeZero(t) => {
                t.validate()?;
                if t.dim() != n {
                    return Err(Error::config("cone trace dimension does not match the graph"));
                }
            }
            Extension::LinearGrowth { m } => {
                if !(m.is_finite() && *m >= 0.0) {
                    return Err(Error::config("linear-growth constant must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Extension::Affine { slope, offset } => Ok(dot(slope, x) + offset),
            Extension::Homogeneous(t) => Ok(t.eval_homogeneous(x)),
            Extension::DegreeZero(t) => Ok(t.eval_degree_zero(x)),
            Extension::LinearGrowth { .. } => Err(Error::Unsupported(
                "evaluation outside the sampling box of a graph with a linear-growth envelope only".into(),
            )),
        }
    }
}

/// A function on ℝⁿ sampled on a uniform grid over the box
/// `center + [-L, L]ⁿ`, multilinearly interpolated, and continued outside the
/// box by an [`Extension`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction {
    n: usize,
    center: Vec<f64>,
    half_width: f64,
    spacing: f64,
    points_per_axis: usize,
    samples: Vec<f64>,
    extension: Extension,
}

impl GraphFunction {
    pub fn new(
        center: Vec<f64>,
        half_width: f64,
        spacing: f64,
        samples: Vec<f64>,
        extension: Extension,
    ) -> Result<Self> {
        let n = center.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::Unsupported(format!("graph dimension {n}")));
        }
        if !(spacing > 0.0 && spacing.is_finite() && half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::config("grid spacing and half-width must be positive"));
        }
        let cells = 2.0 * half_width / spacing;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded < 2.0 {
            return Err(Error::config(format!(
                "2L/h = {cells} must be an integer ≥ 2 (at least 3 points per axis)"
            )));
        }
        let points_per_axis = rounded as usize + 1;
        let expected = points_per_axis.pow(n as u32);
        if samples.len() != expected {
            return Err(Error::config(format!("expected {expected} samples, got {}", samples.len())));
        }
        if samples.iter().any(|v| !v.is_finite()) || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("samples and center must be finite"));
        }
        extension.validate(n)?;
        Ok(Self { n, center, half_width, spacing, points_per_axis, samples, extension })
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(
        center: Vec<f64>,
        half_width: f64,
        spacing: f64,
        extension: Extension,
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Result<Self> {
        let n = center.len();
        let m = ((2.0 * half_width / spacing).round() as usize) + 1;
        let total = m.checked_pow(n as u32).ok_or_else(|| Error::config("grid too large"))?;
        let mut samples = Vec::with_capacity(total);
        let mut x = vec![0.0; n];
        for idx in 0..total {
            node_position(&center, half_width, spacing, m, idx, &mut x);
            samples.push(f(&x));
        }
        Self::new(center, half_width, spacing, samples, extension)
    }

    /// Samples another graph (evaluating its extension where needed).
    pub fn sample(
        g: &dyn Graph,
        center: Vec<f64>,
        half_width: f64,
        spacing: f64,
        extension: Extension,
    ) -> Result<Self> {
        let n = center.len();
        let m = ((2.0 * half_width / spacing).round() as usize) + 1;
        let total = m.pow(n as u32);
        let mut samples = Vec::with_capacity(total);
        let mut x = vec![0.0; n];
        for idx in 0..total {
            node_position(&center, half_width, spacing, m, idx, &mut x);
            samples.push(g.value(&x)?);
        }
        Self::new(center, half_width, spacing, samples, extension)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn extension(&self) -> &Extension {
        &self.extension
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Replaces the samples, keeping grid and extension.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.center.clone(), self.half_width, self.spacing, samples, self.extension.clone())
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        node_position(&self.center, self.half_width, self.spacing, self.points_per_axis, idx, &mut x);
        x
    }

    /// Row-major multi-index of a flat node index (last axis fastest).
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let m = self.points_per_axis;
        let mut out = vec![0; self.n];
        for axis in (0..self.n).rev() {
            out[axis] = idx % m;
            idx /= m;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.center).all(|(xi, ci)| (xi - ci).abs() <= self.half_width)
    }

    fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let m = self.points_per_axis;
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for axis in 0..n {
            let t = (x[axis] - (self.center[axis] - self.half_width)) / self.spacing;
            let t = t.clamp(0.0, (m - 1) as f64);
            let i = (t.floor() as usize).min(m - 2);
            base[axis] = i;
            frac[axis] = t - i as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut flat = 0;
            for axis in 0..n {
                let bit = (corner >> (n - 1 - axis)) & 1;
                weight *= if bit == 1 { frac[axis] } else { 1.0 - frac[axis] };
                flat = flat * m + base[axis] + bit;
            }
            if weight != 0.0 {
                total += weight * self.samples[flat];
            }
        }
        total
    }

    /// Largest mismatch between boundary samples and the extension, or 0 for
    /// envelope-only extensions.
    pub fn boundary_mismatch(&self) -> f64 {
        if matches!(self.extension, Extension::LinearGrowth { .. }) {
            return 0.0;
        }
        let m = self.points_per_axis;
        let mut worst: f64 = 0.0;
        for idx in 0..self.samples.len() {
            let multi = self.multi_index(idx);
            if multi.iter().any(|&i| i == 0 || i == m - 1) {
                let x = self.node(idx);
                if let Ok(v) = self.extension.eval(&x) {
                    worst = worst.max((v - self.samples[idx]).abs());
                }
            }
        }
        worst
    }

    /// Checks the linear-growth envelope `|u(x)| ≤ M|x|` at every node with
    /// `|x| ≥ 1` (and on the extension up to `5L` when it has data).
    pub fn check_linear_growth(&self, m: f64) -> Result<()> {
        let check = |x: &[f64], v: f64| -> Result<()> {
            let r = norm(x);
            if r >= 1.0 && v.abs() > m * r * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!("|u({x:?})| = {} exceeds {m}·|x| = {}", v.abs(), m * r)));
            }
            Ok(())
        };
        for idx in 0..self.samples.len() {
            check(&self.node(idx), self.samples[idx])?;
        }
        if !matches!(self.extension, Extension::LinearGrowth { .. }) {
            let reach = 5.0 * self.half_width;
            for k in 0..=64 {
                let r = self.half_width + (reach - self.half_width) * k as f64 / 64.0;
                for axis in 0..self.n {
                    for sgn in [-1.0, 1.0] {
                        let mut x = self.center.clone();
                        x[axis] += sgn * r;
                        check(&x, self.value(&x)?)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn node_position(center: &[f64], half_width: f64, spacing: f64, m: usize, mut idx: usize, out: &mut [f64]) {
    let n = center.len();
    for axis in (0..n).rev() {
        let i = idx % m;
        idx /= m;
        out[axis] = center[axis] - half_width + spacing * i as f64;
    }
}

impl Graph for GraphFunction {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::domain(format!("point of dimension {} for a graph over ℝ^{}", x.len(), self.n)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite evaluation point"));
        }
        if self.in_box(x) {
            Ok(self.interpolate(x))
        } else {
            self.extension.eval(x)
        }
    }

    fn resolution(&self) -> Option<f64> {
        Some(self.spacing)
    }

    fn far_field_radius(&self) -> Option<f64> {
        match self.extension {
            Extension::LinearGrowth { .. } => None,
            _ => Some(norm(&self.center) + self.half_width * (self.n as f64).sqrt()),
        }
    }

    fn is_excluded(&self, x: &[f64]) -> bool {
        matches!(self.extension, Extension::Homogeneous(_) | Extension::DegreeZero(_)) && norm(x) < 1e-12
    }
}

/// `u(x) = slope·x + offset` on all of ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineGraph {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl AffineGraph {
    pub fn new(slope: Vec<f64>, offset: f64) -> Self {
        Self { slope, offset }
    }
}

impl Graph for AffineGraph {
    fn dim(&self) -> usize {
        self.slope.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(dot(&self.slope, x) + self.offset)
    }

    fn far_field_radius(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// A closure-backed graph, used for analytic fixtures.
///
/// `far_field_radius` must be set only when the function is affine or
/// homogeneous outside that radius.
#[derive(Clone)]
pub struct FnGraph {
    n: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    far_field: Option<f64>,
    excluded: Option<Vec<f64>>,
}

impl std::fmt::Debug for FnGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnGraph").field("n", &self.n).field("far_field", &self.far_field).finish()
    }
}

impl FnGraph {
    pub fn new(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { n, f: Arc::new(f), far_field: None, excluded: None }
    }

    pub fn with_far_field(mut self, radius: f64) -> Self {
        self.far_field = Some(radius);
        self
    }

    /// Marks a single point (e.g. a cone apex) as excluded.
    pub fn with_excluded_point(mut self, p: Vec<f64>) -> Self {
        self.excluded = Some(p);
        self
    }
}

impl Graph for FnGraph {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("graph not finite at {x:?}")))
        }
    }

    fn far_field_radius(&self) -> Option<f64> {
        self.far_field
    }

    fn is_excluded(&self, x: &[f64]) -> bool {
        self.excluded
            .as_ref()
            .is_some_and(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() < 1e-12)
    }
}

/// `u_r(y) = u(r y)/r`, resampled on the box `[-L/r, L/r]ⁿ` (centered at
/// `c/r`) at `spacing` (default: the original spacing).
pub fn rescale(u: &GraphFunction, r: f64, spacing: Option<f64>) -> Result<GraphFunction> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("rescaling factor {r} must be positive")));
    }
    let h = spacing.unwrap_or(u.spacing);
    let half_width = snap_half_width(u.half_width / r, h);
    let center: Vec<f64> = u.center.iter().map(|c| c / r).collect();
    let extension = match &u.extension {
        Extension::Affine { slope, offset } => Extension::Affine { slope: slope.clone(), offset: offset / r },
        Extension::Homogeneous(t) => Extension::Homogeneous(t.clone()),
        Extension::DegreeZero(t) => Extension::DegreeZero(t.scaled(1.0 / r)),
        Extension::LinearGrowth { m } => Extension::LinearGrowth { m: *m },
    };
    let mut scratch = vec![0.0; u.n];
    let mut err = None;
    let out = GraphFunction::from_fn(center, half_width, h, extension, |y| {
        for (s, yi) in scratch.iter_mut().zip(y) {
            *s = r * yi;
        }
        match u.value(&scratch) {
            Ok(v) => v / r,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => out,
    }
}

fn snap_half_width(target: f64, h: f64) -> f64 {
    let cells = (target / h - 1e-9).ceil().max(1.0);
    cells * h
}

/// Blow-up at `p`: `v_r(x) = (u(p + r x) − u(p))/r`, sampled on
/// `[-half_width, half_width]ⁿ`.
///
/// Affine extensions stay affine; other extensions become a linear-growth
/// envelope with the sampled Lipschitz constant.
pub fn blowup_at(u: &GraphFunction, p: &[f64], r: f64, half_width: f64, spacing: f64) -> Result<GraphFunction> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("blow-up radius {r} must be positive")));
    }
    if p.len() != u.n {
        return Err(Error::domain("blow-up point has the wrong dimension"));
    }
    let up = u.value(p).map_err(|e| Error::domain(format!("blow-up point {p:?} not evaluable: {e}")))?;
    let mut scratch = vec![0.0; u.n];
    let mut err = None;
    let samples_fn = |x: &[f64]| {
        for ((s, pi), xi) in scratch.iter_mut().zip(p).zip(x) {
            *s = pi + r * xi;
        }
        match u.value(&scratch) {
            Ok(v) => (v - up) / r,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    };
    let provisional = GraphFunction::from_fn(
        vec![0.0; u.n],
        half_width,
        spacing,
        Extension::LinearGrowth { m: 0.0 },
        samples_fn,
    );
    if let Some(e) = err {
        return Err(Error::domain(format!("blow-up window leaves the evaluable region: {e}")));
    }
    let provisional = provisional?;
    let extension = match &u.extension {
        Extension::Affine { slope, offset } => {
            Extension::Affine { slope: slope.clone(), offset: (dot(slope, p) + offset - up) / r }
        }
        _ => Extension::LinearGrowth { m: grid_lipschitz(&provisional) },
    };
    provisional.with_samples(provisional.samples.clone()).map(|g| GraphFunction { extension, ..g })
}

/// Largest difference quotient between grid neighbours along the axes.
pub fn grid_lipschitz(u: &GraphFunction) -> f64 {
    let m = u.points_per_axis;
    let mut worst: f64 = 0.0;
    for idx in 0..u.samples.len() {
        let multi = u.multi_index(idx);
        let mut stride = 1;
        for axis in (0..u.n).rev() {
            if multi[axis] + 1 < m {
                worst = worst.max((u.samples[idx + stride] - u.samples[idx]).abs() / u.spacing);
            }
            stride *= m;
        }
    }
    worst
}

/// Sampling region for Lipschitz estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| *a <= *v && *v <= *b),
            Region::Annulus { center, inner, outer } => {
                let d = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                *inner <= d && d <= *outer
            }
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lower, upper } => (lower.clone(), upper.clone()),
            Region::Annulus { center, outer, .. } => {
                (center.iter().map(|c| c - outer).collect(), center.iter().map(|c| c + outer).collect())
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Region::Box { lower, upper } => Region::Box {
                lower: lower.iter().map(|v| v * factor).collect(),
                upper: upper.iter().map(|v| v * factor).collect(),
            },
            Region::Annulus { center, inner, outer } => Region::Annulus {
                center: center.iter().map(|v| v * factor).collect(),
                inner: inner * factor,
                outer: outer * factor,
            },
        }
    }

    /// Lattice points `k·spacing` (k ∈ ℤⁿ) inside the region.
    pub fn lattice(&self, spacing: f64) -> Vec<Vec<f64>> {
        let (lo, hi) = self.bounds();
        let n = lo.len();
        let ranges: Vec<(i64, i64)> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| ((a / spacing - 1e-9).ceil() as i64, (b / spacing + 1e-9).floor() as i64))
            .collect();
        let mut out = Vec::new();
        let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().any(|r| r.0 > r.1) {
            return out;
        }
        loop {
            let x: Vec<f64> = k.iter().map(|&ki| ki as f64 * spacing).collect();
            if self.contains_with_slack(&x, 1e-9 * spacing) {
                out.push(x);
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if k[axis] < ranges[axis].1 {
                    k[axis] += 1;
                    break;
                }
                k[axis] = ranges[axis].0;
            }
        }
    }

    fn contains_with_slack(&self, x: &[f64], slack: f64) -> bool {
        match self {
            Region::Box { lower, upper } => {
                x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| *a - slack <= *v && *v <= *b + slack)
            }
            Region::Annulus { center, inner, outer } => {
                let d = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                *inner - slack <= d && d <= *outer + slack
            }
        }
    }
}

/// Largest difference quotient `|u(x) − u(y)|/|x − y|` over all pairs of
/// lattice points (spacing `spacing`) in `region`. A lower bound for the true
/// Lipschitz constant.
pub fn lipschitz_constant(u: &dyn Graph, region: &Region, spacing: f64) -> Result<f64> {
    if !(spacing > 0.0) {
        return Err(Error::domain("lattice spacing must be positive"));
    }
    let points = region.lattice(spacing);
    if points.len() < 2 {
        return Err(Error::domain("region contains fewer than two lattice points"));
    }
    let values = points.iter().map(|x| u.value(x)).collect::<Result<Vec<f64>>>()?;
    let best = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut local: f64 = 0.0;
            for j in (i + 1)..points.len() {
                let d = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                local = local.max((values[i] - values[j]).abs() / d);
            }
            local
        })
        .collect::<Vec<f64>>();
    Ok(best.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cone;

    fn affine_grid(slope: Vec<f64>, offset: f64, half_width: f64, h: f64) -> GraphFunction {
        let s2 = slope.clone();
        GraphFunction::from_fn(vec![0.0; slope.len()], half_width, h, Extension::Affine { slope, offset }, move |x| {
            dot(&s2, x) + offset
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GraphFunction::new(vec![0.0], 1.0, 0.3, vec![0.0; 7], Extension::LinearGrowth { m: 1.0 }).is_err());
        assert!(GraphFunction::new(vec![0.0], 1.0, 1.0, vec![0.0; 3], Extension::LinearGrowth { m: 1.0 }).is_ok());
        assert!(GraphFunction::new(vec![0.0], 1.0, 2.0, vec![0.0; 2], Extension::LinearGrowth { m: 1.0 }).is_err());
        assert!(GraphFunction::new(vec![0.0], 1.0, 1.0, vec![0.0, f64::NAN, 0.0], Extension::LinearGrowth { m: 1.0 })
            .is_err());
    }

    #[test]
    fn affine_interpolation_is_exact() {
        let u = affine_grid(vec![0.3, -1.7], 0.25, 2.0, 0.125);
        for &(a, b) in &[(0.01, 0.77), (-1.99, 1.3), (1.0, -1.0), (3.5, 7.0), (-10.0, 0.2)] {
            let v = u.value(&[a, b]).unwrap();
            assert!((v - (0.3 * a - 1.7 * b + 0.25)).abs() <= 1e-13, "{a} {b}");
        }
        assert!(u.boundary_mismatch() < 1e-14);
    }

    #[test]
    fn homogeneous_extension_and_abs_cone() {
        let trace = ConeTrace::line(1.0, -1.0);
        let cone = Cone::graph(trace.clone()).unwrap();
        let u = GraphFunction::sample(&cone, vec![0.0], 2.0, 0.25, Extension::Homogeneous(trace)).unwrap();
        assert_eq!(u.value(&[0.5]).unwrap(), 0.5);
        assert_eq!(u.value(&[-0.5]).unwrap(), 0.5);
        assert_eq!(u.value(&[4.0]).unwrap(), 4.0);
        assert!(u.is_excluded(&[0.0]));
    }

    #[test]
    fn linear_growth_has_no_exterior_data() {
        let u = GraphFunction::from_fn(vec![0.0], 1.0, 0.5, Extension::LinearGrowth { m: 2.0 }, |x| x[0]).unwrap();
        assert!(matches!(u.value(&[1.5]), Err(Error::Unsupported(_))));
        u.check_linear_growth(2.0).unwrap();
        assert!(u.check_linear_growth(0.5).is_err());
        assert_eq!(u.far_field_radius(), None);
    }

    #[test]
    fn rescale_affine_divides_offset() {
        let u = affine_grid(vec![2.0], 1.0, 2.0, 0.25);
        for r in [0.5, 4.0] {
            let ur = rescale(&u, r, None).unwrap();
            for y in [-3.0, -0.1, 0.4, 9.0] {
                assert!((ur.value(&[y]).unwrap() - (2.0 * y + 1.0 / r)).abs() < 1e-12);
            }
        }
        assert!(rescale(&u, 0.0, None).is_err());
        assert!(rescale(&u, -1.0, None).is_err());
    }

    #[test]
    fn cones_are_rescaling_fixed_points() {
        let trace = ConeTrace::line(1.5, -0.5);
        let u = GraphFunction::sample(&Cone::graph(trace.clone()).unwrap(), vec![0.0], 2.0, 0.125, Extension::Homogeneous(trace))
            .unwrap();
        for r in [0.1, 0.5, 2.0, 10.0] {
            let ur = rescale(&u, r, Some(0.125)).unwrap();
            for k in 0..41 {
                let x = -5.0 + 0.25 * k as f64;
                assert!((ur.value(&[x]).unwrap() - u.value(&[x]).unwrap()).abs() < 1e-12, "r={r} x={x}");
            }
        }
    }

    #[test]
    fn blowup_of_abs_at_one_is_identity_line() {
        let trace = ConeTrace::line(1.0, -1.0);
        let u = GraphFunction::sample(&Cone::graph(trace.clone()).unwrap(), vec![0.0], 4.0, 0.125, Extension::Homogeneous(trace))
            .unwrap();
        let v = blowup_at(&u, &[1.0], 0.1, 5.0, 0.125).unwrap();
        for k in 0..81 {
            let x = -5.0 + 0.125 * k as f64;
            assert!((v.value(&[x]).unwrap() - x).abs() < 1e-12);
        }
        assert_eq!(v.value(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn blowup_of_affine_is_linear_part() {
        let u = affine_grid(vec![0.5, -2.0], 3.0, 2.0, 0.25);
        let v = blowup_at(&u, &[0.3, -0.4], 0.05, 1.0, 0.25).unwrap();
        for &(a, b) in &[(0.5, 0.5), (-1.0, 0.25), (7.0, -3.0)] {
            assert!((v.value(&[a, b]).unwrap() - (0.5 * a - 2.0 * b)).abs() < 1e-10);
        }
        assert!(blowup_at(&u, &[0.0], 0.1, 1.0, 0.25).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let u = AffineGraph::new(vec![3.0, 4.0], 1.0);
        let region = Region::Box { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] };
        assert!((lipschitz_constant(&u, &region, 0.25).unwrap() - 5.0).abs() < 1e-12);

        let abs = Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap();
        let ann = Region::Annulus { center: vec![0.0], inner: 0.5, outer: 2.0 };
        assert!((lipschitz_constant(&abs, &ann, 0.1).unwrap() - 1.0).abs() < 1e-12);

        let empty = Region::Annulus { center: vec![0.0], inner: 0.5, outer: 0.55 };
        assert!(lipschitz_constant(&abs, &empty, 1.0).is_err());
    }

    #[test]
    fn lipschitz_is_rescaling_invariant() {
        let g = FnGraph::new(1, |x: &[f64]| (3.0 * x[0]).sin() + x[0] * x[0]);
        let u = GraphFunction::sample(&g, vec![0.0], 4.0, 0.0625, Extension::LinearGrowth { m: 10.0 }).unwrap();
        let region = Region::Annulus { center: vec![0.0], inner: 0.5, outer: 2.0 };
        for r in [0.5, 2.0] {
            let ur = rescale(&u, r, Some(0.0625 / r)).unwrap();
            let lhs = lipschitz_constant(&ur, &region.scaled(1.0 / r), 0.0625 / r).unwrap();
            let rhs = lipschitz_constant(&u, &region, 0.0625).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * rhs, "{lhs} vs {rhs}");
        }
    }
}
