use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{dot, Graph};
use crate::{Error, Result};

/// Uniform voxel grid on the box `lower + spacing·[0, shape)` in ℝᴺ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub lower: Vec<f64>,
    pub spacing: f64,
    pub shape: Vec<usize>,
}

impl VoxelGrid {
    pub fn new(lower: Vec<f64>, spacing: f64, shape: Vec<usize>) -> Result<Self> {
        if lower.len() != shape.len() || lower.is_empty() {
            return Err(Error::config("voxel grid lower corner and shape must have equal, non-zero length"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) || lower.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("voxel spacing must be positive and corners finite"));
        }
        if shape.iter().any(|&m| m == 0) {
            return Err(Error::config("voxel grid must have at least one voxel per axis"));
        }
        Ok(Self { lower, spacing, shape })
    }

    /// Grid covering `[lo, hi]ᴺ` with `cells` voxels per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        Self::new(vec![lo; dim], (hi - lo) / cells as f64, vec![cells; dim])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.shape).map(|(l, &m)| l + self.spacing * m as f64).collect()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            out[axis] = idx % self.shape[axis];
            idx /= self.shape[axis];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.shape).fold(0, |acc, (&i, &m)| acc * m + i)
    }

    pub fn center_into(&self, idx: usize, out: &mut [f64]) {
        let mut rest = idx;
        for axis in (0..self.dim()).rev() {
            let i = rest % self.shape[axis];
            rest /= self.shape[axis];
            out[axis] = self.lower[axis] + self.spacing * (i as f64 + 0.5);
        }
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.center_into(idx, &mut x);
        x
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.shape))
            .all(|(v, (l, &m))| *v >= *l && *v < l + self.spacing * m as f64)
    }

    /// Index of the voxel containing `x`, if inside the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for axis in 0..self.dim() {
            let t = ((x[axis] - self.lower[axis]) / self.spacing).floor();
            if !(t >= 0.0 && t < self.shape[axis] as f64) {
                return None;
            }
            flat = flat * self.shape[axis] + t as usize;
        }
        Some(flat)
    }

    pub fn scaled(&self, r: f64) -> Self {
        Self { lower: self.lower.iter().map(|v| v * r).collect(), spacing: self.spacing * r, shape: self.shape.clone() }
    }

    /// Voxels in the outermost layer of the box.
    pub fn is_boundary_voxel(&self, idx: usize) -> bool {
        self.multi_index(idx).iter().zip(&self.shape).any(|(&i, &m)| i == 0 || i + 1 == m)
    }
}

/// `x ↦ r·u(x/r)`: the graph whose subgraph is `r` times the subgraph of `u`.
#[derive(Clone)]
pub struct ScaledGraph {
    inner: Arc<dyn Graph>,
    r: f64,
}

impl ScaledGraph {
    pub fn new(inner: Arc<dyn Graph>, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("dilation factor {r} must be positive")));
        }
        Ok(Self { inner, r })
    }
}

impl Graph for ScaledGraph {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let y: Vec<f64> = x.iter().map(|v| v / self.r).collect();
        Ok(self.r * self.inner.value(&y)?)
    }

    fn resolution(&self) -> Option<f64> {
        self.inner.resolution().map(|h| h * self.r)
    }

    fn far_field_radius(&self) -> Option<f64> {
        self.inner.far_field_radius().map(|v| v * self.r)
    }

    fn is_excluded(&self, x: &[f64]) -> bool {
        let y: Vec<f64> = x.iter().map(|v| v / self.r).collect();
        self.inner.is_excluded(&y)
    }
}

/// What a [`VoxelSet`] looks like outside its voxel box.
#[derive(Clone)]
pub enum Exterior {
    Empty,
    Full,
    /// `{x : normal·x < offset}`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// `{x_N < u(x₁..x_n)}`.
    Subgraph(Arc<dyn Graph>),
    /// `{x_N ≥ u(x₁..x_n)}`.
    Supergraph(Arc<dyn Graph>),
}

impl std::fmt::Debug for Exterior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exterior::Empty => write!(f, "Empty"),
            Exterior::Full => write!(f, "Full"),
            Exterior::HalfSpace { normal, offset } => {
                f.debug_struct("HalfSpace").field("normal", normal).field("offset", offset).finish()
            }
            Exterior::Subgraph(g) => write!(f, "Subgraph(dim {})", g.dim()),
            Exterior::Supergraph(g) => write!(f, "Supergraph(dim {})", g.dim()),
        }
    }
}

impl Exterior {
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        let n = x.len() - 1;
        Ok(match self {
            Exterior::Empty => false,
            Exterior::Full => true,
            Exterior::HalfSpace { normal, offset } => dot(normal, x) < *offset,
            Exterior::Subgraph(g) => x[n] < g.value(&x[..n])?,
            Exterior::Supergraph(g) => x[n] >= g.value(&x[..n])?,
        })
    }

    pub fn complement(&self) -> Self {
        match self {
            Exterior::Empty => Exterior::Full,
            Exterior::Full => Exterior::Empty,
            Exterior::HalfSpace { normal, offset } => {
                Exterior::HalfSpace { normal: normal.iter().map(|v| -v).collect(), offset: -offset }
            }
            Exterior::Subgraph(g) => Exterior::Supergraph(g.clone()),
            Exterior::Supergraph(g) => Exterior::Subgraph(g.clone()),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Exterior::Empty)
    }

    pub fn scaled(&self, r: f64) -> Result<Self> {
        Ok(match self {
            Exterior::Empty => Exterior::Empty,
            Exterior::Full => Exterior::Full,
            Exterior::HalfSpace { normal, offset } => Exterior::HalfSpace { normal: normal.clone(), offset: offset * r },
            Exterior::Subgraph(g) => Exterior::Subgraph(Arc::new(ScaledGraph::new(g.clone(), r)?)),
            Exterior::Supergraph(g) => Exterior::Supergraph(Arc::new(ScaledGraph::new(g.clone(), r)?)),
        })
    }
}

/// The domain Ω of a relative perimeter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Omega {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Omega {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Omega::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| a <= v && v < b),
            Omega::Ball { center, radius } => {
                x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius
            }
        }
    }

    pub fn scaled(&self, r: f64) -> Self {
        match self {
            Omega::Box { lower, upper } => Omega::Box {
                lower: lower.iter().map(|v| v * r).collect(),
                upper: upper.iter().map(|v| v * r).collect(),
            },
            Omega::Ball { center, radius } => {
                Omega::Ball { center: center.iter().map(|v| v * r).collect(), radius: radius * r }
            }
        }
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Omega::Box { lower, upper } => (lower.clone(), upper.clone()),
            Omega::Ball { center, radius } => {
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
        }
    }
}

/// A set in ℝᴺ: a voxel indicator inside the grid box, `exterior` outside.
#[derive(Debug, Clone)]
pub struct VoxelSet {
    pub grid: VoxelGrid,
    pub indicator: Vec<bool>,
    pub exterior: Exterior,
}

impl VoxelSet {
    pub fn new(grid: VoxelGrid, indicator: Vec<bool>, exterior: Exterior) -> Result<Self> {
        if indicator.len() != grid.len() {
            return Err(Error::config(format!("indicator has {} entries for {} voxels", indicator.len(), grid.len())));
        }
        if let Exterior::HalfSpace { normal, .. } = &exterior {
            if normal.len() != grid.dim() {
                return Err(Error::config("half-space normal dimension does not match the grid"));
            }
        }
        if let Exterior::Subgraph(g) | Exterior::Supergraph(g) = &exterior {
            if g.dim() + 1 != grid.dim() {
                return Err(Error::config("exterior graph dimension must be N-1"));
            }
        }
        Ok(Self { grid, indicator, exterior })
    }

    /// Voxel `k` belongs to the set iff `inside(center_k)`.
    pub fn from_fn(grid: VoxelGrid, exterior: Exterior, inside: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let indicator = (0..grid.len())
            .map(|k| {
                grid.center_into(k, &mut x);
                inside(&x)
            })
            .collect();
        Self::new(grid, indicator, exterior)
    }

    /// Voxelizes the exterior description itself over the whole box.
    pub fn from_exterior(grid: VoxelGrid, exterior: Exterior) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let mut indicator = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            grid.center_into(k, &mut x);
            indicator.push(exterior.contains(&x)?);
        }
        Self::new(grid, indicator, exterior)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        match self.grid.locate(x) {
            Some(k) => Ok(self.indicator[k]),
            None => self.exterior.contains(x),
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            indicator: self.indicator.iter().map(|b| !b).collect(),
            exterior: self.exterior.complement(),
        }
    }

    pub fn scaled(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain(format!("dilation factor {r} must be positive")));
        }
        Ok(Self { grid: self.grid.scaled(r), indicator: self.indicator.clone(), exterior: self.exterior.scaled(r)? })
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|b| **b).count()
    }

    /// Fraction of outermost-layer voxels on which the indicator agrees with
    /// the exterior description at the voxel center.
    pub fn exterior_agreement(&self) -> Result<f64> {
        let mut total = 0usize;
        let mut agree = 0usize;
        let mut x = vec![0.0; self.dim()];
        for k in 0..self.grid.len() {
            if self.grid.is_boundary_voxel(k) {
                self.grid.center_into(k, &mut x);
                total += 1;
                if self.exterior.contains(&x)? == self.indicator[k] {
                    agree += 1;
                }
            }
        }
        Ok(agree as f64 / total.max(1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cone, ConeTrace};

    #[test]
    fn locate_and_centers_agree() {
        let g = VoxelGrid::new(vec![-1.0, 0.0, 2.0], 0.25, vec![8, 3, 5]).unwrap();
        for k in [0, 7, 31, g.len() - 1] {
            assert_eq!(g.locate(&g.center(k)), Some(k));
            assert_eq!(g.flat_index(&g.multi_index(k)), k);
        }
        assert_eq!(g.locate(&[1.0, 0.1, 2.1]), None);
    }

    #[test]
    fn complement_flips_everything() {
        let grid = VoxelGrid::cube(2, -1.0, 1.0, 16).unwrap();
        let e = VoxelSet::from_exterior(grid, Exterior::HalfSpace { normal: vec![0.3, 1.0], offset: 0.1 }).unwrap();
        let c = e.complement();
        for p in [[0.0, 0.0], [0.7, -0.6], [5.0, 3.0], [-4.0, -9.0]] {
            assert_ne!(e.contains(&p).unwrap(), c.contains(&p).unwrap());
        }
        assert_eq!(e.exterior_agreement().unwrap(), 1.0);
    }

    #[test]
    fn subgraph_exterior_scales() {
        let u: Arc<dyn Graph> = Arc::new(Cone::graph(ConeTrace::line(1.0, -1.0)).unwrap());
        let ext = Exterior::Subgraph(Arc::new(ScaledGraph::new(u, 2.0).unwrap()));
        assert!(ext.contains(&[3.0, 2.9]).unwrap());
        assert!(!ext.contains(&[3.0, 3.1]).unwrap());
    }
}
