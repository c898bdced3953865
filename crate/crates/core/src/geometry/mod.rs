//! Graph functions, cones, voxel sets and the rescaling/rotation transforms.

mod cone;
mod graph;
pub mod io;
mod rotation;
mod voxel;

pub use cone::{Cone, ConeTrace, SplitCone};
pub use graph::{
    blowup_at, grid_lipschitz, lipschitz_constant, rescale, AffineGraph, Extension, FnGraph, GraphFunction, Region,
};
pub use rotation::{rotate_cone, HalfSpace, MembershipPredicate, RotatedSubgraph, RotationTheta};
pub use voxel::{Exterior, Omega, ScaledGraph, VoxelGrid, VoxelSet};

use crate::Result;

/// Largest base dimension handled by the stack-allocated probe buffers.
pub const MAX_DIM: usize = 4;

/// A real function on ℝⁿ whose subgraph `{x_{n+1} < u(x)}` is the set of
/// interest.
pub trait Graph: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    /// Sampling resolution for grid-backed functions.
    fn resolution(&self) -> Option<f64> {
        None
    }

    /// Radius beyond which the function follows a far-field model that admits
    /// an expansion in powers of `1/|x|` (affine or homogeneous). `None`
    /// means no tail model is available.
    fn far_field_radius(&self) -> Option<f64> {
        None
    }

    /// Points where curvature evaluation is meaningless (cone apex).
    fn is_excluded(&self, _x: &[f64]) -> bool {
        false
    }
}

impl<G: Graph + ?Sized> Graph for &G {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn resolution(&self) -> Option<f64> {
        (**self).resolution()
    }
    fn far_field_radius(&self) -> Option<f64> {
        (**self).far_field_radius()
    }
    fn is_excluded(&self, x: &[f64]) -> bool {
        (**self).is_excluded(x)
    }
}

impl<G: Graph + ?Sized> Graph for std::sync::Arc<G> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn resolution(&self) -> Option<f64> {
        (**self).resolution()
    }
    fn far_field_radius(&self) -> Option<f64> {
        (**self).far_field_radius()
    }
    fn is_excluded(&self, x: &[f64]) -> bool {
        (**self).is_excluded(x)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}
