//! Numerical tooling for nonlocal minimal surfaces of subgraph type.
//!
//! The crate evaluates the `s`-fractional perimeter of voxelized sets, the
//! nonlocal mean curvature of sets and of graphs, the linearized graph
//! operator, and solves the zero-curvature graph equation with exterior data.
//! The [`analysis`] module bundles the diagnostics used to study flatness of
//! cones: the maximum-principle certificate, the slab/F-form reduction oracle,
//! blow-down diagnostics and the rotated product-structure test.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod operators;
pub mod quad;
pub mod solver;

pub use error::{Error, Result};
pub use kernel::{FractionalParams, Kernel, KernelAccuracy};
