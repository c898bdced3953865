//! Fractional interaction, perimeter and nonlocal mean curvature operators.

mod config;
mod graph_form;
mod voxel_ops;

pub use config::{CurvatureReport, QuadratureConfig, RadialMode, TailMode};
pub use graph_form::{nmc_graph, nmc_linearized, nmc_linearized_pv, GraphOperator, HemisphereRule, PointContext, RadialLayout};
pub use voxel_ops::{
    interaction, interaction_with, mean_curvature_set, s_perimeter, CubeKernel, InteractionReport, PerimeterReport,
    SetQuadrature,
};
