//! Diagnostics for the flatness machinery: the maximum-principle certificate
//! for degree-zero functions on cones, the slab/F-form reduction oracle,
//! blow-down diagnostics, the rotated product-structure test, node-level
//! integrability bounds, and the verification suites built from them.

mod blowdown;
mod bounds;
mod certificate;
pub mod fixtures;
mod product;
mod reduction;
pub mod suites;

pub use blowdown::{affine_fit, blowdown_diagnostics, BlowdownConfig, BlowdownReport, BlowdownStep};
pub use bounds::{
    check_bounds, measure_bounds, BoundFixture, BoundsConfig, BoundsMeasurement, BoundsVerdict, BOUND_A, BOUND_B,
};
pub use certificate::{
    check_max_principle, sphere_nodes, CertificateConfig, IntegrandSample, MaxPrincipleCertificate, Verdict,
    HOMOGENEITY_PROBES, HOMOGENEITY_TOL,
};
pub use product::{product_structure_test, ProbeLattice, ProductReport, Violation};
pub use reduction::{
    dimension_reduction_oracle, ReductionConfig, ReductionRecord, DEFAULT_PARTITIONS, DEFAULT_TRUNCATION,
};
