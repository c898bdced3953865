use serde::{Deserialize, Serialize};

use crate::geometry::MembershipPredicate;
use crate::{Error, Result};

/// Tensor lattice in ℝᴺ with `points` nodes per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLattice {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: usize,
}

impl ProbeLattice {
    pub fn cube(dim: usize, half_width: f64, points: usize) -> Self {
        Self { lower: vec![-half_width; dim], upper: vec![half_width; dim], points }
    }

    fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let t = i as f64 / (self.points - 1) as f64;
        self.lower[axis] + t * (self.upper[axis] - self.lower[axis])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// `|level(first) − level(second)|` for the pair with opposite membership.
    pub level_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductReport {
    pub is_product: bool,
    pub probes: usize,
    pub violations: usize,
    pub max_violation: Option<Violation>,
}

/// Checks that membership in the set does not depend on the coordinate
/// `y_n` (the second-to-last axis): along every lattice line parallel to
/// `e_n`, all probes must agree with the first one.
pub fn product_structure_test(set: &dyn MembershipPredicate, lattice: &ProbeLattice) -> Result<ProductReport> {
    let dim = set.ambient_dim();
    if dim < 2 || lattice.lower.len() != dim || lattice.upper.len() != dim || lattice.points < 2 {
        return Err(Error::config("probe lattice must match the ambient dimension (≥ 2) with ≥ 2 points per axis"));
    }
    let axis = dim - 2;
    let p = lattice.points;
    let lines = p.pow(dim as u32 - 1);
    let mut probes = 0;
    let mut violations = 0;
    let mut worst: Option<Violation> = None;
    let mut y = vec![0.0; dim];
    for line in 0..lines {
        let mut rest = line;
        for a in (0..dim).rev() {
            if a == axis {
                continue;
            }
            y[a] = lattice.coordinate(a, rest % p);
            rest /= p;
        }
        y[axis] = lattice.coordinate(axis, 0);
        let base_point = y.clone();
        let base_level = set.level(&y)?;
        let base_inside = base_level < 0.0;
        probes += 1;
        for i in 1..p {
            y[axis] = lattice.coordinate(axis, i);
            let level = set.level(&y)?;
            probes += 1;
            if (level < 0.0) != base_inside {
                violations += 1;
                let gap = (level - base_level).abs();
                if worst.as_ref().is_none_or(|w| gap > w.level_gap) {
                    worst = Some(Violation { first: base_point.clone(), second: y.clone(), level_gap: gap });
                }
            }
        }
    }
    Ok(ProductReport { is_product: violations == 0, probes, violations, max_violation: worst })
}
