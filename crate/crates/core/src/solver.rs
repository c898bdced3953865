//! Damped residual iteration for `𝓕[u] = 0`.
//!
//! Each sweep evaluates `𝓕` at every unknown node with the current iterate
//! (in parallel, collected in node order) and then updates all nodes at once.
//! Updates are scaled by `h^{1+s}`, the natural time step of an operator of
//! order `1 + s`, so the stable damping does not depend on the grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{grid_lipschitz, Cone, ConeTrace, Graph, GraphFunction};
use crate::operators::{GraphOperator, QuadratureConfig};
use crate::{Error, FractionalParams, Result};

/// Default damping. On the `|x|` fixture the residual decreases
/// monotonically up to `damping·scale ≈ 1.0` and oscillates from about 1.2
/// on; the default keeps a 20% margin.
pub const STABLE_DAMPING: f64 = 0.08;
/// Default update scale (the preconditioner on top of `h^{1+s}`).
pub const DEFAULT_SCALE: f64 = 10.0;
/// Iterations without a new best residual tolerated by the divergence test.
pub const STALL_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    Fixed,
    /// `damping / (1 + k/100)` at iteration `k`.
    Diminishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub damping: f64,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub step_rule: StepRule,
    /// Multiplies every update on top of `damping·h^{1+s}`.
    pub scale: f64,
    /// Excised radius used for residual evaluations; defaults to the grid
    /// spacing.
    pub inner_cutoff: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            damping: STABLE_DAMPING,
            max_iters: 20_000,
            residual_tol: 1e-6,
            step_rule: StepRule::Fixed,
            scale: DEFAULT_SCALE,
            inner_cutoff: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config(format!("damping = {} must lie in (0, 1]", self.damping)));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return Err(Error::config("residual_tol must be positive"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config("scale must be positive"));
        }
        if let Some(d) = self.inner_cutoff {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::config("solver inner_cutoff must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    fn step(&self, k: usize) -> f64 {
        match self.step_rule {
            StepRule::Fixed => self.damping,
            StepRule::Diminishing => self.damping / (1.0 + k as f64 / 100.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Sup-norm of the residual over the unknown nodes, one entry per
    /// evaluated iterate (initial guess first).
    pub residual_history: Vec<f64>,
    /// Grid Lipschitz constant of the final iterate.
    pub lipschitz_monitor: f64,
    pub converged: bool,
    /// Largest reported quadrature error among the final residuals.
    pub quadrature_error: f64,
    /// Largest final residual on unknowns next to the fixed data. A
    /// minimizer that jumps at the wall shows up here as a spike the grid
    /// cannot resolve; `None` for cone solves.
    pub wall_residual: Option<f64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Axis-aligned box whose interior grid nodes are the unknowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InteriorBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(Error::config("interior box needs lower < upper componentwise"));
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(n: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; n], vec![half_width; n])
    }

    fn contains_strictly(&self, x: &[f64], slack: f64) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *v > a + slack && *v < b - slack)
    }
}

fn operator_for(params: &FractionalParams, quad: &QuadratureConfig, cfg: &SolveConfig, h: f64) -> Result<GraphOperator> {
    let mut q = *quad;
    q.inner_cutoff = cfg.inner_cutoff.unwrap_or(h.min(0.5));
    GraphOperator::new(*params, q)
}

/// The iterate seen by the residual: a homogeneous extension describes the
/// data outside the box only, so no point is excluded as a cone apex.
struct Iterate<'a>(&'a GraphFunction);

impl Graph for Iterate<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.0.value(x)
    }

    fn resolution(&self) -> Option<f64> {
        self.0.resolution()
    }

    fn far_field_radius(&self) -> Option<f64> {
        self.0.far_field_radius()
    }

    fn is_excluded(&self, _: &[f64]) -> bool {
        false
    }
}

/// Unstable damping does not blow up: `𝓕` is bounded, so the sweep settles
/// into a grid-scale 2-cycle whose residual stays well above the best one
/// seen. Divergence is declared when the residual is 10× above its best
/// value, when the best value is more than [`STALL_WINDOW`] iterations old
/// and the residual is still 2× above it, or when the Lipschitz monitor
/// exceeds `lipschitz_limit`.
fn diverged(history: &[f64], lipschitz: f64, lipschitz_limit: f64) -> bool {
    let k = history.len();
    let last = history[k - 1];
    if !last.is_finite() || !lipschitz.is_finite() {
        return true;
    }
    let (best_at, best) =
        history.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let stalled = k - 1 >= best_at + STALL_WINDOW && last > 2.0 * best;
    last > 10.0 * best || stalled || lipschitz > lipschitz_limit
}

/// Solves `𝓕[u] = 0` at the grid nodes strictly inside `interior`, keeping
/// every other node and the extension of `exterior` fixed.
pub fn solve_dirichlet(
    exterior: &GraphFunction,
    interior: &InteriorBox,
    params: &FractionalParams,
    quad: &QuadratureConfig,
    cfg: &SolveConfig,
) -> Result<(GraphFunction, SolveReport)> {
    cfg.validate()?;
    quad.validate()?;
    let n = exterior.dim();
    if params.n() != n || interior.lower.len() != n {
        return Err(Error::config("exterior data, interior box and parameters disagree on n"));
    }
    let h = exterior.spacing();
    let unknowns: Vec<usize> =
        (0..exterior.len()).filter(|&k| interior.contains_strictly(&exterior.node(k), 1e-9 * h)).collect();
    if unknowns.is_empty() {
        return Err(Error::config("the interior box contains no grid nodes"));
    }
    if unknowns.iter().any(|&k| exterior.multi_index(k).iter().any(|&i| i == 0 || i + 1 == exterior.points_per_axis())) {
        return Err(Error::config("the interior box must lie strictly inside the sampling box"));
    }
    let op = operator_for(params, quad, cfg, h)?;
    let nodes: Vec<Vec<f64>> = unknowns.iter().map(|&k| exterior.node(k)).collect();
    let is_unknown: std::collections::HashSet<usize> = unknowns.iter().copied().collect();
    let at_wall: Vec<bool> = unknowns
        .iter()
        .map(|&k| {
            let m = exterior.multi_index(k);
            (0..n).any(|a| {
                [m[a] - 1, m[a] + 1].into_iter().any(|i| {
                    let mut p = m.clone();
                    p[a] = i;
                    !is_unknown.contains(&exterior.flat_index(&p))
                })
            })
        })
        .collect();
    let mut u = exterior.with_samples(initial_guess(exterior, &unknowns)?)?;
    let tau = cfg.scale * h.powf(1.0 + params.s());
    // Solutions may jump at the edge of the interior (boundary stickiness),
    // so the slope of a stable iterate can legitimately reach jump/h; an
    // unstable sweep grows a grid-scale oscillation without bound.
    let lipschitz_limit = 10.0 * grid_lipschitz(&u).max(1.0) / h.min(1.0);

    let residuals = |u: &GraphFunction| -> Result<(Vec<f64>, f64)> {
        let reports =
            nodes.par_iter().map(|x| op.nmc(&Iterate(u), x)).collect::<Result<Vec<_>>>()?;
        let err = reports.iter().map(|r| r.total_error()).fold(0.0, f64::max);
        Ok((reports.into_iter().map(|r| r.value).collect(), err))
    };

    let mut history = vec![];
    let mut iterations = 0;
    loop {
        let (res, qerr) = residuals(&u)?;
        history.push(res.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let wall = res.iter().zip(&at_wall).filter(|(_, w)| **w).fold(0.0f64, |m, (v, _)| m.max(v.abs()));
        let report = |history: Vec<f64>, u: &GraphFunction, converged| SolveReport {
            iterations,
            lipschitz_monitor: grid_lipschitz(u),
            converged,
            quadrature_error: qerr,
            residual_history: history,
            wall_residual: Some(wall),
        };
        if history[history.len() - 1] <= cfg.residual_tol {
            return Ok((u.clone(), report(history, &u, true)));
        }
        if diverged(&history, grid_lipschitz(&u), lipschitz_limit) {
            return Err(Error::Divergence { report: Box::new(report(history, &u, false)) });
        }
        if iterations == cfg.max_iters {
            return Ok((u.clone(), report(history, &u, false)));
        }
        let step = cfg.step(iterations) * tau;
        let mut samples = u.samples().to_vec();
        for (&k, r) in unknowns.iter().zip(&res) {
            samples[k] += step * r;
        }
        u = u.with_samples(samples)?;
        iterations += 1;
    }
}

/// Interpolates the fixed nodes adjacent to the interior block: linear for
/// n = 1, the bilinear Coons patch for n = 2, and the mean of the axis-wise
/// linear interpolants otherwise.
fn initial_guess(u: &GraphFunction, unknowns: &[usize]) -> Result<Vec<f64>> {
    let n = u.dim();
    let mut samples = u.samples().to_vec();
    let multis: Vec<Vec<usize>> = unknowns.iter().map(|&k| u.multi_index(k)).collect();
    let lo: Vec<usize> = (0..n).map(|a| multis.iter().map(|m| m[a]).min().unwrap() - 1).collect();
    let hi: Vec<usize> = (0..n).map(|a| multis.iter().map(|m| m[a]).max().unwrap() + 1).collect();
    let at = |m: &[usize]| u.samples()[u.flat_index(m)];
    for (&k, m) in unknowns.iter().zip(&multis) {
        let t: Vec<f64> = (0..n).map(|a| (m[a] - lo[a]) as f64 / (hi[a] - lo[a]) as f64).collect();
        let along = |a: usize| {
            let mut p = m.clone();
            p[a] = lo[a];
            let left = at(&p);
            p[a] = hi[a];
            (1.0 - t[a]) * left + t[a] * at(&p)
        };
        samples[k] = match n {
            1 => along(0),
            2 => {
                let corner = |i: usize, j: usize| at(&[i, j]);
                let bilinear = (1.0 - t[0]) * (1.0 - t[1]) * corner(lo[0], lo[1])
                    + t[0] * (1.0 - t[1]) * corner(hi[0], lo[1])
                    + (1.0 - t[0]) * t[1] * corner(lo[0], hi[1])
                    + t[0] * t[1] * corner(hi[0], hi[1]);
                along(0) + along(1) - bilinear
            }
            _ => (0..n).map(along).sum::<f64>() / n as f64,
        };
    }
    Ok(samples)
}

/// Effective spacing of the n = 1 trace `(a, b)` in [`solve_cone`].
pub const LINE_TRACE_SPACING: f64 = 0.25;

/// Which trace samples may move in [`solve_cone`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConeConstraint {
    /// Every sample is free.
    Free,
    /// `fixed[k]` pins sample `k` (for n = 1, index 0 is `x = +1` and 1 is
    /// `x = −1`; for n = 2, the circle samples in order).
    Fixed(Vec<bool>),
}

fn trace_values(t: &ConeTrace) -> Result<Vec<f64>> {
    match t {
        ConeTrace::Line { pos, neg } => Ok(vec![*pos, -*neg]),
        ConeTrace::Circle { values } => Ok(values.clone()),
        ConeTrace::Sphere { .. } => Err(Error::Unsupported("solve_cone supports n ∈ {1, 2}".into())),
    }
}

fn trace_from_values(t: &ConeTrace, v: &[f64]) -> ConeTrace {
    match t {
        ConeTrace::Line { .. } => ConeTrace::line(v[0], -v[1]),
        _ => ConeTrace::Circle { values: v.to_vec() },
    }
}

fn trace_points(t: &ConeTrace) -> Vec<Vec<f64>> {
    match t {
        ConeTrace::Line { .. } => vec![vec![1.0], vec![-1.0]],
        ConeTrace::Circle { values } => {
            let m = values.len();
            (0..m)
                .map(|k| {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect()
        }
        ConeTrace::Sphere { .. } => vec![],
    }
}

/// Relaxes the trace of a degree-one cone towards `𝓕 = 0` on the unit
/// sphere.
///
/// Raising the trace at a point of positive curvature rotates the whole ray
/// upwards, which steepens a convex cone; the trace therefore moves against
/// the residual (`value ← value − τ𝓕`), the homogeneous counterpart of lifting
/// the apex relative to the rays.
pub fn solve_cone(
    initial: &ConeTrace,
    constraint: &ConeConstraint,
    params: &FractionalParams,
    quad: &QuadratureConfig,
    cfg: &SolveConfig,
) -> Result<(ConeTrace, SolveReport)> {
    cfg.validate()?;
    quad.validate()?;
    initial.validate()?;
    if initial.dim() != params.n() {
        return Err(Error::config("cone trace dimension does not match n"));
    }
    let mut values = trace_values(initial)?;
    let fixed = match constraint {
        ConeConstraint::Free => vec![false; values.len()],
        ConeConstraint::Fixed(f) if f.len() == values.len() => f.clone(),
        ConeConstraint::Fixed(_) => return Err(Error::config("constraint length does not match the trace")),
    };
    let points = trace_points(initial);
    // angular spacing of the trace plays the role of h; the two-point trace
    // of n = 1 uses a fixed effective spacing
    let h = match initial {
        ConeTrace::Circle { values } => 2.0 * std::f64::consts::PI / values.len() as f64,
        _ => LINE_TRACE_SPACING,
    };
    let mut q = *quad;
    q.inner_cutoff = cfg.inner_cutoff.unwrap_or(quad.inner_cutoff);
    let op = GraphOperator::new(*params, q)?;
    let tau = cfg.scale * h.powf(1.0 + params.s());
    let lipschitz_limit = 10.0 * values.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut history = vec![];
    let mut iterations = 0;
    loop {
        let cone = Cone::graph(trace_from_values(initial, &values))?;
        let reports = points
            .par_iter()
            .zip(&fixed)
            .filter(|(_, f)| !**f)
            .map(|(x, _)| op.nmc(&cone, x))
            .collect::<Result<Vec<_>>>()?;
        let qerr = reports.iter().map(|r| r.total_error()).fold(0.0, f64::max);
        history.push(reports.iter().fold(0.0f64, |m, r| m.max(r.value.abs())));
        let lipschitz = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let report = |history: Vec<f64>, converged| SolveReport {
            iterations,
            residual_history: history,
            lipschitz_monitor: lipschitz,
            converged,
            quadrature_error: qerr,
            wall_residual: None,
        };
        let last = history[history.len() - 1];
        if last <= cfg.residual_tol {
            return Ok((cone.trace, report(history, true)));
        }
        if diverged(&history, lipschitz, lipschitz_limit) {
            return Err(Error::Divergence { report: Box::new(report(history, false)) });
        }
        if iterations == cfg.max_iters {
            return Ok((cone.trace, report(history, false)));
        }
        let step = cfg.step(iterations) * tau;
        let mut free = reports.iter();
        for (v, f) in values.iter_mut().zip(&fixed) {
            if !*f {
                *v -= step * free.next().expect("one report per free sample").value;
            }
        }
        iterations += 1;
    }
}

/// Convenience: the residual `𝓕` of a cone at its trace sample points.
pub fn cone_residuals(trace: &ConeTrace, params: &FractionalParams, quad: &QuadratureConfig) -> Result<Vec<f64>> {
    let op = GraphOperator::new(*params, *quad)?;
    let cone = Cone::graph(trace.clone())?;
    trace_points(trace).par_iter().map(|x| op.nmc(&cone, x).map(|r| r.value)).collect()
}
