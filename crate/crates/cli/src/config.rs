//! Run configuration: a TOML file plus `--dotted.key=value` overrides,
//! resolved into [`RunConfig`] and fingerprinted. The schema is documented in
//! `docs/config.md`.

use std::path::{Path, PathBuf};

use fracmin::analysis::suites::{Suite, SuiteOptions};
use fracmin::operators::{QuadratureConfig, SetQuadrature};
use fracmin::solver::SolveConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Single source of randomness (Monte-Carlo oracle).
    pub seed: u64,
    pub params: Params,
    pub quadrature: QuadratureConfig,
    pub set_quadrature: SetQuadrature,
    pub solver: SolveConfig,
    pub input: Input,
    pub set: SetSpec,
    pub curvature: CurvatureSpec,
    pub perimeter: PerimeterSpec,
    pub problem: Problem,
    pub verify: VerifySpec,
    pub export: ExportSpec,
    pub output: Output,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: SuiteOptions::default().seed,
            params: Params::default(),
            quadrature: QuadratureConfig::default(),
            set_quadrature: SetQuadrature::default(),
            solver: SolveConfig::default(),
            input: Input::default(),
            set: SetSpec::default(),
            curvature: CurvatureSpec::default(),
            perimeter: PerimeterSpec::default(),
            problem: Problem::default(),
            verify: VerifySpec::default(),
            export: ExportSpec::default(),
            output: Output::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Base dimension of graphs; sets live in ℝ^{n+1}.
    pub n: usize,
    pub s: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self { n: 1, s: 0.5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Input {
    /// GraphFunction file (`.csv` or binary).
    pub graph: Option<PathBuf>,
    /// Degree-one cone given by its trace, e.g. `line:1;-1`.
    pub cone: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Ball,
    Box,
    HalfSpace,
    /// `{x_N < u(x')}` for the graph in `input.graph`.
    Subgraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetSpec {
    pub shape: Shape,
    /// Voxel box.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cells along the first axis; the spacing is shared by all axes.
    pub cells: usize,
    /// Ball.
    pub center: Vec<f64>,
    pub radius: f64,
    /// Box shape.
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
    /// Half space `{normal·x < offset}`.
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Default for SetSpec {
    fn default() -> Self {
        Self {
            shape: Shape::Ball,
            lower: vec![-2.0, -2.0],
            upper: vec![2.0, 2.0],
            cells: 32,
            center: vec![0.0, 0.0],
            radius: 1.0,
            box_lower: vec![],
            box_upper: vec![],
            normal: vec![0.0, 1.0],
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureForm {
    Graph,
    Set,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureSpec {
    pub form: CurvatureForm,
    pub points: Vec<Vec<f64>>,
}

impl Default for CurvatureSpec {
    fn default() -> Self {
        Self { form: CurvatureForm::Graph, points: vec![] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaShape {
    Ball,
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerimeterSpec {
    pub omega: OmegaShape,
    pub center: Vec<f64>,
    pub radius: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Default for PerimeterSpec {
    fn default() -> Self {
        Self { omega: OmegaShape::Ball, center: vec![0.0, 0.0], radius: 1.0, lower: vec![], upper: vec![] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Dirichlet,
    Cone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    /// `u = |x|` outside `[-1, 1]`, sampled on `[-2, 2]`.
    AbsExterior,
    /// `u = 0.5 x + 0.25` outside `[-1, 1]`.
    AffineExterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Problem {
    pub kind: ProblemKind,
    /// Built-in exterior data, used when `input.graph` is unset.
    pub fixture: Option<Fixture>,
    /// Grid spacing of the built-in fixtures.
    pub spacing: f64,
    /// Interior box (defaults to `[-1, 1]ⁿ`).
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cone problems: initial trace (defaults to `input.cone`) and pinned
    /// samples.
    pub fixed: Vec<bool>,
}

impl Default for Problem {
    fn default() -> Self {
        Self {
            kind: ProblemKind::Dirichlet,
            fixture: None,
            spacing: 1.0 / 16.0,
            lower: vec![],
            upper: vec![],
            fixed: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Suite names, or `["all"]`.
    pub suites: Vec<String>,
    pub mc_samples: usize,
    pub include_nonsmooth: bool,
    pub bound_spacing: f64,
    pub solver_spacing: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        let d = SuiteOptions::default();
        Self {
            suites: vec!["all".into()],
            mc_samples: d.mc_samples,
            include_nonsmooth: d.include_nonsmooth,
            bound_spacing: d.bound_spacing,
            solver_spacing: d.solver_spacing,
        }
    }
}

impl VerifySpec {
    pub fn selected(&self) -> Result<Vec<Suite>, CliError> {
        if self.suites.iter().any(|s| s == "all") {
            return Ok(Suite::ALL.to_vec());
        }
        if self.suites.is_empty() {
            return Err(CliError::Config("verify.suites is empty".into()));
        }
        self.suites.iter().map(|s| s.parse::<Suite>().map_err(CliError::from)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportKind {
    /// `iter,residual` from a solve report (JSON).
    Residuals,
    /// `radius,lipschitz,affine_distance,cauchy_distance` for a graph file.
    Blowdown,
    /// `x,u` for an n = 1 graph file.
    Profile,
    /// The graph file in the plain-text GraphFunction format.
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSpec {
    pub kind: ExportKind,
    /// Solve report (residuals) or GraphFunction file (other kinds).
    pub input: Option<PathBuf>,
    pub radii: Vec<f64>,
    pub probe_spacing: f64,
}

impl Default for ExportSpec {
    fn default() -> Self {
        Self { kind: ExportKind::Residuals, input: None, radii: vec![2.0, 4.0, 8.0], probe_spacing: 1.0 / 32.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    /// JSON-lines (curvature, perimeter, verify) or CSV (export); stdout
    /// when unset.
    pub path: Option<PathBuf>,
    /// Solution GraphFunction written by `solve` (`.csv` or binary).
    pub solution: Option<PathBuf>,
    /// Solve report (JSON).
    pub report: Option<PathBuf>,
}

fn parse_scalar(raw: &str) -> toml::Value {
    // `key = <raw>` parses arrays, numbers, booleans and quoted strings;
    // anything else is taken as a bare string.
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_dotted(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed override key {key:?}")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {part:?} is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads the config file (if any), applies `key=value` overrides in order and
/// deserializes the result. Unknown keys are rejected.
pub fn resolve(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for (key, raw) in overrides {
        set_dotted(&mut table, key, parse_scalar(raw))?;
    }
    toml::Value::Table(table).try_into::<RunConfig>().map_err(|e| CliError::Config(e.to_string()))
}

/// SHA-256 of the canonical JSON of the command and resolved config.
pub fn fingerprint(command: &str, cfg: &RunConfig) -> String {
    let canonical = serde_json::to_string(&(command, cfg)).expect("config serializes");
    format!("{:x}", Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_keys_and_keep_types() {
        let cfg = resolve(
            None,
            &[
                ("params.s".into(), "0.3".into()),
                ("curvature.points".into(), "[[0.5], [1.0]]".into()),
                ("verify.suites".into(), "[\"scaling\"]".into()),
                ("export.kind".into(), "profile".into()),
            ],
        )
        .unwrap();
        assert_eq!(cfg.params.s, 0.3);
        assert_eq!(cfg.curvature.points, vec![vec![0.5], vec![1.0]]);
        assert_eq!(cfg.verify.selected().unwrap(), vec![Suite::Scaling]);
        assert_eq!(cfg.export.kind, ExportKind::Profile);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(matches!(resolve(None, &[("params.t".into(), "1".into())]), Err(CliError::Config(_))));
    }

    #[test]
    fn fingerprint_tracks_every_key() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(fingerprint("solve", &a), fingerprint("solve", &b));
        b.quadrature.angular_nodes += 2;
        assert_ne!(fingerprint("solve", &a), fingerprint("solve", &b));
        assert_ne!(fingerprint("solve", &a), fingerprint("verify", &a));
    }
}
