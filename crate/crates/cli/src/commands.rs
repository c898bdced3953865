use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use fracmin::analysis::suites::{run_suite, SuiteOptions};
use fracmin::analysis::{blowdown_diagnostics, fixtures, BlowdownConfig};
use fracmin::geometry::io::{load, parse_extension, save, write_csv};
use fracmin::geometry::{Cone, ConeTrace, Exterior, Extension, Graph, GraphFunction, Omega, VoxelGrid, VoxelSet};
use fracmin::operators::{mean_curvature_set, nmc_graph, s_perimeter};
use fracmin::solver::{solve_cone, solve_dirichlet, ConeConstraint, InteriorBox, SolveReport};
use fracmin::FractionalParams;
use serde_json::json;

use crate::config::{CurvatureForm, ExportKind, Fixture, OmegaShape, ProblemKind, RunConfig, Shape};
use crate::CliError;

type Out = Result<(), CliError>;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn params(cfg: &RunConfig) -> Result<FractionalParams, CliError> {
    Ok(FractionalParams::new(cfg.params.n, cfg.params.s)?)
}

fn load_graph(path: &Path) -> Result<GraphFunction, CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!("input file {} does not exist", path.display())));
    }
    Ok(load(path)?)
}

fn parse_trace(text: &str) -> Result<ConeTrace, CliError> {
    match parse_extension(&format!("homogeneous:{text}"))? {
        Extension::Homogeneous(t) => Ok(t),
        _ => unreachable!("homogeneous descriptor"),
    }
}

fn input_graph(cfg: &RunConfig) -> Result<Arc<dyn Graph>, CliError> {
    match (&cfg.input.graph, &cfg.input.cone) {
        (Some(p), None) => Ok(Arc::new(load_graph(p)?)),
        (None, Some(t)) => Ok(Arc::new(Cone::graph(parse_trace(t)?)?)),
        (Some(_), Some(_)) => Err(CliError::Config("set only one of input.graph and input.cone".into())),
        (None, None) => Err(CliError::Config("this command needs input.graph or input.cone".into())),
    }
}

fn build_set(cfg: &RunConfig) -> Result<VoxelSet, CliError> {
    let spec = &cfg.set;
    let dim = spec.lower.len();
    if spec.upper.len() != dim || spec.cells == 0 {
        return Err(CliError::Config("set.lower/set.upper must have equal length and set.cells be positive".into()));
    }
    let h = (spec.upper[0] - spec.lower[0]) / spec.cells as f64;
    let shape: Vec<usize> = spec.lower.iter().zip(&spec.upper).map(|(a, b)| ((b - a) / h).round() as usize).collect();
    let grid = VoxelGrid::new(spec.lower.clone(), h, shape)?;
    let need = |v: &Vec<f64>, what: &str| {
        if v.len() == dim {
            Ok(())
        } else {
            Err(CliError::Config(format!("set.{what} must have {dim} entries")))
        }
    };
    Ok(match spec.shape {
        Shape::Ball => {
            need(&spec.center, "center")?;
            let (c, r) = (spec.center.clone(), spec.radius);
            VoxelSet::from_fn(grid, Exterior::Empty, move |x| {
                x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < r * r
            })?
        }
        Shape::Box => {
            need(&spec.box_lower, "box_lower")?;
            need(&spec.box_upper, "box_upper")?;
            let (lo, hi) = (spec.box_lower.clone(), spec.box_upper.clone());
            VoxelSet::from_fn(grid, Exterior::Empty, move |x| {
                x.iter().zip(lo.iter().zip(&hi)).all(|(v, (a, b))| a <= v && v < b)
            })?
        }
        Shape::HalfSpace => {
            need(&spec.normal, "normal")?;
            VoxelSet::from_exterior(grid, Exterior::HalfSpace { normal: spec.normal.clone(), offset: spec.offset })?
        }
        Shape::Subgraph => {
            let g = input_graph(cfg)?;
            if g.dim() + 1 != dim {
                return Err(CliError::Config(format!("a subgraph in ℝ^{dim} needs a graph of dimension {}", dim - 1)));
            }
            VoxelSet::from_exterior(grid, Exterior::Subgraph(g))?
        }
    })
}

pub fn curvature(cfg: &RunConfig, fp: &str) -> Out {
    let p = params(cfg)?;
    if cfg.curvature.points.is_empty() {
        return Err(CliError::Config("curvature.points is empty".into()));
    }
    let mut out = sink(cfg.output.path.as_deref())?;
    match cfg.curvature.form {
        CurvatureForm::Graph => {
            let u = input_graph(cfg)?;
            if u.dim() != p.n() {
                return Err(CliError::Config(format!("input has dimension {} but params.n = {}", u.dim(), p.n())));
            }
            for x in &cfg.curvature.points {
                if x.len() != p.n() {
                    return Err(CliError::Config(format!("point {x:?} does not have {} coordinates", p.n())));
                }
                let report = nmc_graph(u.as_ref(), x, &p, &cfg.quadrature)?;
                writeln!(out, "{}", report.to_json_line(fp))?;
            }
        }
        CurvatureForm::Set => {
            let set = build_set(cfg)?;
            for x in &cfg.curvature.points {
                let report = mean_curvature_set(&set, x, &p, &cfg.set_quadrature)?;
                writeln!(out, "{}", report.to_json_line(fp))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn perimeter(cfg: &RunConfig, fp: &str) -> Out {
    let p = params(cfg)?;
    let set = build_set(cfg)?;
    let spec = &cfg.perimeter;
    let omega = match spec.omega {
        OmegaShape::Ball => Omega::Ball { center: spec.center.clone(), radius: spec.radius },
        OmegaShape::Box => Omega::Box { lower: spec.lower.clone(), upper: spec.upper.clone() },
    };
    let (lo, hi) = omega.bounds();
    if lo.len() != set.dim() || hi.len() != set.dim() {
        return Err(CliError::Config(format!("perimeter domain must live in ℝ^{}", set.dim())));
    }
    let report = s_perimeter(&set, &omega, &p, &cfg.set_quadrature)?;
    let mut line = serde_json::to_value(&report).expect("report serializes");
    line["total_error"] = json!(report.total_error());
    line["fingerprint"] = json!(fp);
    let mut out = sink(cfg.output.path.as_deref())?;
    writeln!(out, "{line}")?;
    out.flush()?;
    Ok(())
}

fn write_report(cfg: &RunConfig, fp: &str, report: &SolveReport, trace: Option<&ConeTrace>) -> Out {
    let mut v = serde_json::to_value(report).expect("report serializes");
    v["fingerprint"] = json!(fp);
    if let Some(t) = trace {
        v["trace"] = json!(fracmin::geometry::io::extension_descriptor(&Extension::Homogeneous(t.clone())));
    }
    let mut out = sink(cfg.output.report.as_deref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"))?;
    out.flush()?;
    Ok(())
}

fn exterior_data(cfg: &RunConfig) -> Result<(GraphFunction, InteriorBox), CliError> {
    let pr = &cfg.problem;
    let (ext, default_box) = match (&cfg.input.graph, pr.fixture) {
        (Some(path), None) => {
            let g = load_graph(path)?;
            let n = g.dim();
            (g, InteriorBox::cube(n, 1.0)?)
        }
        (None, Some(Fixture::AbsExterior)) => fixtures::abs_exterior(pr.spacing)?,
        (None, Some(Fixture::AffineExterior)) => {
            let g = GraphFunction::from_fn(
                vec![0.0],
                2.0,
                pr.spacing,
                Extension::Affine { slope: vec![0.5], offset: 0.25 },
                |x| 0.5 * x[0] + 0.25,
            )?;
            (g, InteriorBox::cube(1, 1.0)?)
        }
        (Some(_), Some(_)) => return Err(CliError::Config("set only one of input.graph and problem.fixture".into())),
        (None, None) => return Err(CliError::Config("dirichlet solve needs input.graph or problem.fixture".into())),
    };
    let interior = if pr.lower.is_empty() && pr.upper.is_empty() {
        default_box
    } else {
        InteriorBox::new(pr.lower.clone(), pr.upper.clone())?
    };
    Ok((ext, interior))
}

pub fn solve(cfg: &RunConfig, fp: &str) -> Out {
    let p = params(cfg)?;
    let outcome = match cfg.problem.kind {
        ProblemKind::Dirichlet => {
            let (ext, interior) = exterior_data(cfg)?;
            solve_dirichlet(&ext, &interior, &p, &cfg.quadrature, &cfg.solver).map(|(u, r)| (u, r, None))
        }
        ProblemKind::Cone => {
            let text = cfg.input.cone.as_deref().ok_or_else(|| CliError::Config("cone solve needs input.cone".into()))?;
            let initial = parse_trace(text)?;
            let constraint = if cfg.problem.fixed.is_empty() {
                ConeConstraint::Free
            } else {
                ConeConstraint::Fixed(cfg.problem.fixed.clone())
            };
            solve_cone(&initial, &constraint, &p, &cfg.quadrature, &cfg.solver).and_then(|(trace, r)| {
                let n = trace.dim();
                let t = trace.clone();
                let u = GraphFunction::from_fn(
                    vec![0.0; n],
                    2.0,
                    cfg.problem.spacing,
                    Extension::Homogeneous(trace.clone()),
                    move |x| t.eval_homogeneous(x),
                )?;
                Ok((u, r, Some(trace)))
            })
        }
    };
    match outcome {
        Ok((u, report, trace)) => {
            if let Some(path) = &cfg.output.solution {
                save(&u, path)?;
            }
            write_report(cfg, fp, &report, trace.as_ref())?;
            if report.converged {
                Ok(())
            } else {
                Err(CliError::NotConverged(format!(
                    "residual {:.3e} after {} iterations (tol {:.1e})",
                    report.final_residual(),
                    report.iterations,
                    cfg.solver.residual_tol
                )))
            }
        }
        Err(fracmin::Error::Divergence { report }) => {
            write_report(cfg, fp, &report, None)?;
            Err(fracmin::Error::Divergence { report }.into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn verify(cfg: &RunConfig, fp: &str) -> Out {
    let suites = cfg.verify.selected()?;
    let opts = SuiteOptions {
        s: cfg.params.s,
        seed: cfg.seed,
        mc_samples: cfg.verify.mc_samples,
        include_nonsmooth: cfg.verify.include_nonsmooth,
        bound_spacing: cfg.verify.bound_spacing,
        solver_spacing: cfg.verify.solver_spacing,
    };
    let mut lines = match &cfg.output.path {
        Some(p) => Some(sink(Some(p))?),
        None => None,
    };
    let stdout = std::io::stdout();
    let mut table = stdout.lock();
    writeln!(table, "{:<20} {:<6} {:>13} {:>13} {:>11}  property", "suite", "result", "measured", "threshold", "margin")?;
    let mut first_failure = None;
    for suite in suites {
        let outcome = run_suite(suite, &opts)?;
        for prop in &outcome.properties {
            writeln!(
                table,
                "{:<20} {:<6} {:>13.6e} {:>13.6e} {:>+11.3e}  {}",
                suite.name(),
                if prop.passed { "pass" } else { "FAIL" },
                prop.measured,
                prop.threshold,
                prop.margin(),
                prop.name
            )?;
            if let Some(out) = lines.as_mut() {
                let mut v = serde_json::to_value(prop).expect("json");
                v["suite"] = json!(suite.name());
                v["fingerprint"] = json!(fp);
                writeln!(out, "{v}")?;
            }
        }
        if let (None, Some(p)) = (&first_failure, outcome.first_failure()) {
            first_failure = Some((suite.name().to_string(), p.name.clone()));
        }
    }
    table.flush()?;
    if let Some(mut out) = lines {
        out.flush()?;
    }
    match first_failure {
        Some((suite, property)) => Err(CliError::Verify { suite, property }),
        None => Ok(()),
    }
}

pub fn export(cfg: &RunConfig, fp: &str) -> Out {
    let spec = &cfg.export;
    let input = spec.input.as_deref().ok_or_else(|| CliError::Config("export.input is not set".into()))?;
    if !input.exists() {
        return Err(CliError::Config(format!("input file {} does not exist", input.display())));
    }
    let mut out = sink(cfg.output.path.as_deref())?;
    match spec.kind {
        ExportKind::Residuals => {
            let text = std::fs::read_to_string(input)?;
            let report: SolveReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{} is not a solve report: {e}", input.display())))?;
            writeln!(out, "# fingerprint={fp}")?;
            writeln!(out, "iter,residual")?;
            for (k, r) in report.residual_history.iter().enumerate() {
                writeln!(out, "{k},{r:e}")?;
            }
        }
        ExportKind::Blowdown => {
            let u = load_graph(input)?;
            let bc = BlowdownConfig { probe_spacing: spec.probe_spacing, ..BlowdownConfig::default() };
            let report = blowdown_diagnostics(&u, &spec.radii, &bc)?;
            writeln!(out, "# fingerprint={fp}")?;
            write!(out, "{}", report.to_csv())?;
        }
        ExportKind::Profile => {
            let u = load_graph(input)?;
            if u.dim() != 1 {
                return Err(CliError::Config("profile export needs an n = 1 graph".into()));
            }
            writeln!(out, "# fingerprint={fp}")?;
            writeln!(out, "x,u")?;
            for (k, v) in u.samples().iter().enumerate() {
                writeln!(out, "{:e},{v:e}", u.node(k)[0])?;
            }
        }
        // the geometry CSV format has no comment syntax; the fingerprint is
        // reported on stderr only
        ExportKind::Graph => write_csv(&load_graph(input)?, &mut out)?,
    }
    out.flush()?;
    Ok(())
}
