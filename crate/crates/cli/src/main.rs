//! `fracmin`: curvature evaluation, perimeters, solves, verification suites
//! and CSV export, driven by a TOML config with `--dotted.key=value`
//! overrides.
//!
//! Exit codes: 0 ok, 2 configuration/parse/I-O, 3 domain, 4 divergence or
//! non-convergence, 5 verification failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fracmin::Error),

    #[error("solver stopped without converging: {0}")]
    NotConverged(String),

    #[error("verification failed in suite {suite}: {property}")]
    Verify { suite: String, property: String },
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use fracmin::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Config(_) | E::Parse(_) | E::Io(_)) => 2,
            CliError::Core(E::Divergence { .. }) | CliError::NotConverged(_) => 4,
            CliError::Core(_) => 3,
            CliError::Verify { .. } => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracmin", version, about = "Nonlocal minimal graphs and cones: evaluation, solving, verification")]
#[command(after_help = "Any config key can be overridden with --<dotted.key>=<value>, e.g. --params.s=0.3")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    /// TOML config file (see docs/config.md).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Worker threads (does not enter the fingerprint).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Graph- or set-form nonlocal mean curvature at the configured points.
    Curvature(Common),
    /// Relative s-perimeter of a voxel set.
    Perimeter(Common),
    /// Dirichlet or cone solve.
    Solve(Common),
    /// Run verification suites.
    Verify(Common),
    /// CSV for plotting: residual histories, blow-down trends, profiles.
    Export(Common),
}

/// Splits `--a.b=v` / `--a.b v` (and the top-level `--seed`) off the
/// argument list; everything else goes to clap.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>), CliError> {
    let mut rest = vec![];
    let mut overrides = vec![];
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        if !(key.contains('.') || key == "seed") {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| CliError::Config(format!("override --{key} needs a value")))?,
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}

fn run() -> Result<(), CliError> {
    let (args, overrides) = split_overrides(std::env::args().collect())?;
    let cli = Cli::parse_from(args);
    let (name, common) = match &cli.command {
        Command::Curvature(c) => ("curvature", c),
        Command::Perimeter(c) => ("perimeter", c),
        Command::Solve(c) => ("solve", c),
        Command::Verify(c) => ("verify", c),
        Command::Export(c) => ("export", c),
    };
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = config::resolve(common.config.as_deref(), &overrides)?;
    let fp = config::fingerprint(name, &cfg);
    eprintln!("fingerprint {fp}");
    match cli.command {
        Command::Curvature(_) => commands::curvature(&cfg, &fp),
        Command::Perimeter(_) => commands::perimeter(&cfg, &fp),
        Command::Solve(_) => commands::solve(&cfg, &fp),
        Command::Verify(_) => commands::verify(&cfg, &fp),
        Command::Export(_) => commands::export(&cfg, &fp),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        // downstream closed the pipe (`| head`); not an error of ours
        Err(CliError::Core(fracmin::Error::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracmin: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
