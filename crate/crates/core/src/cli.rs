//! `sampling-lab` command line.
//!
//! Exit status: 0 when every check passes or is advisory, 1 on a hard
//! failure, 2 on configuration or solver errors. stdout carries only the
//! summary table; diagnostics go to stderr as `error[kind]: message`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::experiments::{
    fit_exponent, render_svg, validate_geometry, verify_projector, verify_residual_form,
    verify_thm1, verify_weyl, ExperimentConfig, Report, Verdict,
};
use crate::io::{write_atomic, write_field, write_json, write_mask};
use crate::spectral::{eigenpairs_with, SolverMethod};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "sampling-lab",
    version,
    about = "Sampling inequalities for Schrödinger operators on desk-scale grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate configured sequences, export masks, run the random geometry sweep
    ValidateGeometry(RunArgs),
    /// Mask lower bound for eigenfunctions
    VerifyThm1(RunArgs),
    /// Fit the exponent constant over a delta sweep
    FitExponent(RunArgs),
    /// Compressed mask on spectral subspaces
    VerifyProjector(RunArgs),
    /// Mask plus residual form on a test family
    VerifyResidual(RunArgs),
    /// Half bound along Weyl iterates
    VerifyWeyl(RunArgs),
    /// Export the lowest eigenpairs
    Eigen(RunArgs),
    /// Print build information and defaults
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Override a config key, e.g. `--set sampling.deltas=[0.1,0.2]`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub format: Format,
    /// Also write plot.svg
    #[arg(long)]
    pub plot: bool,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        ExperimentConfig::load(&self.config)?.with_overrides(&overrides)
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            2
        }
    }
}

fn report_error(e: &Error) {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error[{}]: {msg}", e.kind());
}

fn execute(cmd: &Command) -> Result<i32> {
    let args = match cmd {
        Command::Info => {
            print_info();
            return Ok(0);
        }
        Command::ValidateGeometry(a)
        | Command::VerifyThm1(a)
        | Command::FitExponent(a)
        | Command::VerifyProjector(a)
        | Command::VerifyResidual(a)
        | Command::VerifyWeyl(a)
        | Command::Eigen(a) => a,
    };
    let cfg = args.load()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    pool.install(|| match cmd {
        Command::ValidateGeometry(_) => {
            let (report, art) = validate_geometry(&cfg)?;
            for (i, (seq, mask)) in art.sequences.iter().zip(&art.masks).enumerate() {
                write_json(&args.out.join(format!("sequence_{i:02}.json")), seq)?;
                write_mask(&args.out.join(format!("mask_{i:02}.pgm")), mask)?;
            }
            emit(&report, args)
        }
        Command::VerifyThm1(_) => emit(&verify_thm1(&cfg)?, args),
        Command::FitExponent(_) => emit(&fit_exponent(&cfg)?.report, args),
        Command::VerifyProjector(_) => emit(&verify_projector(&cfg)?, args),
        Command::VerifyResidual(_) => emit(&verify_residual_form(&cfg)?, args),
        Command::VerifyWeyl(_) => emit(&verify_weyl(&cfg)?, args),
        Command::Eigen(_) => export_eigen(&cfg, &args.out),
        Command::Info => unreachable!(),
    })
}

fn emit(report: &Report, args: &RunArgs) -> Result<i32> {
    if matches!(args.format, Format::Json | Format::Both) {
        report.write_json(&args.out.join("report.json"))?;
    }
    if matches!(args.format, Format::Csv | Format::Both) {
        report.write_csv(&args.out.join("report.csv"))?;
    }
    if args.plot {
        if let Some(svg) = render_svg(report) {
            write_atomic(&args.out.join("plot.svg"), svg.as_bytes())?;
        }
    }
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(report.summary_table().as_bytes());
    let _ = out.flush();

    if let Some(r) = report.records.iter().find(|r| r.verdict == Verdict::Error) {
        eprintln!("error[solver]: {} {}", r.case, r.note.replace('\n', " "));
        return Ok(2);
    }
    Ok(if report.has_hard_failure() { 1 } else { 0 })
}

#[derive(Serialize)]
struct EigenManifest {
    dimension: usize,
    length: f64,
    points: usize,
    potential: String,
    method: SolverMethod,
    tol: f64,
    energies: Vec<f64>,
    residuals: Vec<f64>,
    modes: Vec<String>,
}

fn export_eigen(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let h = cfg.hamiltonian()?;
    let sol = eigenpairs_with(&h, cfg.eigen.count, cfg.eigen.tol, &cfg.solver_options())?;
    let mut names = Vec::new();
    for (i, mode) in sol.modes.iter().enumerate() {
        let name = format!("mode_{i:03}.bin");
        write_field(&out.join(&name), mode, "eigenfunction")?;
        names.push(name);
    }
    let manifest = EigenManifest {
        dimension: cfg.dimension,
        length: cfg.grid.length,
        points: cfg.grid.points,
        potential: cfg.potential.name().into(),
        method: sol.method,
        tol: sol.tol,
        energies: sol.energies.clone(),
        residuals: sol.residuals.clone(),
        modes: names,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "{:>5}  {:>22}  {:>10}",
        "mode", "energy", "residual"
    );
    for (i, (e, r)) in sol.energies.iter().zip(&sol.residuals).enumerate() {
        let _ = writeln!(stdout, "{i:>5}  {e:>22.15e}  {r:>10.2e}");
    }
    Ok(0)
}

fn print_info() {
    let defaults = ExperimentConfig::from_value(serde_json::json!({
        "dimension": 1,
        "grid": {"length": 1.0, "points": 1},
        "sampling": {"M": 1.0, "deltas": [0.5]}
    }))
    .expect("built-in defaults parse");
    println!("sampling-lab {}", env!("CARGO_PKG_VERSION"));
    println!("verbs: validate-geometry verify-thm1 fit-exponent verify-projector verify-residual verify-weyl eigen info");
    println!("potentials: constant step well periodic-cosine random-alloy");
    println!("default K: 1 (illustrative; use k = \"fit\" for a fitted value)");
    println!("dense solver up to N = {}", defaults.eigen.dense_threshold);
    println!(
        "boundary-mass advisory at {:e}",
        defaults.tolerances.boundary_mass
    );
}
