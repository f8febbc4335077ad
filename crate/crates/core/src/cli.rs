//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 when `--assert` is set and the result is
//! NOT_GO or a validation failure, 2 on input errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::algebra::{build_classical, Family};
use crate::catalog::{cross_check_isotropy, validate_entry_with, Catalog, CrossCheck, ValidationReport, BUILD_BUDGET};
use crate::error::{Error, Result};
use crate::geodesic::{go_decision, locus_y, scan_csv, scan_metrics, GridSpec, MetricSpec};
use crate::isotropy::{generic_stabilizer, IsotropyAction};
use crate::representations::RepTree;
use crate::spaces::{BlockDims, InvariantReport, ReductiveSpace, SpaceSpec};

pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "gorbit", version, about = "Geodesic orbit metrics on (G1 x G2)/ΔK")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a space and report block dimensions, Killing ratios and residuals.
    BuildSpace(SpaceArgs),
    /// Sampled geodesic-orbit decision for one metric.
    CheckGo(CheckGoArgs),
    /// Geodesic-orbit decisions over a parameter grid.
    Scan(ScanArgs),
    /// Generic stabilizer of a representation.
    Isotropy(IsotropyArgs),
    /// Validate the classification tables.
    ValidateCatalog(CatalogArgs),
}

/// Where the space comes from: a JSON specification or a catalog record.
#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    /// Space specification: inline JSON or a path to a JSON file.
    #[arg(long, conflicts_with = "case")]
    pub space: Option<String>,
    /// Catalog case id with a build recipe, e.g. `B.3`.
    #[arg(long)]
    pub case: Option<String>,
    /// Parameter of a parametric catalog case.
    #[arg(long, requires = "case")]
    pub n: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Random unit vectors tested on top of the fixed probes.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// GO threshold on the normalised residual.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Exit with status 1 on NOT_GO or failed validation.
    #[arg(long = "assert")]
    pub assert_ok: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckGoArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
    #[arg(long)]
    pub x: Option<f64>,
    /// Value on `m₂`; see also `--locus`.
    #[arg(long, conflicts_with = "locus")]
    pub y: Option<f64>,
    /// Choose `y` on the geodesic-orbit locus for the given `x`.
    #[arg(long)]
    pub locus: bool,
    #[arg(long, conflicts_with_all = ["x", "y", "locus"])]
    pub a: Option<f64>,
    #[arg(long, conflicts_with_all = ["x", "y", "locus"])]
    pub b: Option<f64>,
    #[arg(long, conflicts_with_all = ["x", "y", "locus"])]
    pub c: Option<f64>,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Grid, e.g. `x=0.25:3:0.25,y=0.25:3:0.25` or `a=..,b=..,c=..`.
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, Args)]
pub struct IsotropyArgs {
    /// Algebra, e.g. `so(5)`; used with `--rep`.
    #[arg(long, requires = "rep", conflicts_with_all = ["space", "case"])]
    pub algebra: Option<String>,
    /// Representation tree, e.g. `traceless(sym2(defining))`.
    #[arg(long, requires = "algebra")]
    pub rep: Option<String>,
    /// With `--space` or `--case`: which isotropy representation (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub factor: usize,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CatalogArgs {
    /// Directory holding `pairs.txt` and `principal_isotropy.txt` (default:
    /// the shipped tables).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Also compute principal isotropy of constructible records.
    #[arg(long)]
    pub cross_check: bool,
    /// Largest `dim g1 + dim g2` to build.
    #[arg(long, default_value_t = BUILD_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long = "assert")]
    pub assert_ok: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
pub struct SpaceSummary {
    pub label: String,
    pub dim_k: usize,
    pub dim_g1: usize,
    pub dim_g2: usize,
    pub dims: BlockDims,
    pub c1: f64,
    pub c2: f64,
    pub slope: f64,
    pub same_group: bool,
    pub residuals: InvariantReport,
}

impl SpaceSummary {
    pub fn of(space: &ReductiveSpace<f64>) -> Self {
        Self {
            label: space.label.clone(),
            dim_k: space.k.dim,
            dim_g1: space.g1.dim,
            dim_g2: space.g2.dim,
            dims: space.dims,
            c1: space.c1,
            c2: space.c2,
            slope: space.slope(),
            same_group: space.same_group,
            residuals: space.invariant_report(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CatalogRun {
    pub records: usize,
    pub counts: Vec<(char, usize)>,
    pub passed: usize,
    pub failed: Vec<String>,
    pub mismatched: Vec<String>,
    pub alarms: Vec<String>,
    pub reports: Vec<ValidationReport>,
    pub cross_checks: Vec<CrossCheck>,
}

impl CatalogRun {
    pub fn ok(&self) -> bool {
        self.failed.is_empty() && self.mismatched.is_empty() && self.alarms.is_empty()
    }
}

/// Error that is not the user's input: reported with exit status 1.
struct Failure(String);

enum Outcome {
    Ok,
    Failed(Failure),
}

pub fn load_space_spec(args: &SpaceArgs) -> Result<SpaceSpec> {
    match (&args.space, &args.case) {
        (Some(text), None) => {
            let trimmed = text.trim_start();
            if trimmed.starts_with('{') {
                SpaceSpec::from_json(text)
            } else {
                SpaceSpec::from_json(&std::fs::read_to_string(Path::new(text))?)
            }
        }
        (None, Some(case)) => Catalog::shipped().lookup(case)?.space_spec(args.n),
        _ => Err(Error::Spec("give exactly one of --space or --case".into())),
    }
}

pub fn parse_algebra(text: &str) -> Result<(Family, usize)> {
    let text = text.trim();
    let open = text.find('(').ok_or_else(|| Error::Parse(format!("algebra `{text}`, expected e.g. so(5)")))?;
    let n = text[open + 1..]
        .strip_suffix(')')
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("algebra `{text}`, expected e.g. so(5)")))?;
    Ok((text[..open].parse()?, n))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn metric_from(args: &CheckGoArgs, space: &ReductiveSpace<f64>) -> Result<MetricSpec> {
    let spec = if args.a.is_some() || args.b.is_some() || args.c.is_some() {
        MetricSpec::coupled(args.x0, args.a.unwrap_or(1.0), args.b.unwrap_or(1.0), args.c.unwrap_or(0.0))
    } else {
        let x = args.x.unwrap_or(1.0);
        let y = if args.locus {
            locus_y(space, x / args.x0)
                .map(|y| y * args.x0)
                .ok_or_else(|| Error::InvalidMetric(format!("no positive y on the locus for x = {x}")))?
        } else {
            args.y.unwrap_or(1.0)
        };
        MetricSpec::diagonal(args.x0, x, y)
    };
    spec.validate()?;
    Ok(spec)
}

fn run_command(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::BuildSpace(args) => {
            let space = load_space_spec(args)?.build::<f64>()?;
            emit(&args.output.out, &json(&SpaceSummary::of(&space)), stdout)?;
            Ok(Outcome::Ok)
        }
        Command::CheckGo(args) => {
            let space = load_space_spec(&args.space)?.build::<f64>()?;
            let spec = metric_from(args, &space)?;
            let report = go_decision(&space, &spec, args.run.samples, args.run.seed, args.run.tol)?;
            emit(&args.space.output.out, &json(&report), stdout)?;
            if args.run.assert_ok && !report.is_go() {
                return Ok(Outcome::Failed(Failure(format!(
                    "NOT_GO: max residual {:e} ≥ {:e}",
                    report.max_residual, args.run.tol
                ))));
            }
            Ok(Outcome::Ok)
        }
        Command::Scan(args) => {
            let space = load_space_spec(&args.space)?.build::<f64>()?;
            let grid: GridSpec = args.grid.parse()?;
            let rows = scan_metrics(&space, &grid, args.run.samples, args.run.seed, args.run.tol)?;
            let text = match args.format {
                Format::Csv => scan_csv(&rows),
                Format::Json => json(&rows),
            };
            emit(&args.space.output.out, &text, stdout)?;
            let not_go = rows.iter().filter(|r| r.decision != crate::geodesic::Decision::Go).count();
            writeln!(stderr, "{} points, {} GO, {} NOT_GO", rows.len(), rows.len() - not_go, not_go)?;
            if args.run.assert_ok && not_go > 0 {
                return Ok(Outcome::Failed(Failure(format!("{not_go} grid points are NOT_GO"))));
            }
            Ok(Outcome::Ok)
        }
        Command::Isotropy(args) => {
            let report = match (&args.algebra, &args.rep) {
                (Some(alg), Some(rep)) => {
                    let (family, n) = parse_algebra(alg)?;
                    let tree: RepTree = rep.parse()?;
                    let alg = Arc::new(build_classical::<f64>(family, n)?);
                    generic_stabilizer(&tree.build(&alg)?, args.trials, args.seed)?
                }
                _ => {
                    let space = load_space_spec(&args.space)?.build::<f64>()?;
                    generic_stabilizer(&IsotropyAction::of_space(&space, args.factor)?, args.trials, args.seed)?
                }
            };
            emit(&args.space.output.out, &json(&report), stdout)?;
            Ok(Outcome::Ok)
        }
        Command::ValidateCatalog(args) => {
            let owned;
            let catalog = match &args.data {
                Some(dir) => {
                    owned = Catalog::load_dir(dir)?;
                    &owned
                }
                None => Catalog::shipped(),
            };
            let run = validate_catalog(catalog, args.budget, args.cross_check, args.trials, args.seed);
            emit(&args.output.out, &json(&run), stdout)?;
            writeln!(
                stderr,
                "{} records, {} passed, {} failed, {} isotropy mismatches, {} alarms",
                run.records,
                run.passed,
                run.failed.len(),
                run.mismatched.len(),
                run.alarms.len()
            )?;
            if args.assert_ok && !run.ok() {
                return Ok(Outcome::Failed(Failure("catalog validation failed".into())));
            }
            Ok(Outcome::Ok)
        }
    }
}

/// Validation of every record, optionally with isotropy cross-checks of the
/// records that were built.
pub fn validate_catalog(catalog: &Catalog, budget: usize, cross_check: bool, trials: usize, seed: u64) -> CatalogRun {
    use rayon::prelude::*;
    let reports: Vec<ValidationReport> = catalog.entries.par_iter().map(|e| validate_entry_with(e, budget)).collect();
    let mut cross_checks = Vec::new();
    let mut mismatched = Vec::new();
    let mut alarms = Vec::new();
    for (entry, report) in catalog.entries.iter().zip(&reports) {
        // recorded tags must already satisfy the alternative
        if let Ok(params) = entry.sample_params() {
            for n in params {
                if let Ok(inst) = entry.instantiate(n) {
                    if crate::catalog::recorded_case(&inst) == crate::isotropy::PairCase::Neither {
                        alarms.push(format!("{} (recorded tags, n = {n:?})", entry.case_id));
                    }
                }
            }
        }
        if cross_check && report.build.as_ref().is_some_and(|b| b.ok) {
            match cross_check_isotropy(entry, report.build.as_ref().and_then(|b| b.n), trials, seed) {
                Ok(c) => {
                    if !(c.match1 && c.match2) {
                        mismatched.push(entry.case_id.clone());
                    }
                    if c.alarm {
                        alarms.push(entry.case_id.clone());
                    }
                    cross_checks.push(c);
                }
                Err(e) => mismatched.push(format!("{}: {e}", entry.case_id)),
            }
        }
    }
    CatalogRun {
        records: catalog.entries.len(),
        counts: catalog.counts(),
        passed: reports.iter().filter(|r| r.passed).count(),
        failed: reports.iter().filter(|r| !r.passed).map(|r| r.case_id.clone()).collect(),
        mismatched,
        alarms,
        reports,
        cross_checks,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status.
pub fn run_with<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match run_command(&cli.command, stdout, stderr) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::Failed(Failure(msg))) => {
            let _ = writeln!(stderr, "{msg}");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
