//! The `clusterdist` command line.
//!
//! ```text
//! clusterdist scenario --which 1 --reps 100 --n 500 --seed 7 --out results/
//! clusterdist fit --data data.csv --kmin 1 --kmax 5 --seed 7 --out fit/
//! clusterdist dist --model fit/model.json --data data.csv --labels fit/assignments.csv --out dist/
//! clusterdist grid --model fit/model.json --dims 1,2 --range auto --res 200 --out grid.csv
//! ```
//!
//! Exit codes: 0 on success, 2 for bad arguments or unreadable input, 1 when
//! a computation fails.

mod dist;
mod fit;
mod grid;
pub mod model_file;
mod scenario;
pub mod table;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "clusterdist", version, about = "Distances between cluster distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one of the simulation designs and write true and empirical curves.
    Scenario(ScenarioArgs),
    /// Fit Gaussian mixtures over a range of K and keep the BIC choice.
    Fit(FitArgs),
    /// Pairwise distances between the components of a model.
    Dist(DistArgs),
    /// Bivariate density values on a regular grid, one block per component.
    Grid(GridArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// 1 = mean shift, 2 = scale shift, 3 = skewness rotation.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    which: u8,
    /// Simulated data sets per grid point.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Observations per cluster.
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Monte Carlo draws per replicate for HD, JSD_e and JSD.
    #[arg(long = "mc-n", default_value_t = 10_000)]
    mc_n: usize,
    #[arg(long = "mc-reps", default_value_t = 5)]
    mc_reps: usize,
    /// Sample size per model for the Wasserstein estimate.
    #[arg(long = "wd-n", default_value_t = 1000)]
    wd_n: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "si-prop", default_value_t = crate::indices::DEFAULT_SI_PROPORTION)]
    si_prop: f64,
    /// EM restarts per fit.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV with a header row and numeric columns.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    kmin: usize,
    #[arg(long, default_value_t = 5)]
    kmax: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
}

#[derive(Debug, Args)]
struct DistArgs {
    #[arg(long)]
    model: PathBuf,
    /// Data for AB and SI; needs --labels.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Cluster labels (1..K), either a single column or a `label` column.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long = "mc-n", default_value_t = 1000)]
    mc_n: usize,
    #[arg(long = "mc-reps", default_value_t = 5)]
    mc_reps: usize,
    #[arg(long = "wd-n", default_value_t = 1000)]
    wd_n: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "si-prop", default_value_t = crate::indices::DEFAULT_SI_PROPORTION)]
    si_prop: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    model: PathBuf,
    /// Two distinct 1-based coordinates, e.g. `1,2`.
    #[arg(long, default_value = "1,2")]
    dims: String,
    /// `auto` (component means ± 4 sd) or `x0,x1,y0,y1`.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    range: String,
    /// Cells per axis.
    #[arg(long, default_value_t = 200)]
    res: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files (exit 2).
    Usage(String),
    /// A computation failed (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub(crate) type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Messages go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Scenario(a) => scenario::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Dist(a) => dist::run(a),
        Command::Grid(a) => grid::run(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("clusterdist: {e}");
            e.exit_code()
        }
    }
}

/// Shortest text that parses back to the same `f64`; `NA` for NaN.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        format!("{x:?}")
    }
}

pub(crate) fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), format_float)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    let mut file = fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Writes rows of already formatted cells as CSV.
fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    write_file(path, &bytes)
}
