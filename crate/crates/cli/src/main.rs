//! `sinesch`: rate tables, phase-path simulation, Monte Carlo experiments,
//! variational solves and invariant checks.

mod commands;
mod config;
mod manifest;
mod verify;

use std::env;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::Local;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sinesch_core::Error as CoreError;

use crate::manifest::RunManifest;

/// Bad flags or config: exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// What a command reports when it finished without an error.
pub enum Status {
    Pass,
    /// Names of the failed checks.
    Failed(Vec<String>),
}

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_INSUFFICIENT: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

/// Default directory for outputs when `--out` is not given.
pub const OUT_DIR_VAR: &str = "SINESCH_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "sinesch", version, about = "Counting statistics of the Sine_β and Sch_τ processes")]
struct Cli {
    /// Cap on worker threads for Monte Carlo work.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the rate function and its derivative on a density grid.
    RateTable(RateTableArgs),
    /// Tabulate γ(ν) and the residual of its ODE.
    GammaTable(GammaTableArgs),
    /// Dump one phase path as CSV.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo experiment and write a JSON report.
    Experiment(ExperimentArgs),
    /// Solve the variational problem and compare with the closed form.
    Variational(VariationalArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Sine,
    Sch,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateTableArgs {
    #[arg(long, value_enum)]
    pub process: Option<ProcessKind>,
    /// Sine inverse temperature [default: 2].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sch parameter [default: 1].
    #[arg(long)]
    pub tau: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub rho_min: Option<f64>,
    /// [default: 1/π]
    #[arg(long)]
    pub rho_max: Option<f64>,
    /// Grid points, endpoints included [default: 41].
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaTableArgs {
    /// [default: -10]
    #[arg(long, allow_negative_numbers = true)]
    pub nu_min: Option<f64>,
    /// [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub nu_max: Option<f64>,
    /// [default: 111]
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub process: Option<ProcessKind>,
    /// [default: 50]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sch horizon when `--t` is absent [default: 1].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Path horizon; Sine defaults to the truncation horizon T(ε).
    #[arg(long)]
    pub t: Option<f64>,
    /// Step; defaults to the step policy for the peak drift.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tail probability defining the Sine horizon [default: 1e-3].
    #[arg(long)]
    pub eps_tail: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ExperimentName {
    #[default]
    Density,
    Clt,
    Gap,
    LdpCurve,
    ExpMoment,
    Hitting,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    #[serde(skip)]
    pub name: ExperimentName,
    #[arg(long, value_enum)]
    pub process: Option<ProcessKind>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// One value, or a comma-separated list for density/clt.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda: Option<Vec<f64>>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Count bins for ldp-curve.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub eps_tail: Option<f64>,
    /// Parameter of exp-moment.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Window parameters for hitting.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub window_a: Option<Vec<f64>>,
    /// Window half-width for hitting; default |t_a − 2π|/2.
    #[arg(long)]
    pub window_eps: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationalArgs {
    #[arg(long, value_enum)]
    pub process: Option<ProcessKind>,
    /// [default: 0.3]
    #[arg(long)]
    pub rho: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sch horizon T [default: 1].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Sine grid cells [default: 2000].
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// JSON report; the profile goes to the same path with a `.csv` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[default]
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    CorruptK,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub level: Option<Level>,
    /// Negative control: run the suite against a deliberately broken routine.
    #[arg(long, value_enum, hide = true)]
    pub fault: Option<Fault>,
}

pub fn out_dir() -> PathBuf {
    env::var_os(OUT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

/// `out`, or `name` inside the default output directory.
pub fn resolve_out(out: &Option<PathBuf>, name: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| out_dir().join(name))
}

fn manifest_path(cmd: &Command) -> PathBuf {
    let main = match cmd {
        Command::RateTable(a) => resolve_out(&a.out, "rate_table.csv"),
        Command::GammaTable(a) => resolve_out(&a.out, "gamma_table.csv"),
        Command::Simulate(a) => resolve_out(&a.out, "path.csv"),
        Command::Experiment(a) => resolve_out(&a.out, "experiment.json"),
        Command::Variational(a) => resolve_out(&a.out, "variational.json"),
        Command::Verify(_) => out_dir().join("verify.json"),
    };
    manifest::path_for(&main)
}

fn dispatch(cmd: Command, file: Option<&serde_json::Map<String, serde_json::Value>>, m: &mut RunManifest) -> anyhow::Result<Status> {
    macro_rules! run {
        ($args:expr, $f:path) => {{
            let a = config::layer($args, file)?;
            commands::echo(m, &a)?;
            $f(&a, m)
        }};
    }
    match cmd {
        Command::RateTable(a) => run!(a, commands::rate_table),
        Command::GammaTable(a) => run!(a, commands::gamma_table),
        Command::Simulate(a) => run!(a, commands::simulate),
        Command::Experiment(a) => {
            let name = a.name;
            let mut a = config::layer(a, file)?;
            a.name = name;
            commands::echo(m, &a)?;
            commands::experiment(&a, m)
        }
        Command::Variational(a) => run!(a, commands::variational),
        Command::Verify(a) => run!(a, verify::run),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match e.downcast_ref::<CoreError>() {
        Some(CoreError::Domain(_)) => EXIT_USAGE,
        Some(CoreError::InsufficientRareEvents { .. } | CoreError::InsufficientData(_)) => EXIT_INSUFFICIENT,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let mut m = RunManifest::new(&argv, Local::now());
    let manifest_at = cli.manifest.clone().unwrap_or_else(|| manifest_path(&cli.command));

    let result = (|| {
        if let Some(n) = cli.threads {
            if n == 0 {
                return usage("--threads must be positive");
            }
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        let file = cli.config.as_deref().map(config::load).transpose()?;
        dispatch(cli.command, file.as_ref(), &mut m)
    })();

    let code = match result {
        Ok(Status::Pass) => 0,
        Ok(Status::Failed(names)) => {
            for n in &names {
                eprintln!("check failed: {n}");
            }
            m.set("failed_checks", &names);
            EXIT_CHECK
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            m.error = Some(format!("{e:#}"));
            exit_code(&e)
        }
    };
    m.exit_code = code;
    if let Err(e) = write_manifest(m, &manifest_at) {
        eprintln!("error: writing manifest {}: {e}", manifest_at.display());
        return ExitCode::from(if code == 0 { EXIT_RUNTIME } else { code });
    }
    ExitCode::from(code)
}

fn write_manifest(m: RunManifest, path: &Path) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    m.write(path)
}
