//! Command-line front end: `run`, `exact`, `verify` and `plot`.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage or input error,
//! 3 runtime failure.

pub mod instance_spec;
pub mod plot;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::exact_det_gumbel_breakdown;
use crate::domain::{MechanismSpec, NoiseKind};
use crate::error::Error;
use crate::harness::{read_csv, sweep, write_csv, Axis, NamedInstance, SweepGrid};
use crate::instances::uniform_grid_means;

pub use instance_spec::parse_instance;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DPEXPERTS_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "dpexperts",
    version,
    about = "Private prediction with expert advice: simulation and checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo pseudoregret over a grid of epsilons and horizons, as CSV.
    Run(RunArgs),
    /// Exact expected regret of the Gumbel learner on a deterministic instance.
    Exact(ExactArgs),
    /// Run a verification suite and print a pass/fail table.
    Verify(VerifyArgs),
    /// Plot regret curves from a CSV produced by `run`.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Instance descriptor (repeatable), e.g. "det:0,1" or "lower-bound:K=8,delta=0.1,l=1".
    #[arg(long, required = true)]
    pub instance: Vec<String>,
    /// 1 enables Bernoulli resampling of observed losses.
    #[arg(long = "B", default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub resample: u8,
    /// laplace, exponential, gumbel or none.
    #[arg(long, default_value = "gumbel")]
    pub noise: String,
    /// Privacy parameters (comma separated).
    #[arg(long = "eps", value_delimiter = ',', default_value = "1")]
    pub epsilon: Vec<f64>,
    /// Horizons (comma separated).
    #[arg(long = "T", value_delimiter = ',', default_value = "1023")]
    pub horizons: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Deterministic means (comma separated).
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "k",
        required_unless_present = "k"
    )]
    pub means: Option<Vec<f64>>,
    /// Number of actions on the uniform grid j/(K-1).
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "eps", default_value_t = 1.0)]
    pub epsilon: f64,
    /// Number of epochs; the horizon is 2^R - 1.
    #[arg(long = "R", default_value_t = 40)]
    pub rounds: u32,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite name, or "all".
    #[arg(default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// Horizontal axis: T, epsilon or K.
    #[arg(long, default_value = "T", value_parser = ["T", "epsilon", "K"])]
    pub x: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
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

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Validated form of the `run` arguments.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub grid: SweepGrid,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, Error> {
        let instances = args
            .instance
            .iter()
            .map(|text| parse_instance(text).map(|inst| NamedInstance::new(text.clone(), inst)))
            .collect::<Result<Vec<_>, _>>()?;
        let noise: NoiseKind = args.noise.parse()?;
        let resample = args.resample == 1;
        if args.trials < 1 {
            return Err(Error::InvalidArgument("--trials must be at least 1".into()));
        }
        if args.horizons.is_empty() || args.epsilon.is_empty() {
            return Err(Error::InvalidArgument(
                "--T and --eps need at least one value".into(),
            ));
        }
        if let Some(&t) = args.horizons.iter().find(|&&t| t < 1) {
            return Err(Error::InvalidHorizon(t));
        }
        let specs = match noise {
            NoiseKind::NoNoise => vec![MechanismSpec::non_private(resample)],
            kind => args
                .epsilon
                .iter()
                .map(|&e| MechanismSpec::new(resample, kind, e))
                .collect::<Result<_, _>>()?,
        };
        Ok(ExperimentConfig {
            grid: SweepGrid {
                instances,
                specs,
                horizons: args.horizons.clone(),
            },
            trials: args.trials,
            seed: args.seed,
            out: args.out.clone(),
        })
    }
}

pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = ExperimentConfig::from_args(args).map_err(usage)?;
    let cells = sweep(&config.grid, config.trials, config.seed).map_err(runtime)?;
    let mut buffer = Vec::new();
    write_csv(&cells, &mut buffer).map_err(runtime)?;
    match &config.out {
        Some(path) => {
            std::fs::write(path, buffer).map_err(|e| runtime(format!("{}: {e}", path.display())))
        }
        None => stdout.write_all(&buffer).map_err(runtime),
    }
}

pub fn cmd_exact(args: &ExactArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let means = match (&args.means, args.k) {
        (Some(m), _) => m.clone(),
        (None, Some(k)) if k >= 1 => uniform_grid_means(k),
        _ => return Err(usage("--K must be at least 1")),
    };
    if means.is_empty() {
        return Err(usage("--means needs at least one value"));
    }
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        return Err(usage(Error::InvalidEpsilon(args.epsilon)));
    }
    if !(1..=62).contains(&args.rounds) {
        return Err(usage("--R must lie in 1..=62"));
    }
    let breakdown = exact_det_gumbel_breakdown(&means, args.epsilon, args.rounds);
    let mut text = format!(
        "# K={} epsilon={} R={} T={}\n{:>3} {:>20} {:>24} {:>24} {:>24}\n",
        means.len(),
        args.epsilon,
        args.rounds,
        (1u64 << args.rounds) - 1,
        "r",
        "length",
        "expected_gap",
        "epoch_regret",
        "cumulative"
    );
    let mut cumulative = 0.0;
    for e in &breakdown.epochs {
        cumulative += e.regret;
        text.push_str(&format!(
            "{:>3} {:>20} {:>24.6e} {:>24.6e} {:>24.12}\n",
            e.r, e.length, e.expected_gap, e.regret, cumulative
        ));
    }
    text.push_str(&format!(
        "tail {:e}\nregret {}\n",
        breakdown.tail(),
        breakdown.total
    ));
    stdout.write_all(text.as_bytes()).map_err(runtime)
}

/// Returns whether every check of the suite passed.
pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let suites = verify::select(&args.suite).map_err(usage)?;
    let mut all_passed = true;
    writeln!(
        stdout,
        "{:<14} {:<44} {:<6} detail",
        "suite", "check", "result"
    )
    .map_err(runtime)?;
    for suite in suites {
        for check in verify::run_suite(suite, args.seed).map_err(runtime)? {
            all_passed &= check.passed;
            writeln!(
                stdout,
                "{:<14} {:<44} {:<6} {}",
                suite.name(),
                check.name,
                if check.passed { "PASS" } else { "FAIL" },
                check.detail
            )
            .map_err(runtime)?;
            stdout.flush().map_err(runtime)?;
        }
    }
    Ok(all_passed)
}

pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let file = std::fs::File::open(&args.csv)
        .map_err(|e| usage(format!("{}: {e}", args.csv.display())))?;
    let rows = read_csv(file).map_err(usage)?;
    if rows.is_empty() {
        return Err(usage(format!("{}: no data rows", args.csv.display())));
    }
    let axis: Axis = args.x.parse().map_err(usage)?;
    let svg = plot::render_svg(&rows, axis).map_err(usage)?;
    std::fs::write(&args.out, svg).map_err(|e| runtime(format!("{}: {e}", args.out.display())))
}

/// Caps the global worker pool at `DPEXPERTS_THREADS` when it is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| {
            usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(runtime)
}

/// Parses `args` and runs the chosen subcommand, returning the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, stdout).map(|_| EXIT_OK),
        Command::Exact(a) => cmd_exact(a, stdout).map(|_| EXIT_OK),
        Command::Verify(a) => {
            cmd_verify(a, stdout).map(|ok| if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Plot(a) => cmd_plot(a).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
