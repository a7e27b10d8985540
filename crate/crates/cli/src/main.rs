//! `subsim`: configuration-driven runner for the leakage-protection
//! simulation engines.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures (partial outputs are removed).

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{InitialState, ScalarOrList, ScenarioConfig, SimMethod, TrajectoryConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration: {msg}"),
            CliError::Numeric(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "subsim",
    about = "Leakage protection of controlled subspaces in small open quantum systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate P0(t) and level populations, one CSV per sweep point.
    Simulate(RunArgs),
    /// Print and export the closed rate system d<sigma>/dt = M <sigma> + b.
    Derive(RunArgs),
    /// Solve for the dissipative steady state across the sweep.
    Steady(RunArgs),
    /// Dark states of the fast dynamics, protection verdict and H_eff.
    Analyze(RunArgs),
    /// Quantum-jump trajectories: jump records and dark-period statistics.
    Traject(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path prefix.
    #[arg(long)]
    out: Option<String>,
    /// Model name: two_level, three_level_chain or four_level_chain.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    xi: Option<f64>,
    /// Coupling in the outside space; comma-separated values sweep.
    #[arg(long, value_delimiter = ',')]
    omega: Option<Vec<f64>>,
    /// Spontaneous decay rate; comma-separated values sweep.
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    npoints: Option<usize>,
    /// Initial state: ket<level> or mixed.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// simulate only: master (default) or rate.
    #[arg(long)]
    method: Option<String>,
    /// traject only: master seed of the trajectory streams.
    #[arg(long)]
    seed: Option<u64>,
    /// traject only: number of trajectories.
    #[arg(long)]
    ntraj: Option<usize>,
    /// traject only: minimum emission-free gap counted as a dark period.
    #[arg(long)]
    dark_threshold: Option<f64>,
}

fn list_or_scalar(values: &[f64]) -> ScalarOrList {
    if values.len() == 1 {
        ScalarOrList::Scalar(values[0])
    } else {
        ScalarOrList::List(values.to_vec())
    }
}

fn effective_config(args: &RunArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (&args.config, &args.model) {
        (Some(path), _) => ScenarioConfig::from_file(path)?,
        (None, Some(model)) => ScenarioConfig::minimal(model),
        (None, None) => {
            return Err(CliError::Config(
                "provide --config <path> or at least --model <name>".into(),
            ))
        }
    };
    if let Some(model) = &args.model {
        cfg.model = model.clone();
    }
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if let Some(xi) = args.xi {
        cfg.xi = xi;
    }
    if let Some(omega) = &args.omega {
        cfg.omega = list_or_scalar(omega);
    }
    if let Some(gamma) = &args.gamma {
        cfg.gamma = list_or_scalar(gamma);
    }
    if let Some(tmax) = args.tmax {
        cfg.t_max = Some(tmax);
    }
    if let Some(n) = args.npoints {
        cfg.n_points = n;
    }
    if let Some(initial) = &args.initial {
        cfg.initial = initial.parse::<InitialState>().map_err(CliError::Config)?;
    }
    if let Some(rtol) = args.rtol {
        cfg.solver.rtol = rtol;
    }
    if let Some(atol) = args.atol {
        cfg.solver.atol = atol;
    }
    if let Some(method) = &args.method {
        cfg.method = match method.as_str() {
            "master" => SimMethod::Master,
            "rate" => SimMethod::Rate,
            other => {
                return Err(CliError::Config(format!(
                    "unknown method `{other}` (expected master or rate)"
                )))
            }
        };
    }
    if args.ntraj.is_some() || args.seed.is_some() || args.dark_threshold.is_some() {
        let existing = cfg.trajectories;
        cfg.trajectories = Some(TrajectoryConfig {
            n_traj: args.ntraj.or(existing.map(|t| t.n_traj)).unwrap_or(1000),
            seed: args.seed.or(existing.map(|t| t.seed)).unwrap_or(0),
            dark_threshold: args
                .dark_threshold
                .or(existing.and_then(|t| t.dark_threshold)),
        });
    }
    Ok(cfg)
}

type Runner = fn(&config::ResolvedConfig) -> Result<String, CliError>;

fn run(cli: Cli) -> Result<String, CliError> {
    let (args, runner): (&RunArgs, Runner) = match &cli.command {
        Command::Simulate(a) => (a, commands::run_simulate),
        Command::Derive(a) => (a, commands::run_derive),
        Command::Steady(a) => (a, commands::run_steady),
        Command::Analyze(a) => (a, commands::run_analyze),
        Command::Traject(a) => (a, commands::run_traject),
    };
    let resolved = effective_config(args)?.resolve()?;
    runner(&resolved)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
