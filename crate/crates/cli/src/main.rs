//! `divctl`: solve, simulate, verify and sweep barrier dividend problems from a
//! flat configuration file.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration
//! error, 3 solver or simulation failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use divctl_core::config::{self, ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "divctl", version, about = "Optimal dividend and capital-injection barriers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Prefix of written artifacts; results go to standard output when absent.
    #[arg(long, global = true, value_name = "PREFIX")]
    out: Option<String>,
    /// Problem to solve: dividends, injections or combined.
    #[arg(long, global = true, value_name = "NAME")]
    problem: Option<String>,
    /// Evaluation grid as MIN:MAX:N.
    #[arg(long, global = true, value_name = "MIN:MAX:N")]
    grid: Option<String>,
    /// Print the fully resolved configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the optimal barrier and tabulate the value function.
    Solve,
    /// Estimate the value of a barrier strategy by Monte Carlo.
    Simulate,
    /// Run the residual and identity checks of the configured problem.
    Verify {
        /// Shift the barrier before checking (a nonzero shift should fail).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        barrier_offset: f64,
    },
    /// Re-solve over a grid of one parameter.
    Sweep {
        /// alpha, beta, delta, lambda, p, sigma_p or r.
        #[arg(long)]
        param: Option<String>,
        /// Comma list or MIN:MAX:N.
        #[arg(long)]
        values: Option<String>,
    },
}

/// Failure of a command, mapped onto the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Verification(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load(common: &Common, command: &Command) -> Result<RunConfig, Failure> {
    let Some(path) = &common.config else {
        return Err(Failure::Config("`--config` is required".into()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut overrides: Vec<(&str, String)> = Vec::new();
    if let Some(problem) = &common.problem {
        overrides.push(("problem", problem.clone()));
    }
    if let Some(grid) = &common.grid {
        let g = config::parse_grid(grid).map_err(|e| Failure::Config(format!("`output.grid` (--grid): {e}")))?;
        overrides.push(("output.grid.min", g.min.to_string()));
        overrides.push(("output.grid.max", g.max.to_string()));
        overrides.push(("output.grid.points", g.points.to_string()));
    }
    if let Some(out) = &common.out {
        overrides.push(("output.prefix", out.clone()));
    }
    if let Command::Sweep { param, values } = command {
        if let Some(p) = param {
            overrides.push(("sweep.param", p.clone()));
        }
        if let Some(v) = values {
            overrides.push(("sweep.values", v.clone()));
        }
    }
    Ok(RunConfig::load(&text, std::env::vars(), &overrides)?)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config = load(&cli.common, &cli.command)?;
    if cli.common.dump_config {
        print!("{}", config.dump());
        return Ok(());
    }
    match &cli.command {
        Command::Solve => commands::solve(&config),
        Command::Simulate => commands::simulate(&config),
        Command::Verify { barrier_offset } => commands::verify(&config, *barrier_offset),
        Command::Sweep { .. } => commands::sweep(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Verification(m) => eprintln!("verification failed: {m}"),
                Failure::Solver(m) => eprintln!("solver failure: {m}"),
            }
            ExitCode::from(failure.code())
        }
    }
}
