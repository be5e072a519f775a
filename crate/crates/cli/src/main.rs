//! `optexec` — command-line front end for the periodic optimal-execution
//! model: closed-form constants and values, Monte Carlo simulation,
//! barrier sweeps, an independent grid solver, and a verification battery.
//!
//! Exit codes: 0 = success / all checks passed, 1 = a verification check
//! failed or the run could not complete, 2 = usage or configuration error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "optexec",
    version,
    about = "Optimal execution under a Poisson trading clock with multiplicative impact"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Parameter file (flat JSON object; unknown keys are rejected).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Root RNG seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo paths per estimate (overrides the config file).
    #[arg(long, global = true, value_name = "N")]
    paths: Option<usize>,

    /// Output directory for CSV reports (overrides the config file).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Initial price (overrides the config file).
    #[arg(long, global = true)]
    x: Option<f64>,

    /// Initial inventory (overrides the config file).
    #[arg(long, global = true)]
    y: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived constants with internal consistency checks.
    Constants,
    /// Evaluate the closed-form value and derivatives at one state.
    Value,
    /// Write the value surface on a log-spaced grid as CSV.
    Grid,
    /// Monte Carlo estimate of the barrier policy, with decision traces.
    Simulate,
    /// Estimate payoffs across barrier levels on common random numbers.
    Sweep,
    /// Solve the control problem on a grid and compare to the closed form.
    Pde,
    /// Run the full self-check battery; exit 0 only if everything passes.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };

    let overrides = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        out: cli.out.clone(),
        x: cli.x,
        y: cli.y,
    };
    let config = match RunConfig::resolve(cli.config.as_deref(), &overrides) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };

    let result = match cli.command {
        Command::Constants => commands::cmd_constants(&config),
        Command::Value => commands::cmd_value(&config),
        Command::Grid => commands::cmd_grid(&config),
        Command::Simulate => commands::cmd_simulate(&config),
        Command::Sweep => commands::cmd_sweep(&config),
        Command::Pde => commands::cmd_pde(&config),
        Command::Verify => commands::cmd_verify(&config),
    };

    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
