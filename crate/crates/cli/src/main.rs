//! `hydra`: generate certified LASSO instances, analyze stepsizes, run the distributed solver.

mod analyze;
mod config;
mod generate;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "hydra", version, about, args_override_self = true)]
struct Cli {
    /// `key=value` file; any flag can be set there, explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a block-angular LASSO instance with a certified optimum.
    Generate(generate::GenerateArgs),
    /// Report omega, sigma, sigma' and the stepsize beta; optionally emit cost curves.
    Analyze(analyze::AnalyzeArgs),
    /// Run the solver and write an evaluation trace.
    Solve(solve::SolveArgs),
}

fn run() -> anyhow::Result<()> {
    let args = config::expand_args(std::env::args_os().collect())?;
    let cli = Cli::parse_from(args);
    match cli.command {
        Command::Generate(a) => generate::run(&a),
        Command::Analyze(a) => analyze::run(&a),
        Command::Solve(a) => solve::run(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
