//! `vac`: simulate reaching experiments, analyse trajectories, fit the
//! vergence-offset model, correct scenes and predict endpoint errors.
//!
//! Exit codes: 0 success, 1 invalid arguments or configuration, 2 bad input
//! data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{analyze, fit, predict, simulate, transform};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "vac",
    version,
    about = "Vergence-offset analysis and correction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic reaching experiment.
    Simulate(simulate::SimulateArgs),
    /// Segment trajectories and compute per-trial error measures.
    Analyze(analyze::AnalyzeArgs),
    /// Fit the offset and zero-offset models and compare them.
    Fit(fit::FitArgs),
    /// Remap scene depth to cancel a vergence offset.
    Transform(transform::TransformArgs),
    /// Predicted endpoint errors before and after correction.
    Predict(predict::PredictArgs),
}

fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate::run(&simulate::resolve(a)?, &a.out),
        Command::Analyze(a) => analyze::run(&analyze::resolve(a)?, &a.out),
        Command::Fit(a) => fit::run(&fit::resolve(a)?, &a.out),
        Command::Transform(a) => transform::run(&transform::resolve(a)?, &a.out),
        Command::Predict(a) => predict::run(&predict::resolve(a)?, &a.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
