mod bench;
mod decompose;
mod error;
mod eval;
mod format;
mod input;
mod output;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliResult;

/// Streaming seasonal-trend decomposition.
#[derive(Debug, Parser)]
#[command(name = "onlinestl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose a series read from a file or stdin.
    Decompose(decompose::DecomposeArgs),
    /// Generate a synthetic series with its true components.
    Synth(synth::SynthArgs),
    /// Measure multi-key throughput.
    Bench(bench::BenchArgs),
    /// Score a decomposition.
    Eval(eval::EvalArgs),
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Decompose(args) => decompose::run(args),
        Command::Synth(args) => synth::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Eval(args) => eval::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("onlinestl: {e}");
            e.exit_code()
        }
    }
}
