//! `nms-bench`: generate detection corpora, time suppression methods over
//! them, inspect suppression-graph structure, and compare kept sets across
//! overlap thresholds.
//!
//! Exit codes: 0 on success; 2 for bad input (unreadable or malformed
//! files, bad flag values — clap reports usage errors with the same code);
//! 3 when an exactness invariant fails during a run, which points at a bug
//! in the library rather than at the invocation.

mod commands;
mod report;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nms-bench",
    version,
    about = "Benchmark and compare non-maximum suppression methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic detection corpus as JSON Lines.
    Synth(commands::SynthArgs),
    /// Benchmark methods over a corpus and write JSON + CSV reports.
    Run(commands::RunArgs),
    /// Per-image suppression-graph statistics and the component-size histogram.
    Stats(commands::StatsArgs),
    /// Pairwise kept-set agreement across an overlap-threshold sweep.
    Compare(commands::CompareArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::cmd_synth(&args),
        Command::Run(args) => commands::cmd_run(&args),
        Command::Stats(args) => commands::cmd_stats(&args),
        Command::Compare(args) => commands::cmd_compare(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
