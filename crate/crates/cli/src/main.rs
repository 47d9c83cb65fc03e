//! `mcmullen`: batch analyses of the finite-depth density, written as CSV,
//! JSON and PGM files for external plotting.
//!
//! Exit status: 0 on success, 2 for a configuration error, 3 when an
//! invariant violation is detected, 1 for I/O failures. Errors are printed
//! to stderr as a single JSON object.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Options, RunConfig};
use error::CliError;
use output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "mcmullen", version, about = "Exact construction and probes of a non-realizable density")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Validate parameters and write the level values table.
    Build,
    /// Density value at `--point`.
    Eval,
    /// Exact integral over `--rect`.
    Integrate,
    /// PGM image, CSV and sidecar JSON of the density.
    Raster,
    /// Check both mass constraints on every unit.
    Verify,
    /// Contradiction witness for `--K` and the excluded-stretch table.
    Bounds,
    /// Transport distortion per depth and the length-argument replay.
    Probe,
    /// Separated net at `--scale`.
    Net,
}

fn run(command: Command, options: Options) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(options)?;
    let out = Outputs::create(&cfg.out)?;
    match command {
        Command::Build => commands::build(&cfg, &out),
        Command::Eval => commands::eval(&cfg, &out),
        Command::Integrate => commands::integrate(&cfg, &out),
        Command::Raster => commands::raster(&cfg, &out),
        Command::Verify => commands::verify(&cfg, &out),
        Command::Bounds => commands::bounds(&cfg, &out),
        Command::Probe => commands::probe(&cfg, &out),
        Command::Net => commands::net(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(e.kind().to_string());
            let usage = e.render().to_string();
            eprintln!("{}", serde_json::json!({ "error": "usage", "message": err.message, "usage": usage.trim_end() }));
            return ExitCode::from(2);
        }
    };
    match run(cli.command, cli.options) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
