//! `minrule` command line: run, compare, validate and plot experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minrule::runner::{cmd_compare, cmd_plot, cmd_run, cmd_validate, ExperimentSpec, Options, RunnerError};

#[derive(Parser)]
#[command(name = "minrule", version, about = "Min-rule distributed hypothesis testing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured mode for every seed and export CSVs.
    Run(Common),
    /// Run full and both partial sharing modes on identical seeds and plot them.
    Compare(Common),
    /// Check connectivity and identifiability and print the rate bounds.
    Validate(Common),
    /// Re-render charts from CSVs in the output directory.
    Plot(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment spec (TOML); the bundled default when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory, overriding the spec.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the spec's first seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Only print errors.
    #[arg(long)]
    quiet: bool,
}

fn execute(command: Command) -> Result<(), RunnerError> {
    let (Command::Run(c) | Command::Compare(c) | Command::Validate(c) | Command::Plot(c)) = &command;
    let spec = match &c.spec {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::bundled(),
    };
    let opts = Options { out: c.out.clone(), seed: c.seed };
    let quiet = c.quiet;
    match command {
        Command::Run(_) => {
            let report = cmd_run(&spec, &opts)?;
            if !quiet {
                print!("{report}");
            }
        }
        Command::Compare(_) => {
            let report = cmd_compare(&spec, &opts)?;
            if !quiet {
                print!("{report}");
            }
        }
        Command::Plot(_) => {
            let report = cmd_plot(&spec, &opts)?;
            if !quiet {
                print!("{report}");
            }
        }
        Command::Validate(_) => {
            let report = cmd_validate(&spec, &opts)?;
            if !quiet || !report.passed() {
                print!("{report}");
            }
            if !report.passed() {
                return Err(RunnerError::Verdict);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
