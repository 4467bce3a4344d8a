mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::{BoundaryArgs, CommonArgs, ConvergeArgs, Extra, PriceArgs, RunConfig, TablesArgs, TheoremArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] heston_adi::Error),
}

/// Finite-difference pricing of American puts under the Heston model.
#[derive(Debug, Parser)]
#[command(name = "heston-adi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price one configuration and write the surface and probe prices
    Price {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        extra: PriceArgs,
    },
    /// Temporal error against a fine reference over log-spaced step sizes
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        extra: ConvergeArgs,
    },
    /// Early-exercise boundary curves at fixed variance levels
    Boundary {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        extra: BoundaryArgs,
    },
    /// Reproduce a published price table
    Tables {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        extra: TablesArgs,
    },
    /// Splitting error of BE-IT against the exact backward Euler LCP
    Theorem {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        extra: TheoremArgs,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Price { common, extra } => {
            commands::price(&RunConfig::resolve(common, Extra { price: extra, ..Extra::default() }, "mcs-it")?)
        }
        Command::Converge { common, extra } => {
            commands::converge(&RunConfig::resolve(common, Extra { converge: extra, ..Extra::default() }, "all")?)
        }
        Command::Boundary { common, extra } => {
            commands::boundary(&RunConfig::resolve(common, Extra { boundary: extra, ..Extra::default() }, "mcs-it")?)
        }
        Command::Tables { common, extra } => {
            commands::tables(&RunConfig::resolve(common, Extra { tables: extra, ..Extra::default() }, "mcs-it")?)
        }
        Command::Theorem { common, extra } => {
            commands::theorem(&RunConfig::resolve(common, Extra { theorem: extra, ..Extra::default() }, "be-it")?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Usage(_)) => {
            eprintln!("error: {e}");
            eprintln!("run `heston-adi help` for usage");
            ExitCode::from(2)
        }
        Err(e @ CliError::Compute(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
