//! `gdtm`: trace machines by gradient descent, train the extended network,
//! run the verification suite.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 when a run
//! disagrees with the simulator or fails to halt.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Options;

#[derive(Debug, Parser)]
#[command(name = "gdtm", version, about = "Turing machines traced by gradient descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace a machine with the internal or external loss.
    Trace(Options),
    /// Train the extended network on a dataset.
    Train(Options),
    /// Run the verification suite.
    Verify(Options),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Mismatch(String),
    /// Output already produced, followed by the failure.
    #[error("{1}")]
    Reported(String, String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Mismatch(_) | CliError::Reported(..) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (opts, run): (Options, fn(&Options) -> Result<String, CliError>) = match cli.command {
        Command::Trace(o) => (o, commands::trace),
        Command::Train(o) => (o, commands::train_cmd),
        Command::Verify(o) => (o, commands::verify_cmd),
    };
    let result = opts.resolve().and_then(|o| run(&o));
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::Reported(out, _) = &e {
                print!("{out}");
            }
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
