//! `skinspace` command-line tool.

mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::merge;
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Optimize(a) => commands::optimize(merge(&a, a.config.as_deref())?),
        Command::Train(a) => commands::train(merge(&a, a.config.as_deref())?),
        Command::Detect(a) => commands::detect_cmd(merge(&a, a.config.as_deref())?),
        Command::Evaluate(a) => commands::evaluate(merge(&a, a.config.as_deref())?),
        Command::RocPlot(a) => commands::roc_plot(merge(&a, a.config.as_deref())?),
    }
}

fn report(e: &CliError) -> ExitCode {
    let line = e.to_string().replace('\n', " ");
    eprintln!("{}", line.trim_end());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let msg = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return report(&CliError::usage(msg));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
