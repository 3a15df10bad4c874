mod args;
mod commands;
mod inputs;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Exit status for command-line usage errors.
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => commands::classify(a),
        Command::Stats(a) => commands::stats(a),
        Command::Map(a) => commands::map(a),
        Command::ValidateRules(a) => commands::validate_rules(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(commands::Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(commands::EXIT_FATAL)
        }
    }
}
