#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use wfsep_core::Error;

use args::{Cli, Command};

/// Exit status for each error tag; 2 is left to usage errors.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) => 3,
        Error::OutOfDomain { .. } => 4,
        Error::Parse(_) => 5,
        Error::Io(_) => 6,
        Error::Quadrature { .. } => 7,
        Error::SingularInformation { .. } => 8,
        Error::Crystallize { .. } => 9,
        Error::DegeneratePath(_) => 10,
        Error::InvalidPath(_) => 11,
        Error::NotErgodic { .. } => 12,
        Error::NonFiniteSigma { .. } => 13,
        Error::Inconclusive(_) => 14,
    }
}

fn report(code: &str, exit: u8, message: &str) -> ExitCode {
    let msg = message.replace(['\n', '\r'], " ").replace('"', "'");
    eprintln!("error code={code} exit={exit} message=\"{}\"", msg.trim());
    ExitCode::from(exit)
}

fn run(cli: Cli) -> wfsep_core::Result<()> {
    match &cli.command {
        Command::Classify(a) => commands::classify(a),
        Command::Simulate(a) => {
            commands::init_threads(a.run.threads);
            commands::simulate(a)
        }
        Command::Estimate(a) => commands::estimate(a),
        Command::VerifyConsistency(a) => {
            commands::init_threads(a.run.threads);
            commands::verify_consistency(a)
        }
        Command::VerifyClt(a) => {
            commands::init_threads(a.run.threads);
            commands::verify_clt(a)
        }
        Command::VerifyZeroOne(a) => {
            commands::init_threads(a.run.threads);
            commands::verify_zero_one(a)
        }
        Command::VerifyProjection(a) => {
            commands::init_threads(a.run.threads);
            commands::verify_projection(a)
        }
    }
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return report(e.code(), exit_code(&e), &e.to_string()),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                };
            }
            _ => {
                let text = e.to_string();
                let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                return report("usage", 2, first);
            }
        },
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.code(), exit_code(&e), &e.to_string()),
    }
}
