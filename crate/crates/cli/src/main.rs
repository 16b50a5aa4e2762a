//! `rg`: batch front end for solving Richardson-Gaudin spectra, evaluating
//! inner products and running the verification suites.

mod args;
mod exit;
mod identities;
mod output;
mod overlap;
mod solve;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => solve::run(&cli.common, a),
        Command::Overlap(a) => overlap::run(&cli.common, a),
        Command::Verify(a) => verify::run(&cli.common, a),
        Command::Identities(a) => identities::run(&cli.common, a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
