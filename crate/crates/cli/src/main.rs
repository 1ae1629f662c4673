mod args;
mod commands;

use std::process::ExitCode;

use breakeven::Error;
use clap::Parser;

use args::Cli;

/// Exit status for a break-even search without a root.
const EXIT_NO_SOLUTION: u8 = 3;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NoSolution(_) => ExitCode::from(EXIT_NO_SOLUTION),
                _ => ExitCode::from(EXIT_ERROR),
            }
        }
    }
}
