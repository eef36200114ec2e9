//! `emdae` command-line front end.
//!
//! Exit codes: 0 success, 2 parse or I/O error, 3 model-structure error,
//! 4 numerical failure.

mod commands;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = commands::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
