mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::{EXIT_OK, EXIT_USAGE};

const THREADS_VAR: &str = "ETOC_NUM_THREADS";

fn init_threads() -> Result<(), String> {
    let n = match std::env::var(THREADS_VAR) {
        Ok(v) => {
            v.trim().parse::<usize>().map_err(|_| format!("{THREADS_VAR} must be a non-negative integer, got '{v}'"))?
        }
        Err(std::env::VarError::NotPresent) => 0,
        Err(e) => return Err(format!("{THREADS_VAR}: {e}")),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let result = match &cli.command {
        Command::Plan(a) => commands::plan(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Bench(a) => commands::bench(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            commands::exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run() as u8)
}
