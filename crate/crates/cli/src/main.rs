use std::process::ExitCode;

use clap::Parser;
use dpd_rao_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dpd-rao: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
