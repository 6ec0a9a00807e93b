use std::process::ExitCode;

use clap::Parser;
use dasense::{runner, Cli};

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let result = cli.resolve().and_then(|inv| runner::execute(&inv));
    match result {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("dasense: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
