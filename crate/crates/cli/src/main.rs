use std::panic;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use georep::cli::{run, Cli};
use georep::error::{EXIT_INPUT, EXIT_INTERNAL};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT as u8),
            };
        }
    };
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("InternalError: unexpected failure");
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}
