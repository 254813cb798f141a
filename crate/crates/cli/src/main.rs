use std::io::Write;

use clap::Parser;
use mg_cli::{Cli, CliError};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            let err = CliError::Usage(first.to_string());
            eprintln!("{}", err.to_line());
            std::process::exit(err.exit_code());
        }
    };
    match mg_cli::commands::execute(cli) {
        // A closed pipe on stdout (e.g. `| head`) is not worth a panic.
        Ok(summary) => {
            let _ = writeln!(std::io::stdout(), "{summary}");
        }
        Err(err) => {
            eprintln!("{}", err.to_line());
            std::process::exit(err.exit_code());
        }
    }
}
