use std::io::Write;
use std::process::ExitCode;

use brp_cli::{run, Cli, CliError};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli).and_then(|outcome| {
        match &cli.out {
            Some(path) => std::fs::write(path, &outcome.json)?,
            None => std::io::stdout().write_all(outcome.json.as_bytes())?,
        }
        Ok(outcome)
    }) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            CliError::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
