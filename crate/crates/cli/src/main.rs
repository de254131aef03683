use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use influx_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let bytes = match run(&cli) {
        Ok(bytes) => bytes,
        Err(e) => {
            eprintln!("influx: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("influx: {e}");
            ExitCode::from(1)
        }
    }
}
