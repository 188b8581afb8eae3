use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use hyperadapt_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            if !output.is_empty() {
                // A closed pipe (e.g. `| head`) is not a failure.
                let _ = writeln!(std::io::stdout().lock(), "{output}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.code, e.message);
            ExitCode::from(e.exit_code())
        }
    }
}
