use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use carnot_hardy::cli::{execute, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let result = execute(cli)?;
    match &cli.out {
        Some(path) => fs::write(path, &result.output).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(result.output.as_bytes())?,
    }
    Ok(!result.failed)
}
