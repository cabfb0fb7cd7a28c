//! `closure14` command-line frontend.
//!
//! Exit codes: 0 success, 1 verification failure, 2 config error,
//! 3 domain error.

mod commands;
mod config;
mod fail;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::Command;
use config::{check_output, FamilyName, Format, Overrides, RunConfig};
use fail::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "closure14",
    version,
    about = "Closure coefficients, potentials and verification for the 14-moment model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    family: Option<FamilyName>,
    /// Tensor truncation N.
    #[arg(long, global = true)]
    n_trunc: Option<usize>,
    /// Series truncation S.
    #[arg(long, global = true)]
    s_trunc: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

fn write_output(out: Option<&PathBuf>, body: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::Io(format!("--out {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn execute(cli: &Cli) -> Result<Vec<String>, Failure> {
    check_output(cli.out.as_deref(), cli.config.as_deref())?;
    let flags = Overrides {
        family: cli.family,
        n_trunc: cli.n_trunc,
        s_trunc: cli.s_trunc,
        seed: cli.seed,
        format: cli.format,
    };
    let config = RunConfig::load(cli.config.as_deref(), &flags)?;
    let outcome = commands::run(cli.command, &config)?;
    write_output(cli.out.as_ref(), &outcome.body)?;
    Ok(outcome.failing)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(failing) if failing.is_empty() => ExitCode::SUCCESS,
        Ok(failing) => {
            eprintln!("failing conditions: {}", failing.join(", "));
            ExitCode::from(1)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
