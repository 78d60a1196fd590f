//! `curve-bpe`: batch front end. Exit codes: 0 success, 2 invalid input,
//! 3 numerical failure.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::config::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("relative dropped mass {relative:e} exceeds the limit {limit:e}")]
    ExcessiveDrop { relative: f64, limit: f64 },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<curvebpe::Error>() {
        return if e.is_numerical() { 3 } else { 2 };
    }
    match err.downcast_ref::<CliError>() {
        Some(CliError::ExcessiveDrop { .. }) => 3,
        _ => 2,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CURVE_BPE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Validation(format!("CURVE_BPE_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Validation("CURVE_BPE_THREADS must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Timestamps live only here so that reports stay reproducible.
fn append_log(cli: &Cli, code: u8) {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    if let Ok(mut f) = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(cli.out.join("run.log"))
    {
        let _ = writeln!(f, "{secs} {} exit={code}", cli.command.name());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|_| std::fs::create_dir_all(&cli.out).map_err(Into::into))
        .and_then(|_| commands::run(&cli));
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(e)
        }
    };
    append_log(&cli, code);
    ExitCode::from(code)
}
