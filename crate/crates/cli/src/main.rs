mod args;
mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        source: nspforge::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nspforge::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Input { .. } | CliError::Json { .. } | CliError::Usage(_) => 1,
            CliError::Write { .. } | CliError::Core(_) => 3,
        }
    }
}

/// What a subcommand produced: JSON for stdout, a one-line summary for
/// stderr, and the exit status.
pub struct Outcome {
    pub json: String,
    pub summary: String,
    pub infeasible: bool,
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let env = env_logger::Env::new().filter_or("NSPFORGE_LOG", default);
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    init_logging(cli.verbose);
    let outcome = commands::dispatch(cli.command)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &outcome.json).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(outcome.json.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })?;
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            ExitCode::from(if outcome.infeasible { 2 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
