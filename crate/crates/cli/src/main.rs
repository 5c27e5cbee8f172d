//! `scalelaw` command-line tool.
//!
//! Exit codes: 0 success, 2 domain error (a value outside a law's domain),
//! 3 input error (bad flags, unreadable or malformed files).

mod args;
mod commands;
mod number;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use scalelaw_core::{DomainError, Error};

use args::{Cli, Command};

/// A failed command, tagged with its exit code.
#[derive(Debug)]
pub enum Failure {
    Domain(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 2,
            Failure::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Input(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Record { .. } => Failure::Domain(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<DomainError> for Failure {
    fn from(e: DomainError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(Failure::Input("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Failure::Input(e.to_string()))?;
    }
    // Build the whole output before touching the destination so a failed
    // command leaves no partial file behind.
    let mut buf = Vec::new();
    match &cli.command {
        Command::Eval(a) => commands::eval(a, &mut buf)?,
        Command::Fit(a) => commands::fit(a, cli.seed, &mut buf)?,
        Command::Plan(a) => commands::plan(a, &mut buf)?,
        Command::Isoflop(a) => commands::isoflop(a, &mut buf)?,
        Command::Compare(a) => commands::compare(a, &mut buf)?,
        Command::Tables => commands::tables(&mut buf)?,
        Command::Grid(a) => commands::grid(a, &mut buf)?,
        Command::Synth(a) => commands::synth(a, cli.seed, &mut buf)?,
    }
    match &cli.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(&buf)?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}
