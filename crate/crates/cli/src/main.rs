mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

/// Failure classes, mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input data or parameters.
    Input(String),
    /// Output could not be written.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<hsfkit_core::Error> for CliError {
    fn from(e: hsfkit_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Benford(a) => commands::benford(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Overlay(a) => commands::overlay(&a),
        Command::Correlate(a) => commands::correlate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hsfkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
