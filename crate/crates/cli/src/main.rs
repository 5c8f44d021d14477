//! `jetflow` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 runtime or domain error.

mod args;
mod commands;
mod output;
mod source;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

/// Errors that are the caller's fault rather than the computation's.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use jetflow::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::Expr(_)
            | E::UnknownEntry(_)
            | E::UnknownParam { .. }
            | E::ConstraintViolation(_)
            | E::InvalidArgument(_)
            | E::EmptyRegion,
        ) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List(a) => commands::list(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Geodesic(a) => commands::geodesic(a),
        Command::Energy(a) => commands::energy(a),
        Command::Lagrangian(a) => commands::lagrangian(a),
        Command::CurvatureMap(a) => commands::curvature_map(a),
        Command::Verify(a) => verify::run(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
