// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! `posqsd` command-line tool. Exit status: 0 on success, 1 on usage or
//! configuration errors, 2 when a positivity violation was detected.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Trajectories(a) => commands::trajectories(a),
        Command::Ensemble(a) => commands::ensemble(a),
        Command::Check(a) => commands::check(a),
        Command::SolveMe(a) => commands::solve_me(a),
        Command::Export(a) => commands::export(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<posqsd::Error>() {
                Some(posqsd::Error::PositivityViolation { state, .. })
                | Some(posqsd::Error::AllTrajectoriesAborted { witness: state, .. })
                | Some(posqsd::Error::UnexpectedAbort { witness: state, .. }) => {
                    eprintln!("witness state = {}", commands::format_state(state));
                    ExitCode::from(commands::EXIT_VIOLATION)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
