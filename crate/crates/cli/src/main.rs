mod args;
mod commands;
mod config;
mod io;
mod reproduce;

use args::{Cli, Command};
use clap::Parser;
use config::RunConfig;
use std::process::ExitCode;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NotConverged,
    AcceptanceFailed,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => 2,
            Outcome::AcceptanceFailed => 3,
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let cfg = RunConfig::from_args(&cli.global)?;
    match &cli.command {
        Command::Reduce(a) => commands::reduce(&cfg, a),
        Command::TuneFreq(a) => commands::tune_freq(&cfg, a),
        Command::TuneTime(a) => commands::tune_time(&cfg, a),
        Command::Simulate(a) => commands::simulate(&cfg, a),
        Command::Analyze { what } => commands::analyze(&cfg, what),
        Command::Reproduce(a) => reproduce::reproduce(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(o) => ExitCode::from(o.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
