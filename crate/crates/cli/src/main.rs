//! `wstate`: simulate, sweep, analyse and validate single-atom W-state
//! generation across N cavity modes.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, Flags};

#[derive(Parser)]
#[command(name = "wstate", version, about = "Single-atom W-state generation in N cavity modes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve |e,0…0⟩ and report W fidelity at one interaction time.
    Simulate(Flags),
    /// Robustness sweep over timing error, coupling disorder, detuning or mode count.
    Sweep(Flags),
    /// Pairwise concurrences of W_n and GHZ_n with the other subsystems traced out.
    Entanglement(Flags),
    /// Run the invariant suite; exit 1 if any check fails.
    Validate(Flags),
}

fn main() -> ExitCode {
    // Usage errors exit with status 2 inside clap.
    let (command, flags) = match Cli::parse().command {
        Cmd::Simulate(f) => (Command::Simulate, f),
        Cmd::Sweep(f) => (Command::Sweep, f),
        Cmd::Entanglement(f) => (Command::Entanglement, f),
        Cmd::Validate(f) => (Command::Validate, f),
    };
    match config::resolve(command, &flags).and_then(|cfg| commands::run(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wstate: {e}");
            e.exit_code()
        }
    }
}
