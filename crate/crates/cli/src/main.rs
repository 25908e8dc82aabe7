use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sdde_cli::config::RawConfig;
use sdde_cli::{run, Command};

/// Delay differential equation solver.
#[derive(Parser)]
#[command(name = "sdde", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one model and write the dense solution.
    Simulate(RunArgs),
    /// Convergence study against an exact solution.
    Converge(RunArgs),
    /// Characteristic roots at the steady states, with an optional sweep.
    CharRoots(RunArgs),
    /// Steady states and their stability.
    SteadyStates(RunArgs),
    /// Poincare section u(t) = 0 in delayed coordinates.
    Poincare(RunArgs),
    /// Threshold-condition residuals along a computed solution.
    Audit(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file with `key = value` lines.
    config: Option<PathBuf>,
    /// Extra `key=value` entries, applied after the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load(args: &RunArgs) -> Result<RawConfig, String> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            RawConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RawConfig::default(),
    };
    for entry in &args.set {
        raw.set(entry).map_err(|e| e.to_string())?;
    }
    Ok(raw)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (cmd, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Converge(a) => (Command::Converge, a),
        Cmd::CharRoots(a) => (Command::CharRoots, a),
        Cmd::SteadyStates(a) => (Command::SteadyStates, a),
        Cmd::Poincare(a) => (Command::Poincare, a),
        Cmd::Audit(a) => (Command::Audit, a),
    };
    let raw = match load(args) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("sdde: config error: {msg}");
            return ExitCode::from(1);
        }
    };
    match run(cmd, raw) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdde: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
