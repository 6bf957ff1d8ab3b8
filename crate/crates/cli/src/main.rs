use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cmclab_core::config::Command;
use cmclab_core::runner::{run_text, RunOptions};
use cmclab_core::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Barrier,
    Foliate,
    Derivative,
    Sister,
    Audit,
    Halfspace,
    Convergence,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Barrier => Command::Barrier,
            Cmd::Foliate => Command::Foliate,
            Cmd::Derivative => Command::Derivative,
            Cmd::Sister => Command::Sister,
            Cmd::Audit => Command::Audit,
            Cmd::Halfspace => Command::Halfspace,
            Cmd::Convergence => Command::Convergence,
        }
    }
}

/// Constant mean curvature graph experiments in E(κ, τ).
///
/// Exit codes: 0 success, 2 configuration or parse error, 3 numerical
/// failure (see failure.json), 4 I/O error.
#[derive(Debug, Parser)]
#[command(name = "cmclab", version)]
struct Args {
    /// Experiment to run; must match the experiment in the config file.
    command: Cmd,
    /// JSON experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the experiment file.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cmclab: cannot read {}: {e}", args.config.display());
            return ExitCode::from(Error::Io(e).exit_code() as u8);
        }
    };
    let options = RunOptions {
        out_dir: args.out.clone(),
        seed: args.seed,
        base_dir: args.config.parent().map(PathBuf::from).unwrap_or_default(),
    };
    match run_text(args.command.into(), &text, &options) {
        Ok(manifest) => {
            println!(
                "{}: wrote {} files to {} in {:.2} s",
                manifest.command,
                manifest.files.len(),
                args.out.display(),
                manifest.wall_time_s
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cmclab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
