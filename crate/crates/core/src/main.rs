use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gbu_lab::io::{run_config_file, ExitStatus, Experiment};

#[derive(Clone, Copy, ValueEnum)]
enum Command {
    Solve,
    Elliptic,
    Continue,
    Threshold,
    Profile,
    BarrierCheck,
    Sweep,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Solve => Experiment::Solve,
            Command::Elliptic => Experiment::Elliptic,
            Command::Continue => Experiment::Continue,
            Command::Threshold => Experiment::Threshold,
            Command::Profile => Experiment::Profile,
            Command::BarrierCheck => Experiment::BarrierCheck,
            Command::Sweep => Experiment::Sweep,
        }
    }
}

/// Boundary gradient blow-up laboratory.
///
/// Exit status: 0 when every monitor passes, 1 on a monitor or solver
/// failure, 2 on a configuration error.
#[derive(Parser)]
#[command(version)]
struct Cli {
    experiment: Command,
    /// TOML configuration (schema in docs/config-schema.md).
    #[arg(long)]
    config: PathBuf,
    /// Parent directory for the timestamped run directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let experiment: Experiment = cli.experiment.into();
    match run_config_file(experiment, &cli.config, &cli.out) {
        Ok(outcome) => {
            println!("{}", outcome.dir.display());
            for m in &outcome.manifest.monitors {
                println!("{:<24} {}", m.name, if m.passed { "pass" } else { "FAIL" });
            }
            ExitCode::from(outcome.status() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::for_error(&e) as u8)
        }
    }
}
