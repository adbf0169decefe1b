use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delaywave::{parse_config, Status};

#[derive(Parser)]
#[command(name = "delaywave", version, about = "Simulate and certify delayed damped wave and plate scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certificate, simulation, checks; writes trajectory, report and envelope table.
    Run { config: PathBuf },
    /// Certificate only, no simulation.
    Certify { config: PathBuf },
    /// Run once per initial-data scale and write a summary CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        scales: Vec<f64>,
        /// Summary CSV path (default: `sweep_csv` from the config).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = match &cli.command {
        Command::Run { config } | Command::Certify { config } | Command::Sweep { config, .. } => config.clone(),
    };
    let cfg = match parse_config(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid scenario\n{e}");
            return ExitCode::from(Status::InputError as u8);
        }
    };
    let result = match &cli.command {
        Command::Run { .. } => delaywave::run(&cfg),
        Command::Certify { .. } => delaywave::certify(&cfg),
        Command::Sweep { scales, output, .. } => {
            if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                eprintln!("error: scales must be finite and non-negative, got {s}");
                return ExitCode::from(Status::InputError as u8);
            }
            delaywave::sweep(&cfg, scales, output.as_deref())
        }
    };
    match result {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for f in &out.failures {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(out.status as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::InputError as u8)
        }
    }
}
