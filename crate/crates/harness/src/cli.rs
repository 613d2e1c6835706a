//! `locc-sim run <scenario> --config <path> [--seed N] [--out <path>] [--threads K]`
//!
//! Exit codes: 0 success, 1 invocation or config error, 2 numerical failure.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{HarnessError, Result};
use crate::output::write_outputs;
use crate::scenarios::Scenario;

#[derive(Debug, Parser)]
#[command(name = "locc-sim", version, about = "Reproducible LOCC dynamics scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its CSV table and JSON sidecar.
    Run {
        scenario: String,
        #[arg(long)]
        config: PathBuf,
        /// Overrides `ensemble.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for trajectory ensembles; never changes results.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the available scenarios.
    List,
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::List => {
            for s in Scenario::ALL {
                println!("{:<28} {}", s.name(), s.description());
            }
            Ok(())
        }
        Command::Run { scenario, config, seed, out, threads } => {
            let scenario = Scenario::from_name(&scenario)?;
            if threads == Some(0) {
                return Err(HarnessError::Config { field: Some("--threads".into()), message: "must be at least 1".into() });
            }
            let text = std::fs::read_to_string(&config)
                .map_err(|e| HarnessError::io(format!("cannot read config {}", config.display()), e))?;
            let mut resolved = crate::load_config(&text, scenario, seed)?;
            if let Some(out) = out {
                resolved.output.path = out.display().to_string();
            }
            let start = Instant::now();
            log::info!("running {} (config {})", scenario.name(), crate::output::config_hash(&resolved));
            let record = scenario.run(&resolved, threads)?;
            let csv_path = PathBuf::from(&resolved.output.path);
            let sidecar = write_outputs(&record, &csv_path, threads, start.elapsed().as_secs_f64())?;
            println!("wrote {} and {}", csv_path.display(), sidecar.display());
            for (k, v) in &record.summary {
                println!("{k} = {v}");
            }
            Ok(())
        }
    }
}
