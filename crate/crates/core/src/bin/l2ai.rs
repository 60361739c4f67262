use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use l2ai::harness::{
    builtin_scenario, export_trace, run_scenario, run_scenario_text, run_suite, HarnessError,
    Report, RunOptions,
};

const BUILTIN_PREFIX: &str = "builtin:";

/// Simulator and conformance harness for the L2AI authentication protocol.
#[derive(Parser, Debug)]
#[command(name = "l2ai", version)]
struct Cli {
    /// Seed for the simulation (overrides the scenario's own `seed` line).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Freshness window in simulated milliseconds.
    #[arg(long = "delta-t", value_name = "MS", global = true)]
    delta_t: Option<u64>,
    /// Permission table replacing the built-in one.
    #[arg(long = "perm-table", value_name = "PATH", global = true)]
    perm_table: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file, or a shipped scenario as `builtin:<name>`.
    Run {
        scenario: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in suite: honest, attacks, metrics or fuzz.
    Suite {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario (the honest reference scenario by default) and write
    /// its event log and ledger dump.
    Export {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        scenario: Option<String>,
    },
}

fn load(scenario: &str, opts: &RunOptions) -> Result<Report, HarnessError> {
    match scenario.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => {
            let text = builtin_scenario(name).ok_or_else(|| HarnessError::Io {
                path: scenario.to_string(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "no such built-in scenario",
                ),
            })?;
            run_scenario_text(name, text, opts)
        }
        None => run_scenario(Path::new(scenario), opts),
    }
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), HarnessError> {
    let text = report.render();
    match out {
        Some(path) => fs::write(path, text).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<bool, HarnessError> {
    let perms = cli
        .perm_table
        .as_deref()
        .map(RunOptions::load_perms)
        .transpose()?;
    let opts = RunOptions {
        seed: cli.seed,
        delta_t: cli.delta_t,
        perms,
    };
    match cli.command {
        Command::Run { scenario, out } => {
            let report = load(&scenario, &opts)?;
            emit(&report, out.as_deref())?;
            Ok(report.passed())
        }
        Command::Suite { name, out } => {
            let report = run_suite(&name, &opts)?;
            emit(&report, out.as_deref())?;
            Ok(report.passed())
        }
        Command::Export { trace, scenario } => {
            let source = scenario.unwrap_or_else(|| format!("{BUILTIN_PREFIX}honest"));
            let report = load(&source, &opts)?;
            export_trace(&report, &trace)?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
