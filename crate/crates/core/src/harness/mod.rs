//! Scenario runner, built-in suites and reports.
//!
//! [`Simulation`] wires a [`Server`](crate::protocol::Server) and user
//! [`Gateway`](crate::protocol::Gateway)s to the [`channel`](crate::channel)
//! and attributes every metered primitive call to a protocol phase and side.

mod metrics;
mod report;
mod sim;
mod suites;

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::channel::{ParseError, Scenario};
use crate::protocol::{PermTableError, PermissionTable, DEFAULT_DELTA_T_MS};

pub use metrics::{MetricsBook, Phase, PhaseMetrics, Side};
pub use report::{Assertion, Report};
pub use sim::{noisy_reading, SimConfig, Simulation, DEFAULT_ROLE, DEFAULT_SCOPE};
pub use suites::{
    attacks_suite, fuzz_suite, honest_suite, metrics_suite, substring_findings, FUZZ_SESSIONS,
    HONEST_SEEDS, SUITES,
};

pub const DEFAULT_SEED: u64 = 42;

/// Scenario files shipped with the crate, by name.
pub const BUILTIN_SCENARIOS: [(&str, &str); 6] = [
    ("honest", include_str!("../../scenarios/honest.l2s")),
    (
        "replay-stale",
        include_str!("../../scenarios/replay-stale.l2s"),
    ),
    (
        "replay-fresh",
        include_str!("../../scenarios/replay-fresh.l2s"),
    ),
    (
        "tamper-msg1",
        include_str!("../../scenarios/tamper-msg1.l2s"),
    ),
    ("drop-msg2", include_str!("../../scenarios/drop-msg2.l2s")),
    (
        "authz-update",
        include_str!("../../scenarios/authz-update.l2s"),
    ),
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("unknown suite `{0}` (expected one of honest, attacks, metrics, fuzz)")]
    UnknownSuite(String),
    #[error("permission table: {0}")]
    PermTable(#[from] PermTableError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Command-line overrides applied on top of a scenario or suite.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub delta_t: Option<u64>,
    pub perms: Option<PermissionTable>,
}

impl RunOptions {
    pub fn load_perms(path: &Path) -> Result<PermissionTable, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(PermissionTable::parse(&text)?)
    }

    pub fn config(&self, seed: u64) -> SimConfig {
        let mut config = SimConfig::new(seed);
        config.delta_t = self.delta_t.unwrap_or(DEFAULT_DELTA_T_MS);
        if let Some(p) = &self.perms {
            config.perms = p.clone();
        }
        config
    }

    pub fn base_seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

pub fn builtin_scenario(name: &str) -> Option<&'static str> {
    BUILTIN_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Parses and runs a scenario file.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<Report, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let id = path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    run_scenario_text(&id, &text, opts).map_err(|e| match e {
        HarnessError::Parse { source, .. } => HarnessError::Parse {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

pub fn run_scenario_text(id: &str, text: &str, opts: &RunOptions) -> Result<Report, HarnessError> {
    let mut scenario = Scenario::parse(id, text).map_err(|source| HarnessError::Parse {
        path: id.to_string(),
        source,
    })?;
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    if let Some(dt) = opts.delta_t {
        scenario.delta_t = Some(dt);
    }
    Ok(execute(&scenario, opts))
}

/// Runs a parsed scenario. Besides its `expect` lines, every run asserts
/// counter completeness and ledger chain integrity.
pub fn execute(scenario: &Scenario, opts: &RunOptions) -> Report {
    let (sim, mut assertions) = Simulation::run_scenario(scenario, opts.config(scenario.seed));
    assertions.push(Assertion::new(
        "counters-complete",
        sim.counters_complete(),
        format!("global_hash={}", sim.global_ops().hash_count),
    ));
    assertions.push(Assertion::new(
        "ledger-chain-verifies",
        sim.server().ledger().verify_chain(),
        format!("blocks={}", sim.server().ledger().len()),
    ));
    Report {
        id: scenario.id.clone(),
        seed: scenario.seed,
        delta_t: sim.config().delta_t,
        base_delay: sim.config().base_delay,
        assertions,
        metrics: sim.metrics().list(),
        event_log_digest: Some(sim.event_log().digest()),
        event_log: sim.event_log().clone(),
        ledger_dump: sim.server().ledger().export_string(),
    }
}

pub fn run_suite(name: &str, opts: &RunOptions) -> Result<Report, HarnessError> {
    match name {
        "honest" => Ok(honest_suite(opts)),
        "attacks" => Ok(attacks_suite(opts)),
        "metrics" => Ok(metrics_suite(opts)),
        "fuzz" => Ok(fuzz_suite(opts)),
        other => Err(HarnessError::UnknownSuite(other.to_string())),
    }
}

/// Writes the report's event log and ledger dump.
pub fn export_trace(report: &Report, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, report.trace()).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}
