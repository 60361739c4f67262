use std::fmt::Write as _;

use crate::channel::EventLog;
use crate::primitives::cipher::CIPHER_ID;
use crate::primitives::{Digest160, HASH_ID};

use super::metrics::PhaseMetrics;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Outcome of a scenario or suite run.
///
/// Scenario runs carry their event log and ledger dump so the trace can be
/// exported; suite runs aggregate many simulations and carry neither.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub id: String,
    pub seed: u64,
    pub delta_t: u64,
    pub base_delay: u64,
    pub assertions: Vec<Assertion>,
    pub metrics: Vec<PhaseMetrics>,
    pub event_log_digest: Option<Digest160>,
    pub event_log: EventLog,
    pub ledger_dump: String,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn versions(&self) -> Vec<(&'static str, String)> {
        vec![
            ("l2ai", env!("CARGO_PKG_VERSION").to_string()),
            ("hash", HASH_ID.to_string()),
            ("cipher", CIPHER_ID.to_string()),
            ("delta_t_ms", self.delta_t.to_string()),
            ("base_delay_ms", self.base_delay.to_string()),
        ]
    }

    /// Line-delimited `key=value` records followed by a summary block.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "scenario={}", self.id).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        for (k, v) in self.versions() {
            writeln!(out, "version.{k}={v}").unwrap();
        }
        for a in &self.assertions {
            let verdict = if a.passed { "pass" } else { "fail" };
            if a.detail.is_empty() {
                writeln!(out, "assert {verdict} {}", a.name).unwrap();
            } else {
                writeln!(out, "assert {verdict} {} :: {}", a.name, a.detail).unwrap();
            }
        }
        for m in &self.metrics {
            writeln!(out, "{m}").unwrap();
        }
        if let Some(d) = self.event_log_digest {
            writeln!(out, "event_log_digest={d}").unwrap();
        }
        let failed = self.failures().count();
        writeln!(out, "[summary]").unwrap();
        writeln!(out, "assertions={}", self.assertions.len()).unwrap();
        writeln!(out, "passed={}", self.assertions.len() - failed).unwrap();
        writeln!(out, "failed={failed}").unwrap();
        writeln!(out, "result={}", if failed == 0 { "pass" } else { "fail" }).unwrap();
        out
    }

    /// The event log and ledger dump under a fixed header.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# l2ai trace v1").unwrap();
        writeln!(out, "# scenario={} seed={}", self.id, self.seed).unwrap();
        if !self.event_log.is_empty() {
            writeln!(out, "[events]").unwrap();
            out.push_str(&self.event_log.to_text());
        }
        if !self.ledger_dump.is_empty() {
            writeln!(out, "[ledger]").unwrap();
            out.push_str(&self.ledger_dump);
        }
        out
    }
}
