use std::collections::BTreeMap;
use std::fmt;

use crate::primitives::OpCounters;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Registration,
    Login,
    AuthKeyExchange,
    CredUpdate,
    AuthzUpdate,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Registration,
        Phase::Login,
        Phase::AuthKeyExchange,
        Phase::CredUpdate,
        Phase::AuthzUpdate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Registration => "Registration",
            Phase::Login => "Login",
            Phase::AuthKeyExchange => "AuthKeyExchange",
            Phase::CredUpdate => "CredUpdate",
            Phase::AuthzUpdate => "AuthzUpdate",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    User,
    Server,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::User => "User",
            Side::Server => "Server",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseMetrics {
    pub phase: Phase,
    pub side: Side,
    pub ops: OpCounters,
    pub bytes_sent: u64,
}

impl fmt::Display for PhaseMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "metric phase={} side={} hash={} xor={} enc={} dec={} fe={} bytes={}",
            self.phase,
            self.side,
            self.ops.hash_count,
            self.ops.xor_count,
            self.ops.enc_count,
            self.ops.dec_count,
            self.ops.fe_count,
            self.bytes_sent
        )
    }
}

/// Per-(phase, side) accumulator.
#[derive(Clone, Debug, Default)]
pub struct MetricsBook {
    entries: BTreeMap<(Phase, Side), PhaseMetrics>,
}

impl MetricsBook {
    fn entry(&mut self, phase: Phase, side: Side) -> &mut PhaseMetrics {
        self.entries.entry((phase, side)).or_insert(PhaseMetrics {
            phase,
            side,
            ops: OpCounters::default(),
            bytes_sent: 0,
        })
    }

    pub fn charge(&mut self, phase: Phase, side: Side, ops: OpCounters) {
        self.entry(phase, side).ops += ops;
    }

    pub fn add_bytes(&mut self, phase: Phase, side: Side, n: usize) {
        self.entry(phase, side).bytes_sent += n as u64;
    }

    pub fn get(&self, phase: Phase, side: Side) -> Option<&PhaseMetrics> {
        self.entries.get(&(phase, side))
    }

    pub fn list(&self) -> Vec<PhaseMetrics> {
        self.entries.values().copied().collect()
    }

    pub fn total(&self) -> OpCounters {
        self.entries
            .values()
            .fold(OpCounters::default(), |acc, m| acc + m.ops)
    }
}
