//! Per-thread primitive operation counters.
//!
//! Every metered primitive bumps a counter on the calling thread. The
//! simulator is single-threaded, so a phase's cost is the difference between
//! two snapshots taken around it.

use std::cell::Cell;
use std::ops::{Add, AddAssign, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCounters {
    pub hash_count: u64,
    pub xor_count: u64,
    pub enc_count: u64,
    pub dec_count: u64,
    pub fe_count: u64,
}

impl OpCounters {
    pub fn is_zero(&self) -> bool {
        *self == OpCounters::default()
    }
}

impl Sub for OpCounters {
    type Output = OpCounters;

    fn sub(self, rhs: OpCounters) -> OpCounters {
        OpCounters {
            hash_count: self.hash_count - rhs.hash_count,
            xor_count: self.xor_count - rhs.xor_count,
            enc_count: self.enc_count - rhs.enc_count,
            dec_count: self.dec_count - rhs.dec_count,
            fe_count: self.fe_count - rhs.fe_count,
        }
    }
}

impl Add for OpCounters {
    type Output = OpCounters;

    fn add(self, rhs: OpCounters) -> OpCounters {
        OpCounters {
            hash_count: self.hash_count + rhs.hash_count,
            xor_count: self.xor_count + rhs.xor_count,
            enc_count: self.enc_count + rhs.enc_count,
            dec_count: self.dec_count + rhs.dec_count,
            fe_count: self.fe_count + rhs.fe_count,
        }
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: OpCounters) {
        *self = *self + rhs;
    }
}

thread_local! {
    static COUNTERS: Cell<OpCounters> = Cell::new(OpCounters::default());
}

fn bump(f: impl FnOnce(&mut OpCounters)) {
    COUNTERS.with(|c| {
        let mut v = c.get();
        f(&mut v);
        c.set(v);
    });
}

pub(crate) fn record_hash() {
    bump(|c| c.hash_count += 1);
}

pub(crate) fn record_xor() {
    bump(|c| c.xor_count += 1);
}

pub(crate) fn record_enc() {
    bump(|c| c.enc_count += 1);
}

pub(crate) fn record_dec() {
    bump(|c| c.dec_count += 1);
}

pub(crate) fn record_fe() {
    bump(|c| c.fe_count += 1);
}

/// Current totals for this thread.
pub fn snapshot() -> OpCounters {
    COUNTERS.with(|c| c.get())
}

pub fn reset() {
    COUNTERS.with(|c| c.set(OpCounters::default()));
}

/// Runs `f` and returns its result with the operations it performed.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, OpCounters) {
    let before = snapshot();
    let out = f();
    (out, snapshot() - before)
}
