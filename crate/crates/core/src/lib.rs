//! Lightweight three-factor authentication and authorization for IoMT.
//!
//! The crate models a hospital server and user gateways exchanging two
//! fixed-width messages over an insecure channel, with credentials anchored
//! on a private hash-chained ledger:
//!
//! * [`primitives`]: 160-bit hash and XOR, authenticated cipher, fuzzy
//!   extractor, simulated clock, operation counters.
//! * [`ledger`]: append-only hash chain holding token digests, identity
//!   indexes and smart cards.
//! * [`protocol`]: server and gateway state machines.
//! * [`channel`]: deterministic discrete-event channel with a scripted
//!   Dolev-Yao adversary.
//! * [`harness`]: scenario runner, built-in suites and reports.

pub mod channel;
pub mod harness;
pub mod ledger;
pub mod primitives;
pub mod protocol;
