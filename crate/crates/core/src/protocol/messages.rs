//! Wire messages, the smart card record, and session transcripts.
//!
//! All encodings are fixed width with no tags or delimiters. Timestamps are
//! 8-byte big-endian millisecond counts; digests are 20 raw bytes.

use thiserror::Error;

use crate::primitives::fuzzy::HELPER_LEN;
use crate::primitives::{Digest160, HelperData, Timestamp, DIGEST_LEN};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("{kind}: expected {expected} bytes, got {actual}")]
pub struct WireError {
    pub kind: &'static str,
    pub expected: usize,
    pub actual: usize,
}

fn check_len(kind: &'static str, bytes: &[u8], expected: usize) -> Result<(), WireError> {
    if bytes.len() == expected {
        Ok(())
    } else {
        Err(WireError {
            kind,
            expected,
            actual: bytes.len(),
        })
    }
}

fn digest_at(bytes: &[u8], offset: usize) -> Digest160 {
    Digest160::from_slice(&bytes[offset..offset + DIGEST_LEN]).expect("length checked")
}

fn timestamp_at(bytes: &[u8], offset: usize) -> Timestamp {
    Timestamp::from_be_bytes(
        bytes[offset..offset + 8]
            .try_into()
            .expect("length checked"),
    )
}

/// Registration request `{X, DID_i, PWD_i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegRequest {
    pub x: Digest160,
    pub did: Digest160,
    pub pwd: Digest160,
}

impl RegRequest {
    pub const WIRE_LEN: usize = 3 * DIGEST_LEN;

    pub fn to_bytes(&self) -> [u8; Self::WIRE_LEN] {
        let mut out = [0u8; Self::WIRE_LEN];
        out[..20].copy_from_slice(self.x.as_bytes());
        out[20..40].copy_from_slice(self.did.as_bytes());
        out[40..].copy_from_slice(self.pwd.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        check_len("RegRequest", bytes, Self::WIRE_LEN)?;
        Ok(RegRequest {
            x: digest_at(bytes, 0),
            did: digest_at(bytes, 20),
            pwd: digest_at(bytes, 40),
        })
    }
}

/// Card issued by the server at the end of server-side registration:
/// `{K_i, EID_i, HID_HMS, R¹_HMS, AX_ui}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProvisionalCard {
    pub k: Digest160,
    pub eid: Digest160,
    pub hid: Digest160,
    pub r_hms: Digest160,
    pub ax: Digest160,
}

impl ProvisionalCard {
    pub const WIRE_LEN: usize = 5 * DIGEST_LEN;

    pub fn to_bytes(&self) -> [u8; Self::WIRE_LEN] {
        let mut out = [0u8; Self::WIRE_LEN];
        for (i, d) in [self.k, self.eid, self.hid, self.r_hms, self.ax]
            .iter()
            .enumerate()
        {
            out[i * 20..(i + 1) * 20].copy_from_slice(d.as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        check_len("ProvisionalCard", bytes, Self::WIRE_LEN)?;
        Ok(ProvisionalCard {
            k: digest_at(bytes, 0),
            eid: digest_at(bytes, 20),
            hid: digest_at(bytes, 40),
            r_hms: digest_at(bytes, 60),
            ax: digest_at(bytes, 80),
        })
    }
}

/// Login request `{T_1, M_1, EID_i, AX_ui}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Msg1 {
    pub t1: Timestamp,
    pub m1: Digest160,
    pub eid: Digest160,
    pub ax: Digest160,
}

impl Msg1 {
    pub const WIRE_LEN: usize = 8 + 3 * DIGEST_LEN;

    pub fn to_bytes(&self) -> [u8; Self::WIRE_LEN] {
        let mut out = [0u8; Self::WIRE_LEN];
        out[..8].copy_from_slice(&self.t1.to_be_bytes());
        out[8..28].copy_from_slice(self.m1.as_bytes());
        out[28..48].copy_from_slice(self.eid.as_bytes());
        out[48..].copy_from_slice(self.ax.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        check_len("Msg1", bytes, Self::WIRE_LEN)?;
        Ok(Msg1 {
            t1: timestamp_at(bytes, 0),
            m1: digest_at(bytes, 8),
            eid: digest_at(bytes, 28),
            ax: digest_at(bytes, 48),
        })
    }
}

/// Server reply `{M_3, M_2, T_2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Msg2 {
    pub m3: Digest160,
    pub m2: Digest160,
    pub t2: Timestamp,
}

impl Msg2 {
    pub const WIRE_LEN: usize = 2 * DIGEST_LEN + 8;

    pub fn to_bytes(&self) -> [u8; Self::WIRE_LEN] {
        let mut out = [0u8; Self::WIRE_LEN];
        out[..20].copy_from_slice(self.m3.as_bytes());
        out[20..40].copy_from_slice(self.m2.as_bytes());
        out[40..].copy_from_slice(&self.t2.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        check_len("Msg2", bytes, Self::WIRE_LEN)?;
        Ok(Msg2 {
            m3: digest_at(bytes, 0),
            m2: digest_at(bytes, 20),
            t2: timestamp_at(bytes, 40),
        })
    }
}

/// The ledger-resident credential record.
///
/// `K_i` is deliberately absent: it is recovered at login as
/// `E_i ⊕ h(PWD_i ∥ b_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmartCard {
    pub e_i: Digest160,
    pub f_i: Digest160,
    pub eid_i: Digest160,
    pub r_hms: Digest160,
    pub hid_hms: Digest160,
    pub ax_ui: Digest160,
    pub tau: HelperData,
    pub card_uid: Digest160,
}

impl SmartCard {
    pub const ENCODED_LEN: usize = 7 * DIGEST_LEN + HELPER_LEN;

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::ENCODED_LEN);
        for d in [
            self.e_i,
            self.f_i,
            self.eid_i,
            self.r_hms,
            self.hid_hms,
            self.ax_ui,
        ] {
            out.extend_from_slice(d.as_bytes());
        }
        out.extend_from_slice(&self.tau.to_bytes());
        out.extend_from_slice(self.card_uid.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        check_len("SmartCard", bytes, Self::ENCODED_LEN)?;
        let tau_at = 6 * DIGEST_LEN;
        Ok(SmartCard {
            e_i: digest_at(bytes, 0),
            f_i: digest_at(bytes, 20),
            eid_i: digest_at(bytes, 40),
            r_hms: digest_at(bytes, 60),
            hid_hms: digest_at(bytes, 80),
            ax_ui: digest_at(bytes, 100),
            tau: HelperData::from_bytes(&bytes[tau_at..tau_at + HELPER_LEN])
                .expect("length checked"),
            card_uid: digest_at(bytes, tau_at + HELPER_LEN),
        })
    }
}

/// Server-side intermediate values of one authentication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuthTranscript {
    pub c_i: Digest160,
    pub w1: Digest160,
    pub m1: Digest160,
    pub m2: Digest160,
    pub m3: Digest160,
    pub sk: Digest160,
    pub n_s: Digest160,
    pub t1: Timestamp,
    pub t2: Timestamp,
    /// Identity recovered from the ledger.
    pub id: Digest160,
}
