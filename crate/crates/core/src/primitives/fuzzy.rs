//! Code-offset fuzzy extractor over 256-bit biometric templates.
//!
//! The secure sketch uses a 5x repetition code: 51 message bits are each
//! repeated five times to fill bits 0..255 of the template; bit 255 is not
//! covered by any block. Majority decoding corrects up to two flips per block.
//!
//! `Gen` draws the message at random and derives the 160-bit key from it.
//! The helper data carries a check digest of the key so `Rep` reports an
//! uncorrectable reading instead of returning a wrong key.

use rand::RngCore;
use thiserror::Error;

use super::digest::sha256_160;
use super::{counters, Digest160};

pub const BIO_LEN: usize = 32;
pub const BIO_BITS: usize = BIO_LEN * 8;
pub const REPETITION: usize = 5;
pub const BLOCKS: usize = BIO_BITS / REPETITION;
/// Flips per block that are always corrected.
pub const TOLERANCE: usize = REPETITION / 2;
pub const HELPER_LEN: usize = BIO_LEN + super::DIGEST_LEN;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FuzzyError {
    #[error("biometric reading is outside the correctable distance")]
    RecoveryFailure,
}

/// A 256-bit biometric reading. Bits are numbered MSB-first from byte 0.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BioTemplate(pub [u8; BIO_LEN]);

impl BioTemplate {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut b = [0u8; BIO_LEN];
        rng.fill_bytes(&mut b);
        BioTemplate(b)
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i / 8] ^= 0x80 >> (i % 8);
    }

    pub fn with_flips(mut self, bits: &[usize]) -> Self {
        for &b in bits {
            self.flip(b);
        }
        self
    }

    pub fn hamming(&self, other: &BioTemplate) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    fn xor(&self, other: &[u8; BIO_LEN]) -> [u8; BIO_LEN] {
        let mut out = [0u8; BIO_LEN];
        for i in 0..BIO_LEN {
            out[i] = self.0[i] ^ other[i];
        }
        out
    }
}

impl std::fmt::Debug for BioTemplate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BioTemplate({})", hex::encode(self.0))
    }
}

/// Public reproduction data (`τ`): the code offset plus a check digest of σ.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct HelperData {
    pub offset: [u8; BIO_LEN],
    pub check: Digest160,
}

impl HelperData {
    pub fn to_bytes(&self) -> [u8; HELPER_LEN] {
        let mut out = [0u8; HELPER_LEN];
        out[..BIO_LEN].copy_from_slice(&self.offset);
        out[BIO_LEN..].copy_from_slice(self.check.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != HELPER_LEN {
            return None;
        }
        let mut offset = [0u8; BIO_LEN];
        offset.copy_from_slice(&bytes[..BIO_LEN]);
        Some(HelperData {
            offset,
            check: Digest160::from_slice(&bytes[BIO_LEN..])?,
        })
    }
}

impl std::fmt::Debug for HelperData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "HelperData({}, {})",
            hex::encode(self.offset),
            self.check
        )
    }
}

type Message = [bool; BLOCKS];

fn encode(msg: &Message) -> [u8; BIO_LEN] {
    let mut out = BioTemplate([0u8; BIO_LEN]);
    for (block, &bit) in msg.iter().enumerate() {
        if bit {
            for j in 0..REPETITION {
                out.flip(block * REPETITION + j);
            }
        }
    }
    out.0
}

fn decode(word: &BioTemplate) -> Message {
    let mut msg = [false; BLOCKS];
    for (block, slot) in msg.iter_mut().enumerate() {
        let ones = (0..REPETITION)
            .filter(|j| word.bit(block * REPETITION + j))
            .count();
        *slot = ones > TOLERANCE;
    }
    msg
}

fn message_bytes(msg: &Message) -> [u8; 7] {
    let mut out = [0u8; 7];
    for (i, &bit) in msg.iter().enumerate() {
        if bit {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

fn sigma_of(msg: &Message) -> Digest160 {
    sha256_160(&[b"l2ai/fe/sigma", &message_bytes(msg)])
}

fn check_of(sigma: &Digest160) -> Digest160 {
    sha256_160(&[b"l2ai/fe/check", sigma.as_bytes()])
}

/// `Gen(BIO) = (σ, τ)`.
pub fn fe_gen<R: RngCore + ?Sized>(bio: &BioTemplate, rng: &mut R) -> (Digest160, HelperData) {
    counters::record_fe();
    let mut raw = [0u8; 7];
    rng.fill_bytes(&mut raw);
    let mut msg = [false; BLOCKS];
    for (i, slot) in msg.iter_mut().enumerate() {
        *slot = raw[i / 8] & (0x80 >> (i % 8)) != 0;
    }
    let sigma = sigma_of(&msg);
    let helper = HelperData {
        offset: bio.xor(&encode(&msg)),
        check: check_of(&sigma),
    };
    (sigma, helper)
}

/// `Rep(BIO*, τ) = σ`.
pub fn fe_rep(bio: &BioTemplate, helper: &HelperData) -> Result<Digest160, FuzzyError> {
    counters::record_fe();
    let noisy_codeword = BioTemplate(bio.xor(&helper.offset));
    let sigma = sigma_of(&decode(&noisy_codeword));
    if check_of(&sigma) == helper.check {
        Ok(sigma)
    } else {
        Err(FuzzyError::RecoveryFailure)
    }
}
