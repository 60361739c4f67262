use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use rand::RngCore;
use sha2::{Digest as _, Sha256};

use super::counters;

/// Width of every protocol value in bytes (160 bits).
pub const DIGEST_LEN: usize = 20;

/// A 160-bit value.
///
/// Hash outputs, identities, tokens, pseudo-identities, nonces and session
/// keys all share this width, so XOR between any two of them is always
/// defined.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest160([u8; DIGEST_LEN]);

impl Digest160 {
    pub const ZERO: Digest160 = Digest160([0u8; DIGEST_LEN]);

    pub const fn from_bytes(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest160(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        let arr: [u8; DIGEST_LEN] = bytes.try_into().ok()?;
        Some(Digest160(arr))
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; DIGEST_LEN];
        rng.fill_bytes(&mut bytes);
        Digest160(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Flips bit `bit` (0 = most significant bit of byte 0).
    pub fn with_bit_flipped(mut self, bit: usize) -> Self {
        self.0[bit / 8] ^= 0x80 >> (bit % 8);
        self
    }

    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|b| b.count_ones()).sum()
    }
}

impl fmt::Debug for Digest160 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest160({})", self.to_hex())
    }
}

impl fmt::Display for Digest160 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Digest160 {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bytes = [0u8; DIGEST_LEN];
        hex::decode_to_slice(s, &mut bytes)?;
        Ok(Digest160(bytes))
    }
}

impl AsRef<[u8]> for Digest160 {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

/// Uncounted XOR. Protocol code goes through [`xor`] so the operation is
/// metered; this impl exists for tests and internal plumbing.
impl BitXor for Digest160 {
    type Output = Digest160;

    fn bitxor(self, rhs: Digest160) -> Digest160 {
        let mut out = [0u8; DIGEST_LEN];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(rhs.0.iter())) {
            *o = a ^ b;
        }
        Digest160(out)
    }
}

/// SHA-256 truncated to its first 160 bits. Not metered.
pub(crate) fn sha256_160(parts: &[&[u8]]) -> Digest160 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    let full = hasher.finalize();
    let mut out = [0u8; DIGEST_LEN];
    out.copy_from_slice(&full[..DIGEST_LEN]);
    Digest160(out)
}

/// The protocol hash `h(.)`: first 160 bits of SHA-256. Metered.
pub fn hash(data: &[u8]) -> Digest160 {
    counters::record_hash();
    sha256_160(&[data])
}

/// `h(a ∥ b ∥ ...)` over raw byte concatenation of the parts. One metered
/// hash regardless of the number of parts.
pub fn hash_concat(parts: &[&[u8]]) -> Digest160 {
    counters::record_hash();
    sha256_160(parts)
}

/// Metered bitwise XOR.
pub fn xor(a: Digest160, b: Digest160) -> Digest160 {
    counters::record_xor();
    a ^ b
}

/// Width-normalised `(a ∥ b)` for use as an XOR operand: `h(a ∥ b)`.
pub fn concat_mask(a: Digest160, b: Digest160) -> Digest160 {
    hash_concat(&[a.as_bytes(), b.as_bytes()])
}
