//! Authenticated symmetric encryption keyed by a 160-bit value.
//!
//! ChaCha20-Poly1305 with a 256-bit key stretched from the 160-bit key by
//! SHA-256. The 96-bit nonce is drawn from the caller's RNG and travels at the
//! front of the ciphertext envelope: `nonce(12) ∥ ciphertext ∥ tag(16)`.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::RngCore;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use super::{counters, Digest160};

pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
pub const CIPHER_ID: &str = "chacha20poly1305/sha256-kdf";

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum CipherError {
    #[error("ciphertext failed authentication")]
    AuthFailure,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext(Vec<u8>);

impl Ciphertext {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Ciphertext(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Ciphertext({})", hex::encode(&self.0))
    }
}

fn aead_for(key: &Digest160) -> ChaCha20Poly1305 {
    let mut hasher = Sha256::new();
    hasher.update(b"l2ai/enc-key");
    hasher.update(key.as_bytes());
    let stretched = hasher.finalize();
    ChaCha20Poly1305::new(Key::from_slice(&stretched))
}

pub fn enc<R: RngCore + ?Sized>(key: &Digest160, plaintext: &[u8], rng: &mut R) -> Ciphertext {
    counters::record_enc();
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let body = aead_for(key)
        .encrypt(Nonce::from_slice(&nonce), plaintext)
        .expect("chacha20poly1305 encryption is infallible for in-memory buffers");
    let mut out = Vec::with_capacity(NONCE_LEN + body.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&body);
    Ciphertext(out)
}

pub fn dec(key: &Digest160, ct: &Ciphertext) -> Result<Vec<u8>, CipherError> {
    counters::record_dec();
    if ct.0.len() < NONCE_LEN + TAG_LEN {
        return Err(CipherError::AuthFailure);
    }
    let (nonce, body) = ct.0.split_at(NONCE_LEN);
    aead_for(key)
        .decrypt(Nonce::from_slice(nonce), body)
        .map_err(|_| CipherError::AuthFailure)
}
