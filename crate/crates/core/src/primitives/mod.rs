//! Fixed-width primitives shared by every protocol entity.

pub mod cipher;
mod clock;
pub mod counters;
mod digest;
pub mod fuzzy;

pub use cipher::{dec, enc, CipherError, Ciphertext};
pub use clock::{is_fresh, Clock, Timestamp};
pub use counters::OpCounters;
pub use digest::{concat_mask, hash, hash_concat, xor, Digest160, DIGEST_LEN};
pub use fuzzy::{fe_gen, fe_rep, BioTemplate, FuzzyError, HelperData};

pub(crate) use digest::sha256_160;

pub const HASH_ID: &str = "sha256-trunc160";
