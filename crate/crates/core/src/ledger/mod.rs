//! Single-writer, append-only, hash-chained private ledger.
//!
//! ```text
//! block_digest_k = h(height_k ∥ prev_digest_k ∥ payload_k)
//! prev_digest_0  = 0^160,  prev_digest_k = block_digest_{k-1}
//! ```
//!
//! Nothing is ever rewritten. Revocation and supersession are new blocks
//! carrying marker fields; the lookup index is derived state rebuilt from the
//! blocks.

mod record;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::primitives::{sha256_160, Digest160};
use crate::protocol::{Role, SmartCard};

pub use record::{CardRecord, IdentityIndex, Record, RecordKind, TokenRecord};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("no live ledger entry for the requested key")]
    NotFound,
    #[error("malformed record: {0}")]
    Malformed(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerBlock {
    pub height: u64,
    pub prev_digest: Digest160,
    /// Serialized [`Record`].
    pub payload: Vec<u8>,
    pub block_digest: Digest160,
}

impl LedgerBlock {
    pub fn compute_digest(height: u64, prev: &Digest160, payload: &[u8]) -> Digest160 {
        sha256_160(&[&height.to_be_bytes(), prev.as_bytes(), payload])
    }

    pub fn record(&self) -> Result<Record, LedgerError> {
        Record::from_bytes(&self.payload)
    }
}

/// Location of a block. `card_uid` is zero for non-card records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockAddress {
    pub height: u64,
    pub card_uid: Digest160,
}

impl BlockAddress {
    pub const ENCODED_LEN: usize = 8 + 20;

    pub fn to_bytes(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[..8].copy_from_slice(&self.height.to_be_bytes());
        out[8..].copy_from_slice(self.card_uid.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != Self::ENCODED_LEN {
            return None;
        }
        Some(BlockAddress {
            height: u64::from_be_bytes(bytes[..8].try_into().ok()?),
            card_uid: Digest160::from_slice(&bytes[8..])?,
        })
    }
}

#[derive(Clone, Copy, Debug)]
struct TokenEntry {
    height: u64,
    revoked: bool,
}

#[derive(Clone, Copy, Debug)]
struct IdentityEntry {
    id: Digest160,
    live: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Ledger {
    blocks: Vec<LedgerBlock>,
    tokens: HashMap<Digest160, TokenEntry>,
    identities: HashMap<Digest160, IdentityEntry>,
    live_by_id: HashMap<Digest160, Digest160>,
    cards: HashMap<Digest160, u64>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adopts blocks as-is, without verifying them, and derives the lookup
    /// index from every payload that decodes.
    pub fn from_blocks(blocks: Vec<LedgerBlock>) -> Self {
        let mut ledger = Ledger {
            blocks,
            ..Ledger::default()
        };
        for k in 0..ledger.blocks.len() {
            if let Ok(rec) = ledger.blocks[k].record() {
                ledger.index(&rec, k as u64);
            }
        }
        ledger
    }

    pub fn blocks(&self) -> &[LedgerBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn head_digest(&self) -> Digest160 {
        self.blocks
            .last()
            .map_or(Digest160::ZERO, |b| b.block_digest)
    }

    pub fn append(&mut self, record: Record) -> BlockAddress {
        let height = self.blocks.len() as u64;
        let prev_digest = self.head_digest();
        let payload = record.to_bytes();
        let block_digest = LedgerBlock::compute_digest(height, &prev_digest, &payload);
        self.blocks.push(LedgerBlock {
            height,
            prev_digest,
            payload,
            block_digest,
        });
        self.index(&record, height);
        let card_uid = match &record {
            Record::Card(c) => c.card.card_uid,
            _ => Digest160::ZERO,
        };
        BlockAddress { height, card_uid }
    }

    fn index(&mut self, record: &Record, height: u64) {
        match record {
            Record::Token(t) => {
                self.tokens.insert(
                    t.x,
                    TokenEntry {
                        height,
                        revoked: t.revoked,
                    },
                );
            }
            Record::Identity(i) => match i.superseded_by {
                Some(_) => {
                    if let Some(e) = self.identities.get_mut(&i.h_dtid) {
                        e.live = false;
                    }
                    if self.live_by_id.get(&i.id) == Some(&i.h_dtid) {
                        self.live_by_id.remove(&i.id);
                    }
                }
                None => {
                    self.identities.insert(
                        i.h_dtid,
                        IdentityEntry {
                            id: i.id,
                            live: true,
                        },
                    );
                    self.live_by_id.insert(i.id, i.h_dtid);
                }
            },
            Record::Card(c) => {
                self.cards.insert(c.card.card_uid, height);
            }
        }
    }

    /// True iff a live token digest or live pseudo-identity hash equals `x`.
    pub fn any_digest(&self, x: &Digest160) -> bool {
        self.tokens.get(x).is_some_and(|t| !t.revoked)
            || self.identities.get(x).is_some_and(|i| i.live)
    }

    pub fn put_token(&mut self, record: TokenRecord) -> BlockAddress {
        self.append(Record::Token(record))
    }

    /// The live token record for `x`.
    pub fn token(&self, x: &Digest160) -> Result<TokenRecord, LedgerError> {
        let entry = self
            .tokens
            .get(x)
            .filter(|t| !t.revoked)
            .ok_or(LedgerError::NotFound)?;
        match self.blocks[entry.height as usize].record()? {
            Record::Token(t) => Ok(t),
            _ => Err(LedgerError::Malformed("token index points at another kind")),
        }
    }

    pub fn token_role(&self, x: &Digest160) -> Result<Role, LedgerError> {
        self.token(x).map(|t| t.role)
    }

    pub fn revoke_token(&mut self, x: &Digest160) -> Result<BlockAddress, LedgerError> {
        let mut rec = self.token(x)?;
        rec.revoked = true;
        Ok(self.append(Record::Token(rec)))
    }

    /// Adds a live index `h_dtid → id`. Any live index already held by `id`
    /// is superseded first.
    pub fn add_identity(&mut self, h_dtid: Digest160, id: Digest160) -> BlockAddress {
        if let Some(old) = self.live_by_id.get(&id).copied() {
            self.append(Record::Identity(IdentityIndex {
                h_dtid: old,
                id,
                superseded_by: Some(h_dtid),
            }));
        }
        self.append(Record::Identity(IdentityIndex {
            h_dtid,
            id,
            superseded_by: None,
        }))
    }

    pub fn get_identity(&self, h_dtid: &Digest160) -> Result<Digest160, LedgerError> {
        self.identities
            .get(h_dtid)
            .filter(|e| e.live)
            .map(|e| e.id)
            .ok_or(LedgerError::NotFound)
    }

    pub fn live_index_for(&self, id: &Digest160) -> Result<Digest160, LedgerError> {
        self.live_by_id
            .get(id)
            .copied()
            .ok_or(LedgerError::NotFound)
    }

    pub fn replace_index(
        &mut self,
        old_h: Digest160,
        new_h: Digest160,
        id: Digest160,
    ) -> Result<BlockAddress, LedgerError> {
        match self.identities.get(&old_h) {
            Some(e) if e.live && e.id == id => {}
            _ => return Err(LedgerError::NotFound),
        }
        self.append(Record::Identity(IdentityIndex {
            h_dtid: old_h,
            id,
            superseded_by: Some(new_h),
        }));
        Ok(self.append(Record::Identity(IdentityIndex {
            h_dtid: new_h,
            id,
            superseded_by: None,
        })))
    }

    pub fn put_card(&mut self, card: SmartCard) -> BlockAddress {
        let supersedes = self.cards.get(&card.card_uid).copied();
        self.append(Record::Card(CardRecord { card, supersedes }))
    }

    pub fn get_card(&self, card_uid: &Digest160) -> Result<SmartCard, LedgerError> {
        let height = *self.cards.get(card_uid).ok_or(LedgerError::NotFound)?;
        match self.blocks[height as usize].record()? {
            Record::Card(c) => Ok(c.card),
            _ => Err(LedgerError::Malformed("card index points at another kind")),
        }
    }

    pub fn verify_chain(&self) -> bool {
        let mut prev = Digest160::ZERO;
        for (k, block) in self.blocks.iter().enumerate() {
            if block.height != k as u64
                || block.prev_digest != prev
                || block.block_digest
                    != LedgerBlock::compute_digest(block.height, &block.prev_digest, &block.payload)
            {
                return false;
            }
            prev = block.block_digest;
        }
        true
    }

    /// One block per line: `height prev_digest kind payload block_digest`,
    /// all hex except `kind`, which is the record kind name. The payload
    /// column is the record body without its kind tag.
    pub fn export<W: Write>(&self, mut out: W) -> Result<(), LedgerError> {
        for b in &self.blocks {
            let (kind, body) = match b.payload.split_first() {
                Some((tag, body)) => (
                    RecordKind::from_tag(*tag).map_or("unknown", |k| k.name()),
                    body,
                ),
                None => ("unknown", &[][..]),
            };
            writeln!(
                out,
                "{:016x} {} {} {} {}",
                b.height,
                b.prev_digest,
                kind,
                hex::encode(body),
                b.block_digest
            )?;
        }
        Ok(())
    }

    pub fn export_string(&self) -> String {
        let mut buf = Vec::new();
        self.export(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("export is ASCII")
    }

    /// Parses an exported chain. The result is not verified; call
    /// [`Ledger::verify_chain`].
    pub fn import<R: BufRead>(input: R) -> Result<Ledger, LedgerError> {
        let mut blocks = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: &str| LedgerError::Parse {
                line: line_no,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(err("expected 5 fields"));
            }
            let height = u64::from_str_radix(fields[0], 16).map_err(|_| err("bad height"))?;
            let prev_digest: Digest160 = fields[1].parse().map_err(|_| err("bad prev digest"))?;
            let kind =
                RecordKind::from_name(fields[2]).ok_or_else(|| err("unknown record kind"))?;
            let mut payload = vec![kind.tag()];
            payload.extend(hex::decode(fields[3]).map_err(|_| err("bad payload hex"))?);
            let block_digest: Digest160 = fields[4].parse().map_err(|_| err("bad block digest"))?;
            blocks.push(LedgerBlock {
                height,
                prev_digest,
                payload,
                block_digest,
            });
        }
        Ok(Ledger::from_blocks(blocks))
    }

    /// Iterates over every decodable record with its height.
    pub fn records(&self) -> impl Iterator<Item = (u64, Record)> + '_ {
        self.blocks
            .iter()
            .filter_map(|b| b.record().ok().map(|r| (b.height, r)))
    }
}

#[cfg(test)]
mod tests;
