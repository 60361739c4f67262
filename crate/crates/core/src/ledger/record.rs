use crate::primitives::{Ciphertext, Digest160, DIGEST_LEN};
use crate::protocol::{Role, SmartCard};

use super::LedgerError;

const TAG_TOKEN: u8 = 0x01;
const TAG_IDENTITY: u8 = 0x02;
const TAG_CARD: u8 = 0x03;

/// Token digest and its server-encrypted form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenRecord {
    /// `X = h(T_G)`.
    pub x: Digest160,
    pub role: Role,
    /// `Enc_{S_HMS}(T_G)`.
    pub y: Ciphertext,
    pub revoked: bool,
}

/// Maps a pseudo-identity hash to the real identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityIndex {
    pub h_dtid: Digest160,
    pub id: Digest160,
    pub superseded_by: Option<Digest160>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CardRecord {
    pub card: SmartCard,
    /// Height of the card record this one replaces.
    pub supersedes: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Token(TokenRecord),
    Identity(IdentityIndex),
    Card(CardRecord),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordKind {
    Token,
    Identity,
    Card,
}

impl RecordKind {
    pub fn name(self) -> &'static str {
        match self {
            RecordKind::Token => "token",
            RecordKind::Identity => "identity",
            RecordKind::Card => "card",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            RecordKind::Token => TAG_TOKEN,
            RecordKind::Identity => TAG_IDENTITY,
            RecordKind::Card => TAG_CARD,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            TAG_TOKEN => Some(RecordKind::Token),
            TAG_IDENTITY => Some(RecordKind::Identity),
            TAG_CARD => Some(RecordKind::Card),
            _ => None,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [RecordKind::Token, RecordKind::Identity, RecordKind::Card]
            .into_iter()
            .find(|k| k.name() == name)
    }
}

fn flag(b: u8) -> Result<bool, LedgerError> {
    match b {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(LedgerError::Malformed("flag byte")),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LedgerError> {
        if self.bytes.len() < n {
            return Err(LedgerError::Malformed("truncated record"));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn byte(&mut self) -> Result<u8, LedgerError> {
        Ok(self.take(1)?[0])
    }

    fn digest(&mut self) -> Result<Digest160, LedgerError> {
        Ok(Digest160::from_slice(self.take(DIGEST_LEN)?).expect("sized take"))
    }

    fn finish(self) -> Result<(), LedgerError> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(LedgerError::Malformed("trailing bytes"))
        }
    }
}

impl Record {
    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Token(_) => RecordKind::Token,
            Record::Identity(_) => RecordKind::Identity,
            Record::Card(_) => RecordKind::Card,
        }
    }

    /// Kind tag followed by the fixed-width fields in declaration order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.kind().tag()];
        match self {
            Record::Token(t) => {
                out.extend_from_slice(t.x.as_bytes());
                out.push(t.role.to_byte());
                out.push(t.revoked as u8);
                let len = u16::try_from(t.y.len()).expect("token ciphertext fits u16");
                out.extend_from_slice(&len.to_be_bytes());
                out.extend_from_slice(t.y.as_bytes());
            }
            Record::Identity(i) => {
                out.extend_from_slice(i.h_dtid.as_bytes());
                out.extend_from_slice(i.id.as_bytes());
                out.push(i.superseded_by.is_some() as u8);
                out.extend_from_slice(i.superseded_by.unwrap_or(Digest160::ZERO).as_bytes());
            }
            Record::Card(c) => {
                out.extend_from_slice(&c.card.to_bytes());
                out.push(c.supersedes.is_some() as u8);
                out.extend_from_slice(&c.supersedes.unwrap_or(0).to_be_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Record, LedgerError> {
        let mut r = Reader { bytes };
        let kind = RecordKind::from_tag(r.byte()?).ok_or(LedgerError::Malformed("record tag"))?;
        let record = match kind {
            RecordKind::Token => {
                let x = r.digest()?;
                let role = Role::from_byte(r.byte()?).ok_or(LedgerError::Malformed("role byte"))?;
                let revoked = flag(r.byte()?)?;
                let len = u16::from_be_bytes(r.take(2)?.try_into().expect("sized take"));
                let y = Ciphertext::from_bytes(r.take(len as usize)?.to_vec());
                Record::Token(TokenRecord {
                    x,
                    role,
                    y,
                    revoked,
                })
            }
            RecordKind::Identity => {
                let h_dtid = r.digest()?;
                let id = r.digest()?;
                let has = flag(r.byte()?)?;
                let next = r.digest()?;
                if !has && next != Digest160::ZERO {
                    return Err(LedgerError::Malformed("unset marker with data"));
                }
                Record::Identity(IdentityIndex {
                    h_dtid,
                    id,
                    superseded_by: has.then_some(next),
                })
            }
            RecordKind::Card => {
                let card = SmartCard::from_bytes(r.take(SmartCard::ENCODED_LEN)?)
                    .map_err(|_| LedgerError::Malformed("card body"))?;
                let has = flag(r.byte()?)?;
                let height = u64::from_be_bytes(r.take(8)?.try_into().expect("sized take"));
                if !has && height != 0 {
                    return Err(LedgerError::Malformed("unset marker with data"));
                }
                Record::Card(CardRecord {
                    card,
                    supersedes: has.then_some(height),
                })
            }
        };
        r.finish()?;
        Ok(record)
    }
}
