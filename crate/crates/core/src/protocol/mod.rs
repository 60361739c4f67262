//! Hospital server and user gateway state machines.
//!
//! Registration, login, authentication with key exchange, local credential
//! update and token re-issue. Every protocol-level hash and XOR goes through
//! the metered primitives so phase costs can be read off
//! [`crate::primitives::counters`].

mod messages;
mod perm;
mod server;
mod user;

use thiserror::Error;

use crate::ledger::LedgerError;
use crate::primitives::{sha256_160, BioTemplate, Digest160};

pub use messages::{AuthTranscript, Msg1, Msg2, ProvisionalCard, RegRequest, SmartCard, WireError};
pub use perm::{
    PermTableError, PermissionTable, Role, RolePermissions, Scope, ScopeSet, TimeWindow,
    UnknownRole, UnknownScope, DEFAULT_PERMISSIONS,
};
pub use server::{Server, ServerConfig, DEFAULT_DELTA_T_MS};
pub use user::{Gateway, RegScratch, UserSession};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("role {0} is not in the permission table")]
    InvalidRole(Role),
    #[error("registration token is not on the ledger")]
    UnknownToken,
    #[error("local credential check failed")]
    LocalVerifyFailed,
    #[error("timestamp outside the freshness window")]
    Stale,
    #[error("pseudo-identity or token is not live on the ledger")]
    UnknownPrincipal,
    #[error("role is not permitted for the requested scope")]
    Unauthorized,
    #[error("message authenticator mismatch")]
    BadMac,
    #[error("no live ledger entry")]
    NotFound,
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("ledger: {0}")]
    Ledger(LedgerError),
}

impl From<LedgerError> for ProtocolError {
    fn from(e: LedgerError) -> Self {
        match e {
            LedgerError::NotFound => ProtocolError::NotFound,
            other => ProtocolError::Ledger(other),
        }
    }
}

impl ProtocolError {
    /// Short kebab-case name used in logs, scenario expectations and reports.
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::InvalidRole(_) => "invalid-role",
            ProtocolError::UnknownToken => "unknown-token",
            ProtocolError::LocalVerifyFailed => "local-verify-failed",
            ProtocolError::Stale => "stale",
            ProtocolError::UnknownPrincipal => "unknown-principal",
            ProtocolError::Unauthorized => "unauthorized",
            ProtocolError::BadMac => "bad-mac",
            ProtocolError::NotFound => "not-found",
            ProtocolError::Wire(_) => "malformed",
            ProtocolError::Ledger(_) => "ledger-error",
        }
    }
}

/// What the user types and presents: identity, password, biometric reading.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Credentials {
    pub id: Digest160,
    pub pw: Vec<u8>,
    pub bio: BioTemplate,
}

/// An authorization token `T_G` and the group it was issued for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Token {
    pub t_g: Digest160,
    pub role: Role,
}

/// Stable ledger key for a user's card. Not metered: it is ledger
/// addressing, not a protocol computation.
pub fn card_uid_for(id: &Digest160) -> Digest160 {
    sha256_160(&[b"l2ai/card-uid", id.as_bytes()])
}

#[cfg(test)]
mod tests;
