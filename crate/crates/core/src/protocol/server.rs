use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::ledger::{Ledger, TokenRecord};
use crate::primitives::{
    concat_mask, dec, enc, hash, hash_concat, is_fresh, xor, Clock, Digest160, Timestamp,
};

use super::{
    card_uid_for, AuthTranscript, Msg1, Msg2, PermissionTable, ProtocolError, ProvisionalCard,
    RegRequest, Role, Scope, Token,
};

pub const DEFAULT_DELTA_T_MS: u64 = 2_000;

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub delta_t: Timestamp,
    pub perms: PermissionTable,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            delta_t: Timestamp(DEFAULT_DELTA_T_MS),
            perms: PermissionTable::default(),
        }
    }
}

/// The hospital server, which also carries out the administrator's token
/// duties.
///
/// `h(S_HMS)` and `h(ID_HMS ∥ S_HMS)` are computed once at setup and reused;
/// authentication therefore costs exactly ten hashes.
#[derive(Clone, Debug)]
pub struct Server {
    id_hms: Digest160,
    s_hms: Digest160,
    h_s: Digest160,
    h_id_s: Digest160,
    ledger: Ledger,
    perms: PermissionTable,
    clock: Clock,
    delta_t: Timestamp,
    rng: ChaCha20Rng,
}

impl Server {
    pub fn setup(seed: u64, clock: Clock, config: ServerConfig) -> Server {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let id_hms = Digest160::random(&mut rng);
        let s_hms = Digest160::random(&mut rng);
        let h_s = hash(s_hms.as_bytes());
        let h_id_s = hash_concat(&[id_hms.as_bytes(), s_hms.as_bytes()]);
        Server {
            id_hms,
            s_hms,
            h_s,
            h_id_s,
            ledger: Ledger::new(),
            perms: config.perms,
            clock,
            delta_t: config.delta_t,
            rng,
        }
    }

    pub fn id_hms(&self) -> Digest160 {
        self.id_hms
    }

    /// `S_HMS`, exposed for transcript oracles and the confinement audit.
    pub fn secret_key_for_audit(&self) -> Digest160 {
        self.s_hms
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut Ledger {
        &mut self.ledger
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn delta_t(&self) -> Timestamp {
        self.delta_t
    }

    pub fn permissions(&self) -> &PermissionTable {
        &self.perms
    }

    pub fn authorize(&self, role: Role, scope: Scope, at: Timestamp) -> bool {
        self.perms.authorize(role, scope, at)
    }

    /// Draws a fresh token and anchors `h(T_G)` and `Enc_{S_HMS}(T_G)` on the
    /// ledger. Delivery to the user happens out of band.
    pub fn issue_token(&mut self, role: Role) -> Result<Token, ProtocolError> {
        if !self.perms.contains_role(role) {
            return Err(ProtocolError::InvalidRole(role));
        }
        let t_g = Digest160::random(&mut self.rng);
        self.anchor_token(t_g, role);
        Ok(Token { t_g, role })
    }

    fn anchor_token(&mut self, t_g: Digest160, role: Role) -> Digest160 {
        let x = hash(t_g.as_bytes());
        let y = enc(&self.s_hms, t_g.as_bytes(), &mut self.rng);
        self.ledger.put_token(TokenRecord {
            x,
            role,
            y,
            revoked: false,
        });
        x
    }

    /// Server half of registration. Issues the provisional card and indexes
    /// `h(D_TID) → ID_i`.
    pub fn register(&mut self, req: &RegRequest) -> Result<ProvisionalCard, ProtocolError> {
        if !self.ledger.any_digest(&req.x) {
            return Err(ProtocolError::UnknownToken);
        }
        let record = self
            .ledger
            .token(&req.x)
            .map_err(|_| ProtocolError::UnknownToken)?;
        let plain = dec(&self.s_hms, &record.y).map_err(|_| ProtocolError::UnknownToken)?;
        let t_g = Digest160::from_slice(&plain).ok_or(ProtocolError::UnknownToken)?;

        let id = xor(req.did, hash_concat(&[req.x.as_bytes(), t_g.as_bytes()]));
        let r1 = Digest160::random(&mut self.rng);
        let d_tid = xor(id, r1);
        let ax = xor(t_g, concat_mask(d_tid, self.id_hms));
        let k = xor(
            hash_concat(&[self.s_hms.as_bytes(), id.as_bytes()]),
            req.pwd,
        );
        let eid = xor(d_tid, self.h_s);
        let hid = xor(self.h_id_s, d_tid);

        self.ledger.add_identity(hash(d_tid.as_bytes()), id);
        Ok(ProvisionalCard {
            k,
            eid,
            hid,
            r_hms: r1,
            ax,
        })
    }

    /// Verifies a login request for `scope`, derives the session key and
    /// rotates the user's pseudo-identity on the ledger.
    ///
    /// Checks run in order: freshness, ledger liveness of the pseudo-identity
    /// and token, role permission, then `M_1`. Nothing is written unless all
    /// of them pass.
    pub fn authenticate(
        &mut self,
        msg1: &Msg1,
        scope: Scope,
    ) -> Result<(Msg2, AuthTranscript), ProtocolError> {
        let now = self.clock.now();
        if !is_fresh(now, msg1.t1, self.delta_t) {
            return Err(ProtocolError::Stale);
        }

        let d_tid = xor(msg1.eid, self.h_s);
        let t_g = xor(msg1.ax, concat_mask(d_tid, self.id_hms));
        let h_dtid = hash(d_tid.as_bytes());
        let x = hash(t_g.as_bytes());
        if !(self.ledger.any_digest(&h_dtid) && self.ledger.any_digest(&x)) {
            return Err(ProtocolError::UnknownPrincipal);
        }
        let role = self
            .ledger
            .token_role(&x)
            .map_err(|_| ProtocolError::UnknownPrincipal)?;

        if !self.perms.authorize(role, scope, now) {
            return Err(ProtocolError::Unauthorized);
        }

        let id = self
            .ledger
            .get_identity(&h_dtid)
            .map_err(|_| ProtocolError::UnknownPrincipal)?;
        let c_i = hash_concat(&[self.s_hms.as_bytes(), id.as_bytes()]);
        let w1 = hash_concat(&[d_tid.as_bytes(), self.h_id_s.as_bytes()]);
        let m1 = hash_concat(&[c_i.as_bytes(), &msg1.t1.to_be_bytes(), w1.as_bytes()]);
        if m1 != msg1.m1 {
            return Err(ProtocolError::BadMac);
        }
        let card_uid = card_uid_for(&id);
        let mut card = self
            .ledger
            .get_card(&card_uid)
            .map_err(|_| ProtocolError::UnknownPrincipal)?;

        let n_s = Digest160::random(&mut self.rng);
        let t2 = now;
        let sk = hash_concat(&[w1.as_bytes(), n_s.as_bytes()]);
        let m2 = xor(sk, w1);
        let m3 = hash_concat(&[
            c_i.as_bytes(),
            &t2.to_be_bytes(),
            w1.as_bytes(),
            sk.as_bytes(),
        ]);

        let r2 = Digest160::random(&mut self.rng);
        let d_new = xor(id, r2);
        let ax_new = xor(t_g, concat_mask(d_new, self.id_hms));
        let eid_new = xor(d_new, self.h_s);
        let hid_new = xor(self.h_id_s, d_new);
        card.r_hms = r2;
        card.eid_i = eid_new;
        card.ax_ui = ax_new;
        card.hid_hms = hid_new;
        self.ledger.put_card(card);
        self.ledger
            .replace_index(h_dtid, hash(d_new.as_bytes()), id)?;

        let msg2 = Msg2 { m3, m2, t2 };
        let transcript = AuthTranscript {
            c_i,
            w1,
            m1,
            m2,
            m3,
            sk,
            n_s,
            t1: msg1.t1,
            t2,
            id,
        };
        Ok((msg2, transcript))
    }

    /// Re-issues the user's token under `role` and revokes the old one. The
    /// card's `AX_ui` is rebound to the new token; the pseudo-identity is
    /// unchanged.
    pub fn update_authorization(
        &mut self,
        id: &Digest160,
        role: Role,
    ) -> Result<Token, ProtocolError> {
        let live_h = self.ledger.live_index_for(id)?;
        if !self.perms.contains_role(role) {
            return Err(ProtocolError::InvalidRole(role));
        }
        let mut card = self.ledger.get_card(&card_uid_for(id))?;
        let d_tid = xor(card.eid_i, self.h_s);
        if hash(d_tid.as_bytes()) != live_h {
            return Err(ProtocolError::NotFound);
        }
        let mask = concat_mask(d_tid, self.id_hms);
        let old_x = hash(xor(card.ax_ui, mask).as_bytes());

        let t_new = Digest160::random(&mut self.rng);
        self.anchor_token(t_new, role);
        let ax_new = xor(t_new, mask);
        if self.ledger.any_digest(&old_x) {
            self.ledger.revoke_token(&old_x)?;
        }
        card.ax_ui = ax_new;
        self.ledger.put_card(card);
        Ok(Token { t_g: t_new, role })
    }
}
