use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::ledger::{BlockAddress, Ledger};
use crate::primitives::{
    dec, enc, fe_gen, fe_rep, hash, hash_concat, is_fresh, sha256_160, xor, Ciphertext, Clock,
    Digest160, HelperData, Timestamp,
};

use super::{
    card_uid_for, Credentials, Msg1, Msg2, ProtocolError, ProvisionalCard, RegRequest, SmartCard,
    Token,
};

/// User-local values carried from the registration request to card
/// finalisation. The token itself is not kept.
#[derive(Clone, Debug)]
pub struct RegScratch {
    pub id: Digest160,
    pub sigma: Digest160,
    pub b: Digest160,
    pub pwd: Digest160,
    pub tau: HelperData,
}

/// State kept between sending `Msg1` and receiving `Msg2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UserSession {
    pub c_i: Digest160,
    pub w1: Digest160,
    pub m1: Digest160,
    pub t1: Timestamp,
    pub d_tid: Digest160,
}

/// The user's smart gateway / mobile terminal.
///
/// Holds the block address of the user's card sealed under a device-local
/// key; the card itself lives on the ledger.
#[derive(Clone, Debug)]
pub struct Gateway {
    clock: Clock,
    delta_t: Timestamp,
    rng: ChaCha20Rng,
    device_key: Digest160,
    sealed_address: Option<Ciphertext>,
}

/// Values recovered by a successful local check.
struct Verified {
    pwd: Digest160,
    k: Digest160,
    d_tid: Digest160,
}

impl Gateway {
    pub fn new(seed: u64, clock: Clock, delta_t: Timestamp) -> Gateway {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let device_seed = Digest160::random(&mut rng);
        Gateway {
            clock,
            delta_t,
            rng,
            device_key: sha256_160(&[b"l2ai/device-key", device_seed.as_bytes()]),
            sealed_address: None,
        }
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn has_card(&self) -> bool {
        self.sealed_address.is_some()
    }

    pub fn register_request(
        &mut self,
        creds: &Credentials,
        token: &Token,
    ) -> (RegRequest, RegScratch) {
        let (sigma, tau) = fe_gen(&creds.bio, &mut self.rng);
        let b = hash(sigma.as_bytes());
        let x = hash(token.t_g.as_bytes());
        let pwd = hash_concat(&[&creds.pw, b.as_bytes()]);
        let did = xor(creds.id, hash_concat(&[x.as_bytes(), token.t_g.as_bytes()]));
        (
            RegRequest { x, did, pwd },
            RegScratch {
                id: creds.id,
                sigma,
                b,
                pwd,
                tau,
            },
        )
    }

    /// Completes the card from the server's provisional card, drops `K_i`,
    /// stores the card on the ledger and keeps its sealed address.
    pub fn finalize_card(
        &mut self,
        prov: &ProvisionalCard,
        scratch: RegScratch,
        ledger: &mut Ledger,
    ) -> (SmartCard, BlockAddress) {
        let _d_tid = xor(scratch.id, prov.r_hms);
        let e_i = xor(
            prov.k,
            hash_concat(&[scratch.pwd.as_bytes(), scratch.b.as_bytes()]),
        );
        let f_i = hash(xor(xor(scratch.pwd, prov.k), scratch.b).as_bytes());
        let card = SmartCard {
            e_i,
            f_i,
            eid_i: prov.eid,
            r_hms: prov.r_hms,
            hid_hms: prov.hid,
            ax_ui: prov.ax,
            tau: scratch.tau,
            card_uid: card_uid_for(&scratch.id),
        };
        let address = ledger.put_card(card);
        self.sealed_address = Some(enc(&self.device_key, &address.to_bytes(), &mut self.rng));
        (card, address)
    }

    /// Fetches the live card through the sealed block address.
    pub fn load_card(&self, ledger: &Ledger) -> Result<SmartCard, ProtocolError> {
        let sealed = self
            .sealed_address
            .as_ref()
            .ok_or(ProtocolError::NotFound)?;
        let plain = dec(&self.device_key, sealed).map_err(|_| ProtocolError::NotFound)?;
        let address = BlockAddress::from_bytes(&plain).ok_or(ProtocolError::NotFound)?;
        Ok(ledger.get_card(&address.card_uid)?)
    }

    fn check_local(
        &self,
        creds: &Credentials,
        card: &SmartCard,
    ) -> Result<Verified, ProtocolError> {
        let sigma = fe_rep(&creds.bio, &card.tau).map_err(|_| ProtocolError::LocalVerifyFailed)?;
        let b = hash(sigma.as_bytes());
        let pwd = hash_concat(&[&creds.pw, b.as_bytes()]);
        let d_tid = xor(creds.id, card.r_hms);
        let k = xor(card.e_i, hash_concat(&[pwd.as_bytes(), b.as_bytes()]));
        let f = hash(xor(xor(pwd, k), b).as_bytes());
        if f != card.f_i {
            return Err(ProtocolError::LocalVerifyFailed);
        }
        Ok(Verified { pwd, k, d_tid })
    }

    /// Local three-factor check followed by construction of `Msg1`.
    ///
    /// The identity does not enter `F_i`, so a wrong identity passes the local
    /// check and is rejected by the server's `M_1` comparison instead.
    pub fn login(
        &self,
        creds: &Credentials,
        card: &SmartCard,
    ) -> Result<(Msg1, UserSession), ProtocolError> {
        let v = self.check_local(creds, card)?;
        let c_i = xor(v.k, v.pwd);
        let h_id_s = xor(card.hid_hms, v.d_tid);
        let w1 = hash_concat(&[v.d_tid.as_bytes(), h_id_s.as_bytes()]);
        let t1 = self.clock.now();
        let m1 = hash_concat(&[c_i.as_bytes(), &t1.to_be_bytes(), w1.as_bytes()]);
        let msg = Msg1 {
            t1,
            m1,
            eid: card.eid_i,
            ax: card.ax_ui,
        };
        Ok((
            msg,
            UserSession {
                c_i,
                w1,
                m1,
                t1,
                d_tid: v.d_tid,
            },
        ))
    }

    /// Authenticates the server and returns the session key.
    pub fn verify(&self, session: &UserSession, msg2: &Msg2) -> Result<Digest160, ProtocolError> {
        if !is_fresh(self.clock.now(), msg2.t2, self.delta_t) {
            return Err(ProtocolError::Stale);
        }
        let sk = xor(msg2.m2, session.w1);
        let m3 = hash_concat(&[
            session.c_i.as_bytes(),
            &msg2.t2.to_be_bytes(),
            session.w1.as_bytes(),
            sk.as_bytes(),
        ]);
        if m3 != msg2.m3 {
            return Err(ProtocolError::BadMac);
        }
        Ok(sk)
    }

    /// Replaces password and/or biometric without contacting the server.
    ///
    /// `K_i` is rebound as `K_new = K_old ⊕ PWD_old ⊕ PWD_new` so that
    /// `C_i = K ⊕ PWD = h(S_HMS ∥ ID_i)` is unchanged; `new.id` must equal
    /// `old.id`.
    pub fn update_credentials(
        &mut self,
        old: &Credentials,
        new: &Credentials,
        card: &SmartCard,
        ledger: &mut Ledger,
    ) -> Result<SmartCard, ProtocolError> {
        if new.id != old.id {
            return Err(ProtocolError::LocalVerifyFailed);
        }
        let v = self.check_local(old, card)?;
        let (sigma_new, tau_new) = fe_gen(&new.bio, &mut self.rng);
        let b_new = hash(sigma_new.as_bytes());
        let pwd_new = hash_concat(&[&new.pw, b_new.as_bytes()]);
        let k_new = xor(xor(v.k, v.pwd), pwd_new);
        let e_new = xor(k_new, hash_concat(&[pwd_new.as_bytes(), b_new.as_bytes()]));
        let f_new = hash(xor(xor(pwd_new, k_new), b_new).as_bytes());
        let mut updated = *card;
        updated.e_i = e_new;
        updated.f_i = f_new;
        updated.tau = tau_new;
        ledger.put_card(updated);
        Ok(updated)
    }
}
