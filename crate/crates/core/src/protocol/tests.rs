use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::primitives::{counters, dec, hash, hash_concat, BioTemplate, Clock};

struct Fixture {
    server: Server,
    gw: Gateway,
    creds: Credentials,
    clock: Clock,
}

fn creds(rng: &mut ChaCha20Rng) -> Credentials {
    Credentials {
        id: Digest160::random(rng),
        pw: b"correct horse".to_vec(),
        bio: BioTemplate::random(rng),
    }
}

fn registered(seed: u64, role: Role) -> Fixture {
    let clock = Clock::new();
    let mut server = Server::setup(seed, clock.clone(), ServerConfig::default());
    let mut gw = Gateway::new(seed ^ 0xa5a5, clock.clone(), server.delta_t());
    let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(1));
    let creds = creds(&mut rng);
    let token = server.issue_token(role).unwrap();
    let (req, scratch) = gw.register_request(&creds, &token);
    let prov = server.register(&req).unwrap();
    gw.finalize_card(&prov, scratch, server.ledger_mut());
    Fixture {
        server,
        gw,
        creds,
        clock,
    }
}

impl Fixture {
    fn card(&self) -> SmartCard {
        self.gw.load_card(self.server.ledger()).unwrap()
    }

    fn login(&self) -> (Msg1, UserSession) {
        self.gw.login(&self.creds, &self.card()).unwrap()
    }

    /// Full exchange with 50 ms of network delay each way.
    fn session(&mut self, scope: Scope) -> Result<(Digest160, AuthTranscript), ProtocolError> {
        let (m1, sess) = self.login();
        self.clock.advance(50);
        let (m2, tr) = self.server.authenticate(&m1, scope)?;
        self.clock.advance(50);
        let sk = self.gw.verify(&sess, &m2)?;
        Ok((sk, tr))
    }
}

#[test]
fn setup_is_seed_deterministic() {
    let a = Server::setup(9, Clock::new(), ServerConfig::default());
    let b = Server::setup(9, Clock::new(), ServerConfig::default());
    assert_eq!(a.id_hms(), b.id_hms());
    assert_eq!(a.secret_key_for_audit(), b.secret_key_for_audit());
    let keys: HashSet<_> = (0..100)
        .map(|s| Server::setup(s, Clock::new(), ServerConfig::default()).secret_key_for_audit())
        .collect();
    assert_eq!(keys.len(), 100);
    assert_eq!(a.permissions().len(), 8);
}

#[test]
fn issued_token_is_anchored() {
    let mut server = Server::setup(1, Clock::new(), ServerConfig::default());
    let t = server.issue_token(Role::Nurse).unwrap();
    let x = hash(t.t_g.as_bytes());
    assert!(server.ledger().any_digest(&x));
    let rec = server.ledger().token(&x).unwrap();
    assert_eq!(rec.role, Role::Nurse);
    assert_eq!(
        dec(&server.secret_key_for_audit(), &rec.y).unwrap(),
        t.t_g.as_bytes()
    );
    let all: HashSet<_> = (0..100)
        .map(|_| server.issue_token(Role::Doctor).unwrap().t_g)
        .collect();
    assert_eq!(all.len(), 100);
}

#[test]
fn issue_rejects_role_missing_from_table() {
    let config = ServerConfig {
        perms: PermissionTable::parse("D read-patient-vitals").unwrap(),
        ..ServerConfig::default()
    };
    let mut server = Server::setup(1, Clock::new(), config);
    assert!(matches!(
        server.issue_token(Role::Nurse),
        Err(ProtocolError::InvalidRole(Role::Nurse))
    ));
}

#[test]
fn registration_request_inverts_on_server() {
    let mut server = Server::setup(2, Clock::new(), ServerConfig::default());
    let mut gw = Gateway::new(3, Clock::new(), server.delta_t());
    let c = creds(&mut ChaCha20Rng::seed_from_u64(4));
    let token = server.issue_token(Role::Doctor).unwrap();
    let (req, _) = gw.register_request(&c, &token);
    assert_eq!(
        req.did ^ hash_concat(&[req.x.as_bytes(), token.t_g.as_bytes()]),
        c.id
    );
    assert!(server.ledger().token(&req.x).is_ok());
}

#[test]
fn server_register_rejects_unknown_token() {
    let mut server = Server::setup(2, Clock::new(), ServerConfig::default());
    let mut gw = Gateway::new(3, Clock::new(), server.delta_t());
    let c = creds(&mut ChaCha20Rng::seed_from_u64(4));
    let bogus = Token {
        t_g: Digest160::from_bytes([1; 20]),
        role: Role::Doctor,
    };
    let (req, _) = gw.register_request(&c, &bogus);
    assert!(matches!(
        server.register(&req),
        Err(ProtocolError::UnknownToken)
    ));
}

#[test]
fn provisional_card_relations() {
    let mut server = Server::setup(5, Clock::new(), ServerConfig::default());
    let mut gw = Gateway::new(6, Clock::new(), server.delta_t());
    let c = creds(&mut ChaCha20Rng::seed_from_u64(7));
    let token = server.issue_token(Role::Doctor).unwrap();
    let (req, scratch) = gw.register_request(&c, &token);
    let prov = server.register(&req).unwrap();
    let s = server.secret_key_for_audit();
    let d_tid = c.id ^ prov.r_hms;
    assert_eq!(prov.eid ^ hash(s.as_bytes()), d_tid);
    assert_eq!(
        prov.hid ^ d_tid,
        hash_concat(&[server.id_hms().as_bytes(), s.as_bytes()])
    );
    assert_eq!(
        server
            .ledger()
            .get_identity(&hash(d_tid.as_bytes()))
            .unwrap(),
        c.id
    );

    let (card, addr) = gw.finalize_card(&prov, scratch.clone(), server.ledger_mut());
    let k = card.e_i ^ hash_concat(&[scratch.pwd.as_bytes(), scratch.b.as_bytes()]);
    assert_eq!(k, prov.k);
    assert_eq!(card.f_i, hash((scratch.pwd ^ k ^ scratch.b).as_bytes()));
    assert_eq!(server.ledger().get_card(&addr.card_uid).unwrap(), card);
    assert_eq!(gw.load_card(server.ledger()).unwrap(), card);
}

#[test]
fn honest_session_agrees_on_key() {
    let mut f = registered(10, Role::Doctor);
    let (m1, sess) = f.login();
    let s = f.server.secret_key_for_audit();
    assert_eq!(
        sess.c_i,
        hash_concat(&[s.as_bytes(), f.creds.id.as_bytes()])
    );
    f.clock.advance(50);
    let (m2, tr) = f
        .server
        .authenticate(&m1, Scope::ReadPatientVitals)
        .unwrap();
    assert_eq!(tr.c_i, sess.c_i);
    assert_eq!(tr.w1, sess.w1);
    assert_eq!(tr.sk, hash_concat(&[tr.w1.as_bytes(), tr.n_s.as_bytes()]));
    f.clock.advance(50);
    let sk = f.gw.verify(&sess, &m2).unwrap();
    assert_eq!(sk, tr.sk);
    assert_eq!(sk, m2.m2 ^ sess.w1);
}

#[test]
fn wrong_password_or_bio_fails_locally() {
    let f = registered(11, Role::Doctor);
    let card = f.card();
    let mut bad = f.creds.clone();
    bad.pw = b"wrong".to_vec();
    assert!(matches!(
        f.gw.login(&bad, &card),
        Err(ProtocolError::LocalVerifyFailed)
    ));
    let mut noisy = f.creds.clone();
    noisy.bio = noisy.bio.with_flips(&[0, 1, 2]);
    assert!(matches!(
        f.gw.login(&noisy, &card),
        Err(ProtocolError::LocalVerifyFailed)
    ));
}

#[test]
fn noisy_bio_within_tolerance_logs_in() {
    let mut f = registered(12, Role::Doctor);
    let clean = f.creds.clone();
    // two flips in every 5-bit block
    let flips: Vec<usize> = (0..51).flat_map(|b| [b * 5, b * 5 + 3]).collect();
    f.creds.bio = clean.bio.with_flips(&flips);
    assert!(f.session(Scope::ReadPatientVitals).is_ok());
}

#[test]
fn wrong_identity_is_caught_by_server_mac() {
    let mut f = registered(13, Role::Doctor);
    f.creds.id = Digest160::from_bytes([9; 20]);
    assert!(matches!(
        f.session(Scope::ReadPatientVitals),
        Err(ProtocolError::BadMac)
    ));
}

#[test]
fn stale_msg1_is_rejected() {
    let mut f = registered(14, Role::Doctor);
    let (m1, _) = f.login();
    f.clock.advance(f.server.delta_t().millis() + 1);
    assert!(matches!(
        f.server.authenticate(&m1, Scope::ReadPatientVitals),
        Err(ProtocolError::Stale)
    ));
}

#[test]
fn every_m1_bit_flip_is_bad_mac() {
    let mut f = registered(15, Role::Doctor);
    let (m1, _) = f.login();
    f.clock.advance(50);
    let before = f.server.ledger().len();
    for bit in 0..160 {
        let mut tampered = m1;
        tampered.m1 = m1.m1.with_bit_flipped(bit);
        assert!(matches!(
            f.server.authenticate(&tampered, Scope::ReadPatientVitals),
            Err(ProtocolError::BadMac)
        ));
    }
    assert_eq!(f.server.ledger().len(), before, "rejections must not write");
}

#[test]
fn rekeying_rotates_card_and_index() {
    let mut f = registered(16, Role::Doctor);
    let old = f.card();
    let (m1, _) = f.login();
    f.clock.advance(50);
    f.server
        .authenticate(&m1, Scope::ReadPatientVitals)
        .unwrap();
    let new = f.card();
    assert_ne!(new.eid_i, old.eid_i);
    assert_ne!(new.ax_ui, old.ax_ui);
    assert_ne!(new.hid_hms, old.hid_hms);
    assert_ne!(new.r_hms, old.r_hms);
    assert_eq!((new.e_i, new.f_i, new.tau), (old.e_i, old.f_i, old.tau));
    let s = f.server.secret_key_for_audit();
    let old_d = old.eid_i ^ hash(s.as_bytes());
    let new_d = f.creds.id ^ new.r_hms;
    assert!(!f.server.ledger().any_digest(&hash(old_d.as_bytes())));
    assert_eq!(
        f.server
            .ledger()
            .get_identity(&hash(new_d.as_bytes()))
            .unwrap(),
        f.creds.id
    );
    // replay of the consumed Msg1 inside the freshness window
    assert!(matches!(
        f.server.authenticate(&m1, Scope::ReadPatientVitals),
        Err(ProtocolError::UnknownPrincipal)
    ));
    // and the next login from the live card works
    assert!(f.session(Scope::ReadPatientVitals).is_ok());
}

#[test]
fn out_of_scope_request_is_unauthorized() {
    let mut f = registered(17, Role::Patient);
    assert!(matches!(
        f.session(Scope::ReadOtherPatientVitals),
        Err(ProtocolError::Unauthorized)
    ));
    assert!(f.session(Scope::ReadOwnVitals).is_ok());
}

#[test]
fn msg2_tampering_and_delay() {
    let mut f = registered(18, Role::Doctor);
    let (m1, sess) = f.login();
    f.clock.advance(50);
    let (m2, _) = f
        .server
        .authenticate(&m1, Scope::ReadPatientVitals)
        .unwrap();
    f.clock.advance(50);
    for bit in 0..160 {
        let mut t = m2;
        t.m2 = m2.m2.with_bit_flipped(bit);
        assert!(matches!(f.gw.verify(&sess, &t), Err(ProtocolError::BadMac)));
    }
    f.clock.advance(f.server.delta_t().millis());
    assert!(matches!(f.gw.verify(&sess, &m2), Err(ProtocolError::Stale)));
}

#[test]
fn credential_update_preserves_server_binding() {
    let mut f = registered(19, Role::Doctor);
    let (_, before) = f.login();
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let new = Credentials {
        id: f.creds.id,
        pw: b"new password".to_vec(),
        bio: BioTemplate::random(&mut rng),
    };
    let card = f.card();
    let old = f.creds.clone();
    f.gw.update_credentials(&old, &new, &card, f.server.ledger_mut())
        .unwrap();
    let card = f.card();
    assert!(matches!(
        f.gw.login(&old, &card),
        Err(ProtocolError::LocalVerifyFailed)
    ));
    f.creds = new;
    let (_, after) = f.login();
    assert_eq!(before.c_i, after.c_i);
    assert!(f.session(Scope::ReadPatientVitals).is_ok());
}

#[test]
fn literal_update_without_rebinding_k_breaks_authentication() {
    // E_new = K_old ⊕ h(PWD_new ∥ b_new) keeps K_old = h(S ∥ ID) ⊕ PWD_old,
    // so the next C_i = K_old ⊕ PWD_new no longer matches the server.
    let mut f = registered(20, Role::Doctor);
    let card = f.card();
    let sigma = crate::primitives::fe_rep(&f.creds.bio, &card.tau).unwrap();
    let b = hash(sigma.as_bytes());
    let pwd = hash_concat(&[&f.creds.pw, b.as_bytes()]);
    let k_old = card.e_i ^ hash_concat(&[pwd.as_bytes(), b.as_bytes()]);
    let new_pw = b"other".to_vec();
    let pwd_new = hash_concat(&[&new_pw, b.as_bytes()]);
    let mut literal = card;
    literal.e_i = k_old ^ hash_concat(&[pwd_new.as_bytes(), b.as_bytes()]);
    literal.f_i = hash((pwd_new ^ k_old ^ b).as_bytes());
    f.server.ledger_mut().put_card(literal);
    f.creds.pw = new_pw;
    assert!(matches!(
        f.session(Scope::ReadPatientVitals),
        Err(ProtocolError::BadMac)
    ));
}

#[test]
fn update_rejects_wrong_old_credentials_and_id_change() {
    let mut f = registered(21, Role::Doctor);
    let card = f.card();
    let mut wrong = f.creds.clone();
    wrong.pw = b"nope".to_vec();
    let new = f.creds.clone();
    assert!(matches!(
        f.gw.update_credentials(&wrong, &new, &card, f.server.ledger_mut()),
        Err(ProtocolError::LocalVerifyFailed)
    ));
    let mut moved = f.creds.clone();
    moved.id = Digest160::ZERO;
    let old = f.creds.clone();
    assert!(f
        .gw
        .update_credentials(&old, &moved, &card, f.server.ledger_mut())
        .is_err());
}

#[test]
fn authorization_update_revokes_old_token() {
    let mut f = registered(22, Role::Nurse);
    let old_card = f.card();
    let (stale_m1, _) = f.login();
    let token = f
        .server
        .update_authorization(&f.creds.id, Role::Doctor)
        .unwrap();
    assert!(f.server.ledger().any_digest(&hash(token.t_g.as_bytes())));
    // old AX no longer resolves to a live token
    f.clock.advance(10);
    assert!(matches!(
        f.server.authenticate(&stale_m1, Scope::ReadPatientVitals),
        Err(ProtocolError::UnknownPrincipal)
    ));
    let new_card = f.card();
    assert_ne!(new_card.ax_ui, old_card.ax_ui);
    assert_eq!(new_card.eid_i, old_card.eid_i);
    // new role grants a doctor-only scope
    assert!(f.session(Scope::WritePrescription).is_ok());
}

#[test]
fn authorization_update_for_unknown_id() {
    let mut f = registered(23, Role::Nurse);
    assert!(matches!(
        f.server
            .update_authorization(&Digest160::ZERO, Role::Doctor),
        Err(ProtocolError::NotFound)
    ));
}

#[test]
fn operation_counts() {
    let mut f = registered(24, Role::Doctor);
    let card = f.card();
    let ((m1, sess), login) = counters::measure(|| f.gw.login(&f.creds, &card).unwrap());
    f.clock.advance(50);
    let ((m2, _), server) = counters::measure(|| {
        f.server
            .authenticate(&m1, Scope::ReadPatientVitals)
            .unwrap()
    });
    f.clock.advance(50);
    let (_, verify) = counters::measure(|| f.gw.verify(&sess, &m2).unwrap());
    assert_eq!(login.hash_count + verify.hash_count, 7);
    assert_eq!(login.fe_count, 1);
    assert_eq!(server.hash_count, 10);
    assert_eq!(server.enc_count + server.dec_count, 0);
}

#[test]
fn stale_boundary_is_inclusive() {
    let f = registered(25, Role::Doctor);
    let (m1, _) = f.login();
    f.clock.advance(f.server.delta_t().millis());
    let mut server = f.server.clone();
    assert!(server.authenticate(&m1, Scope::ReadPatientVitals).is_ok());
}
