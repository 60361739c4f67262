//! Shared test support: a straight-line reference computation of every
//! protocol field, written against `sha2` directly, plus a driver that runs
//! the real state machines and captures what the reference needs.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use l2ai::primitives::{BioTemplate, Clock, Digest160};
use l2ai::protocol::{
    AuthTranscript, Credentials, Gateway, Msg1, Msg2, ProvisionalCard, RegRequest, Role, Scope,
    Server, ServerConfig, SmartCard,
};

pub type B20 = [u8; 20];

pub fn h(parts: &[&[u8]]) -> B20 {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
    }
    let full = hasher.finalize();
    let mut out = [0u8; 20];
    out.copy_from_slice(&full[..20]);
    out
}

pub fn x(a: &B20, b: &B20) -> B20 {
    let mut out = [0u8; 20];
    for i in 0..20 {
        out[i] = a[i] ^ b[i];
    }
    out
}

/// Values drawn by the parties during one registration and one
/// authentication.
#[derive(Clone, Debug)]
pub struct OracleInputs {
    pub id_hms: B20,
    pub s_hms: B20,
    pub id: B20,
    pub pw: Vec<u8>,
    pub sigma: B20,
    pub t_g: B20,
    pub r1: B20,
    pub t1: u64,
    pub n_s: B20,
    pub t2: u64,
    pub r2: B20,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleTrace {
    pub b: B20,
    pub x: B20,
    pub pwd: B20,
    pub did: B20,
    pub d_tid: B20,
    pub ax: B20,
    pub k: B20,
    pub eid: B20,
    pub hid: B20,
    pub e: B20,
    pub f: B20,
    pub c_i: B20,
    pub w1: B20,
    pub m1: B20,
    pub sk: B20,
    pub m2: B20,
    pub m3: B20,
    pub d_new: B20,
    pub ax_new: B20,
    pub eid_new: B20,
    pub hid_new: B20,
}

impl OracleTrace {
    pub fn fields(&self) -> Vec<(&'static str, B20)> {
        vec![
            ("b", self.b),
            ("x", self.x),
            ("pwd", self.pwd),
            ("did", self.did),
            ("d_tid", self.d_tid),
            ("ax", self.ax),
            ("k", self.k),
            ("eid", self.eid),
            ("hid", self.hid),
            ("e", self.e),
            ("f", self.f),
            ("c_i", self.c_i),
            ("w1", self.w1),
            ("m1", self.m1),
            ("sk", self.sk),
            ("m2", self.m2),
            ("m3", self.m3),
            ("d_new", self.d_new),
            ("ax_new", self.ax_new),
            ("eid_new", self.eid_new),
            ("hid_new", self.hid_new),
        ]
    }
}

pub fn oracle(i: &OracleInputs) -> OracleTrace {
    let h_s = h(&[&i.s_hms]);
    let h_ids = h(&[&i.id_hms, &i.s_hms]);

    let b = h(&[&i.sigma]);
    let x_ = h(&[&i.t_g]);
    let pwd = h(&[&i.pw, &b]);
    let did = x(&i.id, &h(&[&x_, &i.t_g]));

    let d_tid = x(&i.id, &i.r1);
    let ax = x(&i.t_g, &h(&[&d_tid, &i.id_hms]));
    let k = x(&h(&[&i.s_hms, &i.id]), &pwd);
    let eid = x(&d_tid, &h_s);
    let hid = x(&h_ids, &d_tid);

    let e = x(&k, &h(&[&pwd, &b]));
    let f = h(&[&x(&x(&pwd, &k), &b)]);

    let c_i = x(&k, &pwd);
    let w1 = h(&[&d_tid, &h_ids]);
    let m1 = h(&[&c_i, &i.t1.to_be_bytes(), &w1]);

    let sk = h(&[&w1, &i.n_s]);
    let m2 = x(&sk, &w1);
    let m3 = h(&[&c_i, &i.t2.to_be_bytes(), &w1, &sk]);

    let d_new = x(&i.id, &i.r2);
    let ax_new = x(&i.t_g, &h(&[&d_new, &i.id_hms]));
    let eid_new = x(&d_new, &h_s);
    let hid_new = x(&h_ids, &d_new);

    OracleTrace {
        b,
        x: x_,
        pwd,
        did,
        d_tid,
        ax,
        k,
        eid,
        hid,
        e,
        f,
        c_i,
        w1,
        m1,
        sk,
        m2,
        m3,
        d_new,
        ax_new,
        eid_new,
        hid_new,
    }
}

/// Everything observable from one run of the real implementation.
pub struct Capture {
    pub inputs: OracleInputs,
    pub req: RegRequest,
    pub prov: ProvisionalCard,
    pub card: SmartCard,
    pub msg1: Msg1,
    pub msg2: Msg2,
    pub transcript: AuthTranscript,
    pub user_sk: Digest160,
    pub card_after: SmartCard,
}

pub fn credentials(seed: u64) -> Credentials {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
    Credentials {
        id: Digest160::random(&mut rng),
        pw: format!("pw-{seed}").into_bytes(),
        bio: BioTemplate::random(&mut rng),
    }
}

pub struct Parties {
    pub clock: Clock,
    pub server: Server,
    pub gateway: Gateway,
    pub creds: Credentials,
}

impl Parties {
    pub fn new(seed: u64) -> Self {
        let clock = Clock::new();
        let server = Server::setup(seed, clock.clone(), ServerConfig::default());
        let gateway = Gateway::new(
            seed.wrapping_mul(31).wrapping_add(7),
            clock.clone(),
            server.delta_t(),
        );
        Parties {
            clock,
            server,
            gateway,
            creds: credentials(seed),
        }
    }
}

/// Registration, login and authentication with 50 ms of delay per hop.
pub fn capture(seed: u64) -> Capture {
    let mut p = Parties::new(seed);
    let token = p.server.issue_token(Role::Doctor).unwrap();
    let (req, scratch) = p.gateway.register_request(&p.creds, &token);
    let sigma = scratch.sigma;
    p.clock.advance(50);
    let prov = p.server.register(&req).unwrap();
    p.clock.advance(50);
    let (card, _) = p
        .gateway
        .finalize_card(&prov, scratch, p.server.ledger_mut());

    let live = p.gateway.load_card(p.server.ledger()).unwrap();
    let (msg1, session) = p.gateway.login(&p.creds, &live).unwrap();
    p.clock.advance(50);
    let (msg2, transcript) = p
        .server
        .authenticate(&msg1, Scope::ReadPatientVitals)
        .unwrap();
    p.clock.advance(50);
    let user_sk = p.gateway.verify(&session, &msg2).unwrap();
    let card_after = p.gateway.load_card(p.server.ledger()).unwrap();

    let inputs = OracleInputs {
        id_hms: *p.server.id_hms().as_bytes(),
        s_hms: *p.server.secret_key_for_audit().as_bytes(),
        id: *p.creds.id.as_bytes(),
        pw: p.creds.pw.clone(),
        sigma: *sigma.as_bytes(),
        t_g: *token.t_g.as_bytes(),
        r1: *prov.r_hms.as_bytes(),
        t1: msg1.t1.0,
        n_s: *transcript.n_s.as_bytes(),
        t2: msg2.t2.0,
        r2: *card_after.r_hms.as_bytes(),
    };
    Capture {
        inputs,
        req,
        prov,
        card,
        msg1,
        msg2,
        transcript,
        user_sk,
        card_after,
    }
}

/// Pairs each reference field with what the implementation produced.
pub fn compare(c: &Capture) -> Vec<(&'static str, B20, B20)> {
    let o = oracle(&c.inputs);
    let b = |d: Digest160| *d.as_bytes();
    vec![
        ("x", o.x, b(c.req.x)),
        ("pwd", o.pwd, b(c.req.pwd)),
        ("did", o.did, b(c.req.did)),
        ("k", o.k, b(c.prov.k)),
        ("eid", o.eid, b(c.prov.eid)),
        ("hid", o.hid, b(c.prov.hid)),
        ("ax", o.ax, b(c.prov.ax)),
        ("card.e", o.e, b(c.card.e_i)),
        ("card.f", o.f, b(c.card.f_i)),
        ("card.eid", o.eid, b(c.card.eid_i)),
        ("card.hid", o.hid, b(c.card.hid_hms)),
        ("card.ax", o.ax, b(c.card.ax_ui)),
        ("msg1.m1", o.m1, b(c.msg1.m1)),
        ("msg1.eid", o.eid, b(c.msg1.eid)),
        ("msg1.ax", o.ax, b(c.msg1.ax)),
        ("tr.c_i", o.c_i, b(c.transcript.c_i)),
        ("tr.w1", o.w1, b(c.transcript.w1)),
        ("tr.m1", o.m1, b(c.transcript.m1)),
        ("tr.sk", o.sk, b(c.transcript.sk)),
        ("tr.m2", o.m2, b(c.transcript.m2)),
        ("tr.m3", o.m3, b(c.transcript.m3)),
        ("tr.id", c.inputs.id, b(c.transcript.id)),
        ("msg2.m2", o.m2, b(c.msg2.m2)),
        ("msg2.m3", o.m3, b(c.msg2.m3)),
        ("user.sk", o.sk, b(c.user_sk)),
        ("card_after.eid", o.eid_new, b(c.card_after.eid_i)),
        ("card_after.ax", o.ax_new, b(c.card_after.ax_ui)),
        ("card_after.hid", o.hid_new, b(c.card_after.hid_hms)),
    ]
}

/// Names of the fields where implementation and reference disagree.
pub fn mismatches(c: &Capture) -> Vec<&'static str> {
    compare(c)
        .into_iter()
        .filter(|(_, want, got)| want != got)
        .map(|(name, _, _)| name)
        .collect()
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares against a committed golden file; `L2AI_BLESS=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("L2AI_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with L2AI_BLESS=1 to create)", path.display()));
    assert_eq!(actual, expected, "{name} drifted");
}
