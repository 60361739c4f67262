use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::primitives::{Ciphertext, HelperData};

fn d(rng: &mut ChaCha20Rng) -> Digest160 {
    Digest160::random(rng)
}

fn card(rng: &mut ChaCha20Rng, uid: Digest160) -> SmartCard {
    SmartCard {
        e_i: d(rng),
        f_i: d(rng),
        eid_i: d(rng),
        r_hms: d(rng),
        hid_hms: d(rng),
        ax_ui: d(rng),
        tau: HelperData {
            offset: [7; 32],
            check: d(rng),
        },
        card_uid: uid,
    }
}

fn token(x: Digest160) -> TokenRecord {
    TokenRecord {
        x,
        role: Role::Doctor,
        y: Ciphertext::from_bytes(vec![0xab; 48]),
        revoked: false,
    }
}

/// Brute-force liveness: replay the whole chain in order.
fn any_digest_scan(ledger: &Ledger, x: &Digest160) -> bool {
    let mut token_live: HashMap<Digest160, bool> = HashMap::new();
    let mut ident_live: HashMap<Digest160, bool> = HashMap::new();
    for (_, rec) in ledger.records() {
        match rec {
            Record::Token(t) => {
                token_live.insert(t.x, !t.revoked);
            }
            Record::Identity(i) => {
                ident_live.insert(i.h_dtid, i.superseded_by.is_none());
            }
            Record::Card(_) => {}
        }
    }
    token_live.get(x).copied().unwrap_or(false) || ident_live.get(x).copied().unwrap_or(false)
}

#[test]
fn genesis_and_chaining() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut l = Ledger::new();
    assert!(l.verify_chain());
    let a = l.append(Record::Token(token(d(&mut rng))));
    assert_eq!(a.height, 0);
    assert_eq!(l.blocks()[0].prev_digest, Digest160::ZERO);
    let b = l.append(Record::Token(token(d(&mut rng))));
    assert_eq!(b.height, 1);
    assert_eq!(l.blocks()[1].prev_digest, l.blocks()[0].block_digest);
    assert!(l.verify_chain());
}

#[test]
fn thousand_appends_verify() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut l = Ledger::new();
    for i in 0..1000 {
        match i % 3 {
            0 => l.append(Record::Token(token(d(&mut rng)))),
            1 => l.add_identity(d(&mut rng), d(&mut rng)),
            _ => {
                let uid = d(&mut rng);
                l.put_card(card(&mut rng, uid))
            }
        };
    }
    assert_eq!(l.len(), 1000);
    assert!(l.verify_chain());
}

#[test]
fn any_digest_follows_revocation() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut l = Ledger::new();
    let x = d(&mut rng);
    assert!(!l.any_digest(&x));
    l.put_token(token(x));
    assert!(l.any_digest(&x));
    assert_eq!(l.token_role(&x).unwrap(), Role::Doctor);
    l.revoke_token(&x).unwrap();
    assert!(!l.any_digest(&x));
    assert!(matches!(l.token(&x), Err(LedgerError::NotFound)));
    assert!(matches!(l.revoke_token(&x), Err(LedgerError::NotFound)));
    assert!(l.verify_chain());
}

#[test]
fn identity_lookup_and_replace() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut l = Ledger::new();
    let (old, new, id) = (d(&mut rng), d(&mut rng), d(&mut rng));
    l.add_identity(old, id);
    assert_eq!(l.get_identity(&old).unwrap(), id);
    assert!(matches!(
        l.get_identity(&d(&mut rng)),
        Err(LedgerError::NotFound)
    ));
    let before = l.len();
    l.replace_index(old, new, id).unwrap();
    assert_eq!(l.len(), before + 2);
    assert!(matches!(l.get_identity(&old), Err(LedgerError::NotFound)));
    assert_eq!(l.get_identity(&new).unwrap(), id);
    assert!(l.any_digest(&new));
    assert!(!l.any_digest(&old));
    assert_eq!(l.live_index_for(&id).unwrap(), new);
    assert!(matches!(
        l.replace_index(old, new, id),
        Err(LedgerError::NotFound)
    ));
    assert!(l.verify_chain());
}

#[test]
fn replace_requires_matching_id() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut l = Ledger::new();
    let (h, id) = (d(&mut rng), d(&mut rng));
    l.add_identity(h, id);
    assert!(l.replace_index(h, d(&mut rng), d(&mut rng)).is_err());
}

#[test]
fn re_adding_an_identity_supersedes_the_old_index() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut l = Ledger::new();
    let (h1, h2, id) = (d(&mut rng), d(&mut rng), d(&mut rng));
    l.add_identity(h1, id);
    l.add_identity(h2, id);
    assert!(!l.any_digest(&h1));
    assert_eq!(l.live_index_for(&id).unwrap(), h2);
}

#[test]
fn cards_latest_wins() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut l = Ledger::new();
    let uid = d(&mut rng);
    assert!(matches!(l.get_card(&uid), Err(LedgerError::NotFound)));
    let c1 = card(&mut rng, uid);
    let a1 = l.put_card(c1);
    assert_eq!(a1.card_uid, uid);
    assert_eq!(l.get_card(&uid).unwrap(), c1);
    let c2 = card(&mut rng, uid);
    l.put_card(c2);
    assert_eq!(l.get_card(&uid).unwrap(), c2);
    match l.blocks().last().unwrap().record().unwrap() {
        Record::Card(c) => assert_eq!(c.supersedes, Some(a1.height)),
        other => panic!("{other:?}"),
    }
    for _ in 0..100 {
        l.put_card(card(&mut rng, uid));
    }
    assert!(l.verify_chain());
}

fn ten_block_chain() -> Ledger {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let mut l = Ledger::new();
    let uid = d(&mut rng);
    let id = d(&mut rng);
    let mut h = d(&mut rng);
    l.put_token(token(d(&mut rng)));
    l.add_identity(h, id);
    l.put_card(card(&mut rng, uid));
    while l.len() < 10 {
        let next = d(&mut rng);
        l.replace_index(h, next, id).unwrap();
        h = next;
        l.put_card(card(&mut rng, uid));
    }
    Ledger::from_blocks(l.blocks()[..10].to_vec())
}

#[test]
fn every_single_bit_tamper_is_detected() {
    let honest = ten_block_chain();
    assert_eq!(honest.len(), 10);
    assert!(honest.verify_chain());
    for k in 0..10 {
        let block = &honest.blocks()[k];
        for bit in 0..block.payload.len() * 8 {
            let mut blocks = honest.blocks().to_vec();
            blocks[k].payload[bit / 8] ^= 0x80 >> (bit % 8);
            assert!(
                !Ledger::from_blocks(blocks).verify_chain(),
                "block {k} payload bit {bit}"
            );
        }
        for bit in 0..160 {
            let mut blocks = honest.blocks().to_vec();
            blocks[k].prev_digest = blocks[k].prev_digest.with_bit_flipped(bit);
            assert!(!Ledger::from_blocks(blocks).verify_chain());
            let mut blocks = honest.blocks().to_vec();
            blocks[k].block_digest = blocks[k].block_digest.with_bit_flipped(bit);
            assert!(!Ledger::from_blocks(blocks).verify_chain());
        }
        for bit in 0..64 {
            let mut blocks = honest.blocks().to_vec();
            blocks[k].height ^= 1 << bit;
            assert!(!Ledger::from_blocks(blocks).verify_chain());
        }
    }
}

#[test]
fn export_import_round_trip() {
    let l = ten_block_chain();
    let text = l.export_string();
    assert_eq!(text.lines().count(), 10);
    let back = Ledger::import(text.as_bytes()).unwrap();
    assert_eq!(back.blocks(), l.blocks());
    assert!(back.verify_chain());
    assert_eq!(Ledger::new().export_string(), "");
}

#[test]
fn import_reports_line_numbers() {
    let l = ten_block_chain();
    let mut text = l.export_string();
    text.push_str("zz 00 token 00 00\n");
    match Ledger::import(text.as_bytes()) {
        Err(LedgerError::Parse { line, .. }) => assert_eq!(line, 11),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_payloads_are_rejected_by_decoder() {
    assert!(Record::from_bytes(&[]).is_err());
    assert!(Record::from_bytes(&[9]).is_err());
    let mut bytes = Record::Token(token(Digest160::ZERO)).to_bytes();
    bytes.push(0);
    assert!(Record::from_bytes(&bytes).is_err());
}

#[derive(Debug, Clone)]
enum Op {
    Token(u8),
    Revoke(u8),
    Identity(u8, u8),
    Replace(u8, u8),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..16).prop_map(Op::Token),
        (0u8..16).prop_map(Op::Revoke),
        (0u8..16, 0u8..4).prop_map(|(h, i)| Op::Identity(h, i)),
        (0u8..16, 0u8..16).prop_map(|(a, b)| Op::Replace(a, b)),
    ]
}

fn key(tag: u8, n: u8) -> Digest160 {
    let mut b = [0u8; 20];
    b[0] = tag;
    b[1] = n;
    Digest160::from_bytes(b)
}

proptest! {
    #[test]
    fn index_agrees_with_linear_scan(ops in proptest::collection::vec(op(), 0..60)) {
        let mut l = Ledger::new();
        for op in &ops {
            match *op {
                Op::Token(n) => { l.put_token(token(key(1, n))); }
                Op::Revoke(n) => { let _ = l.revoke_token(&key(1, n)); }
                Op::Identity(h, i) => { l.add_identity(key(2, h), key(3, i)); }
                Op::Replace(a, b) => {
                    if let Ok(id) = l.get_identity(&key(2, a)) {
                        if !l.any_digest(&key(2, b)) {
                            l.replace_index(key(2, a), key(2, b), id).unwrap();
                        }
                    }
                }
            }
        }
        prop_assert!(l.verify_chain());
        for tag in 1..=2u8 {
            for n in 0..16u8 {
                let x = key(tag, n);
                prop_assert_eq!(l.any_digest(&x), any_digest_scan(&l, &x));
            }
        }
        // at most one live index per id
        let mut seen = HashSet::new();
        for n in 0..16u8 {
            if let Ok(id) = l.get_identity(&key(2, n)) {
                prop_assert!(seen.insert(id));
            }
        }
        // rebuilt index matches
        let rebuilt = Ledger::from_blocks(l.blocks().to_vec());
        for n in 0..16u8 {
            prop_assert_eq!(rebuilt.any_digest(&key(1, n)), l.any_digest(&key(1, n)));
            prop_assert_eq!(rebuilt.any_digest(&key(2, n)), l.any_digest(&key(2, n)));
        }
    }
}
