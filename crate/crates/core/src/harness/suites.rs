use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::channel::{ActionKind, AdversaryAction, Matcher, SERVER};
use crate::primitives::{sha256_160, Digest160, Timestamp};
use crate::protocol::{Msg1, Msg2, Role, Scope};

use super::metrics::{Phase, Side};
use super::report::{Assertion, Report};
use super::sim::Simulation;
use super::RunOptions;

pub const SUITES: [&str; 4] = ["honest", "attacks", "metrics", "fuzz"];
pub const HONEST_SEEDS: u64 = 20;
pub const FUZZ_SESSIONS: usize = 1_000;
const FUZZ_USERS: usize = 10;
const USER: &str = "u1";

fn suite_report(
    id: &str,
    opts: &RunOptions,
    assertions: Vec<Assertion>,
    digests: &[Digest160],
) -> Report {
    let config = opts.config(opts.base_seed());
    let parts: Vec<&[u8]> = digests.iter().map(|d| d.as_bytes().as_slice()).collect();
    Report {
        id: format!("suite:{id}"),
        seed: opts.base_seed(),
        delta_t: config.delta_t,
        base_delay: config.base_delay,
        assertions,
        event_log_digest: Some(sha256_160(&parts)),
        ..Report::default()
    }
}

fn registered(opts: &RunOptions, seed: u64, role: Role) -> Simulation {
    let mut sim = Simulation::new(opts.config(seed));
    sim.add_user(USER, role);
    sim.register(USER);
    sim
}

fn integrity(sim: &Simulation, prefix: &str) -> Vec<Assertion> {
    vec![
        Assertion::new(
            format!("{prefix}counters-complete"),
            sim.counters_complete(),
            "",
        ),
        Assertion::new(
            format!("{prefix}ledger-chain-verifies"),
            sim.server().ledger().verify_chain(),
            format!("blocks={}", sim.server().ledger().len()),
        ),
    ]
}

/// Every phase, twenty consecutive seeds.
pub fn honest_suite(opts: &RunOptions) -> Report {
    let mut assertions = Vec::new();
    let mut digests = Vec::new();
    let mut first_metrics = None;
    for seed in opts.base_seed()..opts.base_seed() + HONEST_SEEDS {
        let p = format!("seed={seed} ");
        let mut sim = registered(opts, seed, Role::Doctor);
        assertions.push(Assertion::new(
            format!("{p}register"),
            sim.outcome(USER) == Some("card-issued"),
            format!("outcome={}", sim.outcome(USER).unwrap_or("none")),
        ));
        sim.login(USER);
        assertions.push(Assertion::new(
            format!("{p}login keys-match"),
            sim.keys_match(USER),
            "",
        ));
        sim.update_credentials(USER);
        sim.login(USER);
        assertions.push(Assertion::new(
            format!("{p}update-creds then login keys-match"),
            sim.keys_match(USER),
            "",
        ));
        sim.update_authorization(USER, Some(Role::Nurse));
        sim.login(USER);
        assertions.push(Assertion::new(
            format!("{p}update-authz then login keys-match"),
            sim.keys_match(USER),
            "",
        ));
        assertions.extend(integrity(&sim, &p));
        digests.push(sim.event_log().digest());
        first_metrics.get_or_insert_with(|| sim.metrics().list());
    }
    let mut report = suite_report("honest", opts, assertions, &digests);
    report.metrics = first_metrics.unwrap_or_default();
    report
}

/// Tally of outcomes as `name=count` pairs.
fn tally(outcomes: &BTreeMap<String, usize>) -> String {
    outcomes
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn flip_action(seq: u64, bit: usize) -> AdversaryAction {
    AdversaryAction::new(
        ActionKind::Modify {
            byte_offset: bit / 8,
            xor_mask: 0x80 >> (bit % 8),
        },
        Matcher::seq(seq),
    )
}

/// Single-bit flips of every bit of `Msg1`. Returns the number of accepted
/// sessions and the tally of server outcomes.
pub(crate) fn tamper_msg1(opts: &RunOptions, seed: u64) -> (usize, BTreeMap<String, usize>) {
    let mut accepted = 0;
    let mut outcomes = BTreeMap::new();
    for bit in 0..Msg1::WIRE_LEN * 8 {
        let mut sim = registered(opts, seed, Role::Doctor);
        let seq = sim.net().next_seq();
        sim.add_action(flip_action(seq, bit));
        sim.login(USER);
        let o = sim.outcome(SERVER).unwrap_or("none").to_string();
        if o == "accepted" || sim.user_key(USER).is_some() {
            accepted += 1;
        }
        *outcomes.entry(o).or_insert(0) += 1;
    }
    (accepted, outcomes)
}

/// Single-bit flips of every bit of `Msg2`. Returns the number of session
/// keys the user accepted and the tally of user outcomes.
pub(crate) fn tamper_msg2(opts: &RunOptions, seed: u64) -> (usize, BTreeMap<String, usize>) {
    let mut accepted = 0;
    let mut outcomes = BTreeMap::new();
    for bit in 0..Msg2::WIRE_LEN * 8 {
        let mut sim = registered(opts, seed, Role::Doctor);
        let seq = sim.net().next_seq() + 1;
        sim.add_action(flip_action(seq, bit));
        sim.login(USER);
        let o = sim.outcome(USER).unwrap_or("none").to_string();
        if sim.user_key(USER).is_some() {
            accepted += 1;
        }
        *outcomes.entry(o).or_insert(0) += 1;
    }
    (accepted, outcomes)
}

fn outcome_is(sim: &Simulation, entity: &str, want: &str) -> (bool, String) {
    let got = sim.outcome(entity).unwrap_or("none");
    (got == want, format!("{entity}={got}"))
}

/// Replay, tamper, drop, delay and authorization attacks.
pub fn attacks_suite(opts: &RunOptions) -> Report {
    let seed = opts.base_seed();
    let delta_t = opts.config(seed).delta_t;
    let mut assertions = Vec::new();
    let mut digests = Vec::new();
    let mut check = |name: &str, digest: Digest160, ok: bool, detail: String| {
        digests.push(digest);
        assertions.push(Assertion::new(name, ok, detail));
    };

    let mut sim = registered(opts, seed, Role::Doctor);
    let t1 = sim.now();
    let seq = sim.net().next_seq();
    sim.net_mut()
        .arm_replay(seq, t1.saturating_add(delta_t + 1));
    sim.login(USER);
    let (ok, d) = outcome_is(&sim, SERVER, "stale");
    check(
        "replay-msg1-after-window",
        sim.event_log().digest(),
        ok && sim.keys_match(USER),
        d,
    );

    let mut sim = registered(opts, seed, Role::Doctor);
    let t1 = sim.now();
    let seq = sim.net().next_seq();
    sim.net_mut()
        .arm_replay(seq, t1.saturating_add(delta_t / 2));
    sim.login(USER);
    let (ok, d) = outcome_is(&sim, SERVER, "unknown-principal");
    check("replay-msg1-within-window", sim.event_log().digest(), ok, d);

    let mut sim = registered(opts, seed, Role::Doctor);
    let t1 = sim.now();
    let seq = sim.net().next_seq() + 1;
    sim.net_mut()
        .arm_replay(seq, t1.saturating_add(delta_t / 2));
    sim.login(USER);
    let (ok, d) = outcome_is(&sim, USER, "unexpected");
    check("replay-msg2", sim.event_log().digest(), ok, d);

    let (accepted, outcomes) = tamper_msg1(opts, seed);
    let classes = ["stale", "unknown-principal", "bad-mac"]
        .iter()
        .all(|c| outcomes.contains_key(*c));
    check(
        "tamper-msg1-exhaustive",
        sha256_160(&[tally(&outcomes).as_bytes()]),
        accepted == 0 && classes,
        format!("accepted={accepted} {}", tally(&outcomes)),
    );
    let (accepted, outcomes) = tamper_msg2(opts, seed);
    check(
        "tamper-msg2-exhaustive",
        sha256_160(&[tally(&outcomes).as_bytes()]),
        accepted == 0,
        format!("accepted={accepted} {}", tally(&outcomes)),
    );

    let mut sim = registered(opts, seed, Role::Doctor);
    let seq = sim.net().next_seq();
    sim.add_action(AdversaryAction::new(ActionKind::Drop, Matcher::seq(seq)));
    sim.login(USER);
    let silent = sim.user_key(USER).is_none() && sim.outcome(SERVER) == Some("registered");
    sim.login(USER);
    check(
        "drop-msg1-then-recover",
        sim.event_log().digest(),
        silent && sim.keys_match(USER),
        format!("silent={silent}"),
    );

    let mut sim = registered(opts, seed, Role::Doctor);
    let seq = sim.net().next_seq() + 1;
    sim.add_action(AdversaryAction::new(ActionKind::Drop, Matcher::seq(seq)));
    sim.login(USER);
    let silent = sim.user_key(USER).is_none() && sim.outcome(SERVER) == Some("accepted");
    sim.login(USER);
    check(
        "drop-msg2-then-recover",
        sim.event_log().digest(),
        silent && sim.keys_match(USER),
        format!("silent={silent}"),
    );

    let extra = delta_t + 1 - sim.config().base_delay.min(delta_t + 1);
    let mut sim = registered(opts, seed, Role::Doctor);
    let seq = sim.net().next_seq();
    sim.add_action(AdversaryAction::new(
        ActionKind::Delay { extra },
        Matcher::seq(seq),
    ));
    sim.login(USER);
    let (ok, d) = outcome_is(&sim, SERVER, "stale");
    check("delay-msg1-past-window", sim.event_log().digest(), ok, d);

    let mut sim = registered(opts, seed, Role::Doctor);
    let seq = sim.net().next_seq() + 1;
    sim.add_action(AdversaryAction::new(
        ActionKind::Delay { extra },
        Matcher::seq(seq),
    ));
    sim.login(USER);
    let (ok, d) = outcome_is(&sim, USER, "stale");
    check(
        "delay-msg2-past-window",
        sim.event_log().digest(),
        ok && sim.user_key(USER).is_none(),
        d,
    );

    let mut sim = registered(opts, seed, Role::Patient);
    sim.set_scope(Scope::WritePrescription);
    sim.login(USER);
    let (ok, d) = outcome_is(&sim, SERVER, "unauthorized");
    check("unauthorized-scope", sim.event_log().digest(), ok, d);

    let mut sim = registered(opts, seed, Role::Doctor);
    let seq = sim.net().next_seq();
    sim.add_action(AdversaryAction::new(
        ActionKind::Eavesdrop,
        Matcher::seq(seq),
    ));
    sim.add_action(AdversaryAction::new(ActionKind::Drop, Matcher::seq(seq)));
    sim.login(USER);
    sim.update_authorization(USER, Some(Role::Doctor));
    let at = sim.now().saturating_add(sim.config().base_delay);
    let replayed = sim.net_mut().replay(seq, at).is_ok();
    sim.run();
    let (ok, d) = outcome_is(&sim, SERVER, "unknown-principal");
    sim.login(USER);
    check(
        "revoked-token-replay",
        sim.event_log().digest(),
        replayed && ok && sim.keys_match(USER),
        d,
    );

    suite_report("attacks", opts, assertions, &digests)
}

/// One pass through every phase with per-phase counters.
pub fn metrics_suite(opts: &RunOptions) -> Report {
    let seed = opts.base_seed();
    let mut sim = registered(opts, seed, Role::Doctor);
    sim.login(USER);
    let keys = sim.keys_match(USER);
    sim.update_credentials(USER);
    sim.update_authorization(USER, Some(Role::Nurse));

    let m = sim.metrics();
    let get = |phase, side| m.get(phase, side).copied();
    let hashes = |phase, side| get(phase, side).map_or(0, |p| p.ops.hash_count);
    let bytes = |phase, side| get(phase, side).map_or(0, |p| p.bytes_sent);
    let user_hash = hashes(Phase::Login, Side::User) + hashes(Phase::AuthKeyExchange, Side::User);
    let server_hash = hashes(Phase::AuthKeyExchange, Side::Server);
    let msg1 = bytes(Phase::Login, Side::User);
    let msg2 = bytes(Phase::AuthKeyExchange, Side::Server);

    let mut assertions = vec![
        Assertion::new("keys-match", keys, ""),
        Assertion::new(
            "user login+verify hash_ops = 7",
            user_hash == 7,
            format!("actual={user_hash}"),
        ),
        Assertion::new(
            "server authenticate hash_ops = 10",
            server_hash == 10,
            format!("actual={server_hash}"),
        ),
        Assertion::new("msg1 bytes_sent = 68", msg1 == 68, format!("actual={msg1}")),
        Assertion::new("msg2 bytes_sent = 48", msg2 == 48, format!("actual={msg2}")),
    ];
    assertions.extend(integrity(&sim, ""));
    let mut report = suite_report("metrics", opts, assertions, &[sim.event_log().digest()]);
    report.metrics = sim.metrics().list();
    report
}

fn permitted(sim: &Simulation, role: Role, at: Timestamp) -> Vec<Scope> {
    Scope::ALL
        .into_iter()
        .filter(|s| sim.server().authorize(role, *s, at))
        .collect()
}

/// Count of places `needle` occurs as a contiguous substring of any of
/// `haystacks`.
pub fn substring_findings(haystacks: &[Vec<u8>], needle: &[u8]) -> usize {
    haystacks
        .iter()
        .map(|h| h.windows(needle.len()).filter(|w| *w == needle).count())
        .sum()
}

/// Randomized sessions for several users under biometric noise with a
/// passive adversary recording everything.
pub fn fuzz_suite(opts: &RunOptions) -> Report {
    let seed = opts.base_seed();
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x6675_7a7a);
    let mut config = opts.config(seed);
    config.bio_noise = true;
    let mut sim = Simulation::new(config);
    sim.add_action(AdversaryAction::new(ActionKind::Eavesdrop, Matcher::any()));

    let roles: Vec<Role> = Role::ALL
        .into_iter()
        .filter(|r| sim.server().permissions().contains_role(*r))
        .collect();
    let names: Vec<String> = (0..FUZZ_USERS).map(|i| format!("u{i}")).collect();
    for name in &names {
        let role = *roles.choose(&mut rng).expect("permission table has roles");
        sim.add_user(name, role);
        sim.register(name);
    }

    let mut sessions = 0;
    let mut agreed = 0;
    let mut expected_agreements = 0;
    let mut refused = 0;
    let mut expected_refusals = 0;
    let mut updates = 0;
    let mut accepted_eids = Vec::new();
    while sessions < FUZZ_SESSIONS {
        let name = names.choose(&mut rng).expect("users").clone();
        let roll = rng.gen_range(0..100);
        if roll < 4 {
            sim.update_credentials(&name);
            updates += 1;
        } else if roll < 7 {
            let role = *roles.choose(&mut rng).expect("roles");
            sim.update_authorization(&name, Some(role));
            updates += 1;
        } else {
            let role = sim.role(&name).expect("user exists");
            let allowed = permitted(&sim, role, sim.now());
            let scope = if allowed.is_empty() || rng.gen_bool(0.1) {
                *Scope::ALL.choose(&mut rng).expect("scopes")
            } else {
                *allowed.choose(&mut rng).expect("non-empty")
            };
            let expect_ok = allowed.contains(&scope);
            sim.set_scope(scope);
            let seq = sim.login(&name);
            sessions += 1;
            if sim.outcome(SERVER) == Some("accepted") {
                let sent = seq.and_then(|q| sim.net().history().iter().find(|e| e.seq == q));
                if let Some(m) = sent.and_then(|e| Msg1::from_bytes(&e.payload).ok()) {
                    accepted_eids.push(m.eid);
                }
            }
            if expect_ok {
                expected_agreements += 1;
                if sim.keys_match(&name) {
                    agreed += 1;
                }
            } else {
                expected_refusals += 1;
                if sim.outcome(SERVER) == Some("unauthorized") {
                    refused += 1;
                }
            }
        }
        if rng.gen_bool(0.2) {
            sim.wait(rng.gen_range(0..500));
        }
    }

    let eids: HashSet<Digest160> = accepted_eids.iter().copied().collect();
    let s_hms = sim.server().secret_key_for_audit();
    let observable = sim.observable_bytes();
    let findings = substring_findings(&observable, s_hms.as_bytes());

    let mut assertions = vec![
        Assertion::new(
            "sessions",
            sessions == FUZZ_SESSIONS,
            format!("sessions={sessions} updates={updates}"),
        ),
        Assertion::new(
            "permitted sessions agree on SK",
            agreed == expected_agreements,
            format!("agreed={agreed}/{expected_agreements}"),
        ),
        Assertion::new(
            "unpermitted sessions refused",
            refused == expected_refusals,
            format!("refused={refused}/{expected_refusals}"),
        ),
        Assertion::new(
            "accepted sessions use distinct EIDs",
            eids.len() == accepted_eids.len(),
            format!("distinct={} accepted={}", eids.len(), accepted_eids.len()),
        ),
        Assertion::new(
            "S_HMS confined",
            findings == 0,
            format!("findings={findings} buffers={}", observable.len()),
        ),
    ];
    assertions.extend(integrity(&sim, ""));
    let mut report = suite_report("fuzz", opts, assertions, &[sim.event_log().digest()]);
    report.metrics = sim.metrics().list();
    report
}
