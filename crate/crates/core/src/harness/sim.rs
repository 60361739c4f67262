use std::collections::{BTreeMap, HashMap};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::channel::{
    AdversaryAction, Envelope, EventLog, HonestPhase, Network, Reaction, Scenario, Step,
    DEFAULT_BASE_DELAY_MS, SERVER,
};
use crate::primitives::counters::{measure, snapshot};
use crate::primitives::fuzzy::{BLOCKS, REPETITION, TOLERANCE};
use crate::primitives::{BioTemplate, Clock, Digest160, OpCounters, Timestamp};
use crate::protocol::{
    Credentials, Gateway, Msg1, Msg2, PermissionTable, ProtocolError, ProvisionalCard, RegRequest,
    RegScratch, Role, Scope, Server, ServerConfig, UserSession, DEFAULT_DELTA_T_MS,
};

use super::metrics::{MetricsBook, Phase, Side};
use super::report::Assertion;

pub const DEFAULT_SCOPE: Scope = Scope::ReadPatientVitals;
pub const DEFAULT_ROLE: Role = Role::Doctor;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub delta_t: u64,
    pub base_delay: u64,
    pub perms: PermissionTable,
    /// Perturb the biometric reading on every login with up to the
    /// extractor's tolerance per block.
    pub bio_noise: bool,
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        SimConfig {
            seed,
            delta_t: DEFAULT_DELTA_T_MS,
            base_delay: DEFAULT_BASE_DELAY_MS,
            perms: PermissionTable::default(),
            bio_noise: false,
        }
    }
}

#[derive(Clone, Debug)]
struct Agent {
    role: Role,
    gateway: Gateway,
    creds: Credentials,
    scratch: Option<RegScratch>,
    session: Option<UserSession>,
    sk: Option<Digest160>,
}

/// Everything the channel delivers to.
#[derive(Debug)]
struct World {
    server: Server,
    agents: BTreeMap<String, Agent>,
    names: HashMap<Digest160, String>,
    scope: Scope,
    metrics: MetricsBook,
    outcomes: BTreeMap<String, String>,
    server_keys: HashMap<String, Digest160>,
}

impl World {
    fn deliver(&mut self, env: &Envelope) -> Reaction {
        let reaction = if env.to == SERVER {
            self.server_receive(env)
        } else {
            self.user_receive(env)
        };
        if let Some(o) = &reaction.outcome {
            self.outcomes.insert(env.to.clone(), o.clone());
        }
        reaction
    }

    fn server_receive(&mut self, env: &Envelope) -> Reaction {
        let server = &mut self.server;
        match env.payload.len() {
            RegRequest::WIRE_LEN => {
                let (res, ops) = measure(|| {
                    let req = RegRequest::from_bytes(&env.payload)?;
                    server.register(&req)
                });
                self.metrics.charge(Phase::Registration, Side::Server, ops);
                match res {
                    Ok(prov) => {
                        let bytes = prov.to_bytes().to_vec();
                        self.metrics
                            .add_bytes(Phase::Registration, Side::Server, bytes.len());
                        reply(&env.from, bytes, "registered")
                    }
                    Err(e) => outcome(e.code()),
                }
            }
            Msg1::WIRE_LEN => {
                let scope = self.scope;
                let (res, ops) = measure(|| {
                    let msg1 = Msg1::from_bytes(&env.payload)?;
                    server.authenticate(&msg1, scope)
                });
                self.metrics
                    .charge(Phase::AuthKeyExchange, Side::Server, ops);
                match res {
                    Ok((msg2, transcript)) => {
                        if let Some(name) = self.names.get(&transcript.id) {
                            self.server_keys.insert(name.clone(), transcript.sk);
                        }
                        let bytes = msg2.to_bytes().to_vec();
                        self.metrics
                            .add_bytes(Phase::AuthKeyExchange, Side::Server, bytes.len());
                        reply(&env.from, bytes, "accepted")
                    }
                    Err(e) => outcome(e.code()),
                }
            }
            _ => outcome("malformed"),
        }
    }

    fn user_receive(&mut self, env: &Envelope) -> Reaction {
        let Some(agent) = self.agents.get_mut(&env.to) else {
            return outcome("no-such-entity");
        };
        match env.payload.len() {
            ProvisionalCard::WIRE_LEN => {
                let Some(scratch) = agent.scratch.take() else {
                    return outcome("unexpected");
                };
                let ledger = self.server.ledger_mut();
                let gateway = &mut agent.gateway;
                let (res, ops) = measure(|| {
                    let prov = ProvisionalCard::from_bytes(&env.payload)?;
                    Ok::<_, ProtocolError>(gateway.finalize_card(&prov, scratch, ledger))
                });
                self.metrics.charge(Phase::Registration, Side::User, ops);
                match res {
                    Ok(_) => outcome("card-issued"),
                    Err(e) => outcome(e.code()),
                }
            }
            Msg2::WIRE_LEN => {
                let Some(session) = agent.session.take() else {
                    return outcome("unexpected");
                };
                let gateway = &agent.gateway;
                let (res, ops) = measure(|| {
                    let msg2 = Msg2::from_bytes(&env.payload)?;
                    gateway.verify(&session, &msg2)
                });
                self.metrics.charge(Phase::AuthKeyExchange, Side::User, ops);
                match res {
                    Ok(sk) => {
                        agent.sk = Some(sk);
                        outcome("session-key")
                    }
                    Err(e) => outcome(e.code()),
                }
            }
            _ => outcome("malformed"),
        }
    }
}

fn outcome(s: &str) -> Reaction {
    Reaction {
        replies: Vec::new(),
        outcome: Some(s.to_string()),
    }
}

fn reply(to: &str, payload: Vec<u8>, s: &str) -> Reaction {
    Reaction {
        replies: vec![(to.to_string(), payload)],
        outcome: Some(s.to_string()),
    }
}

/// A server, any number of user gateways and the channel between them.
///
/// Primitive operations are metered on the current thread; keep one
/// simulation active per thread for the completeness check to hold.
#[derive(Debug)]
pub struct Simulation {
    config: SimConfig,
    net: Network,
    world: World,
    rng: ChaCha20Rng,
    baseline: OpCounters,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Self {
        let clock = Clock::new();
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let server = Server::setup(
            rng.next_u64(),
            clock.clone(),
            ServerConfig {
                delta_t: Timestamp(config.delta_t),
                perms: config.perms.clone(),
            },
        );
        let net = Network::new(clock, config.base_delay);
        Simulation {
            net,
            world: World {
                server,
                agents: BTreeMap::new(),
                names: HashMap::new(),
                scope: DEFAULT_SCOPE,
                metrics: MetricsBook::default(),
                outcomes: BTreeMap::new(),
                server_keys: HashMap::new(),
            },
            rng,
            baseline: snapshot(),
            config,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn server(&self) -> &Server {
        &self.world.server
    }

    pub fn now(&self) -> Timestamp {
        self.net.now()
    }

    pub fn event_log(&self) -> &EventLog {
        self.net.log()
    }

    pub fn metrics(&self) -> &MetricsBook {
        &self.world.metrics
    }

    pub fn scope(&self) -> Scope {
        self.world.scope
    }

    pub fn set_scope(&mut self, scope: Scope) {
        self.world.scope = scope;
    }

    pub fn add_action(&mut self, action: AdversaryAction) {
        self.net.add_action(action);
    }

    pub fn add_user(&mut self, name: &str, role: Role) {
        if let Some(agent) = self.world.agents.get_mut(name) {
            agent.role = role;
            return;
        }
        let creds = Credentials {
            id: Digest160::random(&mut self.rng),
            pw: random_password(&mut self.rng),
            bio: BioTemplate::random(&mut self.rng),
        };
        let gateway = Gateway::new(
            self.rng.next_u64(),
            self.net.clock().clone(),
            Timestamp(self.config.delta_t),
        );
        self.world.names.insert(creds.id, name.to_string());
        self.world.agents.insert(
            name.to_string(),
            Agent {
                role,
                gateway,
                creds,
                scratch: None,
                session: None,
                sk: None,
            },
        );
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.world.agents.keys().map(String::as_str)
    }

    pub fn role(&self, name: &str) -> Option<Role> {
        self.world.agents.get(name).map(|a| a.role)
    }

    pub fn credentials(&self, name: &str) -> Option<&Credentials> {
        self.world.agents.get(name).map(|a| &a.creds)
    }

    /// Latest outcome recorded for an entity.
    pub fn outcome(&self, entity: &str) -> Option<&str> {
        self.world.outcomes.get(entity).map(String::as_str)
    }

    pub fn user_key(&self, name: &str) -> Option<Digest160> {
        self.world.agents.get(name).and_then(|a| a.sk)
    }

    pub fn server_key(&self, name: &str) -> Option<Digest160> {
        self.world.server_keys.get(name).copied()
    }

    pub fn keys_match(&self, name: &str) -> bool {
        match (self.user_key(name), self.server_key(name)) {
            (Some(u), Some(s)) => u == s,
            _ => false,
        }
    }

    /// Delivers everything in flight.
    pub fn run(&mut self) -> EventLog {
        let world = &mut self.world;
        self.net.step(|env| world.deliver(env))
    }

    pub fn wait(&mut self, ms: u64) {
        self.run();
        self.net.wait(ms);
    }

    fn note(&mut self, entity: &str, outcome: &str) {
        self.world
            .outcomes
            .insert(entity.to_string(), outcome.to_string());
        self.net.note(entity, outcome);
    }

    fn ensure_user(&mut self, name: &str) {
        if !self.world.agents.contains_key(name) {
            self.add_user(name, DEFAULT_ROLE);
        }
    }

    pub fn register(&mut self, name: &str) {
        self.ensure_user(name);
        let role = self.world.agents[name].role;
        let server = &mut self.world.server;
        let (token, ops) = measure(|| server.issue_token(role));
        self.world
            .metrics
            .charge(Phase::Registration, Side::Server, ops);
        let token = match token {
            Ok(t) => t,
            Err(e) => return self.note(SERVER, e.code()),
        };
        let agent = self.world.agents.get_mut(name).expect("user exists");
        let gateway = &mut agent.gateway;
        let creds = &agent.creds;
        let ((req, scratch), ops) = measure(|| gateway.register_request(creds, &token));
        agent.scratch = Some(scratch);
        agent.sk = None;
        let bytes = req.to_bytes().to_vec();
        self.world
            .metrics
            .charge(Phase::Registration, Side::User, ops);
        self.world
            .metrics
            .add_bytes(Phase::Registration, Side::User, bytes.len());
        self.net.send(name, SERVER, bytes);
        self.run();
    }

    /// Local check and `Msg1`. Returns the seq of `Msg1` when one was sent.
    /// The channel is not run, so callers can schedule adversary actions
    /// around the in-flight message.
    pub fn start_login(&mut self, name: &str) -> Option<u64> {
        self.ensure_user(name);
        let noisy = self.config.bio_noise;
        let creds = {
            let base = self.world.agents[name].creds.clone();
            if noisy {
                Credentials {
                    bio: noisy_reading(&base.bio, &mut self.rng),
                    ..base
                }
            } else {
                base
            }
        };
        let agent = self.world.agents.get_mut(name).expect("user exists");
        let gateway = &agent.gateway;
        let ledger = self.world.server.ledger();
        let (res, ops) = measure(|| {
            let card = gateway.load_card(ledger)?;
            gateway.login(&creds, &card)
        });
        self.world.metrics.charge(Phase::Login, Side::User, ops);
        agent.sk = None;
        match res {
            Ok((msg1, session)) => {
                agent.session = Some(session);
                let bytes = msg1.to_bytes().to_vec();
                self.world
                    .metrics
                    .add_bytes(Phase::Login, Side::User, bytes.len());
                Some(self.net.send(name, SERVER, bytes))
            }
            Err(e) => {
                agent.session = None;
                self.note(name, e.code());
                None
            }
        }
    }

    pub fn login(&mut self, name: &str) -> Option<u64> {
        let seq = self.start_login(name);
        self.run();
        seq
    }

    /// Replaces the user's password and biometric template with fresh ones.
    pub fn update_credentials(&mut self, name: &str) {
        self.ensure_user(name);
        self.run();
        let new = {
            let old = &self.world.agents[name].creds;
            Credentials {
                id: old.id,
                pw: random_password(&mut self.rng),
                bio: BioTemplate::random(&mut self.rng),
            }
        };
        let agent = self.world.agents.get_mut(name).expect("user exists");
        let gateway = &mut agent.gateway;
        let old = &agent.creds;
        let ledger = self.world.server.ledger_mut();
        let (res, ops) = measure(|| {
            let card = gateway.load_card(ledger)?;
            gateway.update_credentials(old, &new, &card, ledger)
        });
        self.world
            .metrics
            .charge(Phase::CredUpdate, Side::User, ops);
        match res {
            Ok(_) => {
                agent.creds = new;
                self.note(name, "creds-updated");
            }
            Err(e) => self.note(name, e.code()),
        }
    }

    pub fn update_authorization(&mut self, name: &str, role: Option<Role>) {
        self.ensure_user(name);
        self.run();
        let agent = self.world.agents.get_mut(name).expect("user exists");
        let role = role.unwrap_or(agent.role);
        let id = agent.creds.id;
        let server = &mut self.world.server;
        let (res, ops) = measure(|| server.update_authorization(&id, role));
        self.world
            .metrics
            .charge(Phase::AuthzUpdate, Side::Server, ops);
        match res {
            Ok(_) => {
                agent.role = role;
                self.note(SERVER, "authz-updated");
            }
            Err(e) => self.note(SERVER, e.code()),
        }
    }

    pub fn honest(&mut self, phase: HonestPhase, name: &str, role: Option<Role>) {
        match phase {
            HonestPhase::Register => self.register(name),
            HonestPhase::Login => {
                self.login(name);
            }
            HonestPhase::UpdateCreds => self.update_credentials(name),
            HonestPhase::UpdateAuthz => self.update_authorization(name, role),
        }
    }

    /// Checks an expectation against the latest outcome. `keys-match` compares
    /// the user's and server's last session keys.
    pub fn expect(&mut self, entity: &str, expected: &str) -> Assertion {
        self.run();
        let name = format!("expect {entity} {expected}");
        if expected == "keys-match" {
            let ok = self.keys_match(entity);
            let detail = match (self.user_key(entity), self.server_key(entity)) {
                (Some(u), Some(s)) => format!("user={u} server={s}"),
                (u, s) => format!("user={} server={}", opt(u), opt(s)),
            };
            return Assertion::new(name, ok, detail);
        }
        let actual = self.outcome(entity).unwrap_or("none").to_string();
        Assertion::new(name, actual == expected, format!("actual={actual}"))
    }

    /// Runs one script step; `Expect` steps yield an assertion.
    pub fn apply(&mut self, step: &Step) -> Option<Assertion> {
        match step {
            Step::User { name, role } => self.add_user(name, *role),
            Step::Scope(scope) => self.set_scope(*scope),
            Step::Honest { phase, user, role } => self.honest(*phase, user, *role),
            Step::Wait(ms) => self.wait(*ms),
            Step::Expect { entity, outcome } => return Some(self.expect(entity, outcome)),
        }
        None
    }

    /// Builds a simulation for `scenario`, installs its adversary and runs
    /// its script. Returns the simulation and the expectation results.
    pub fn run_scenario(
        scenario: &Scenario,
        mut config: SimConfig,
    ) -> (Simulation, Vec<Assertion>) {
        config.seed = scenario.seed;
        config.base_delay = scenario.base_delay;
        if let Some(dt) = scenario.delta_t {
            config.delta_t = dt;
        }
        let mut sim = Simulation::new(config);
        for action in &scenario.actions {
            sim.net.add_action(action.clone());
        }
        for (seq, at) in &scenario.replays {
            sim.net.arm_replay(*seq, *at);
        }
        let mut assertions = Vec::new();
        for step in &scenario.script {
            if let Some(a) = sim.apply(step) {
                assertions.push(a);
            }
        }
        sim.run();
        (sim, assertions)
    }

    /// Operations metered on this thread since the simulation was built.
    pub fn global_ops(&self) -> OpCounters {
        snapshot() - self.baseline
    }

    /// Every attributed operation adds up to the thread's global delta.
    pub fn counters_complete(&self) -> bool {
        self.global_ops() == self.world.metrics.total()
    }

    /// Every payload put on the wire, every adversary capture and every
    /// ledger block payload.
    pub fn observable_bytes(&self) -> Vec<Vec<u8>> {
        let mut out: Vec<Vec<u8>> = self
            .net
            .history()
            .iter()
            .map(|e| e.payload.clone())
            .collect();
        out.extend(self.net.knowledge().values().cloned());
        out.extend(
            self.world
                .server
                .ledger()
                .blocks()
                .iter()
                .map(|b| b.payload.clone()),
        );
        out
    }

    /// Message payloads a user has sent, in order.
    pub fn sent_by(&self, name: &str) -> Vec<Vec<u8>> {
        self.net
            .history()
            .iter()
            .filter(|e| e.from == name)
            .map(|e| e.payload.clone())
            .collect()
    }
}

fn opt(d: Option<Digest160>) -> String {
    d.map_or_else(|| "none".to_string(), |d| d.to_hex())
}

fn random_password<R: Rng>(rng: &mut R) -> Vec<u8> {
    let mut pw = vec![0u8; 12];
    rng.fill_bytes(&mut pw);
    pw
}

/// Flips between zero and the tolerance worth of bits in every block.
pub fn noisy_reading<R: Rng>(bio: &BioTemplate, rng: &mut R) -> BioTemplate {
    let mut out = *bio;
    for block in 0..BLOCKS {
        let flips = rng.gen_range(0..=TOLERANCE);
        let mut chosen: Vec<usize> = Vec::with_capacity(flips);
        while chosen.len() < flips {
            let bit = block * REPETITION + rng.gen_range(0..REPETITION);
            if !chosen.contains(&bit) {
                chosen.push(bit);
            }
        }
        for bit in chosen {
            out.flip(bit);
        }
    }
    out
}
