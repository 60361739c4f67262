//! Deterministic discrete-event model of the insecure channel.
//!
//! Every envelope is delivered at `send_time + base_delay` unless a scripted
//! adversary action intervenes. Events are processed in `(time, seq)` order
//! and the shared [`Clock`] only moves when an event is processed or the
//! driver explicitly waits.

mod scenario;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use thiserror::Error;

use crate::primitives::{sha256_160, Clock, Digest160, Timestamp};

pub use scenario::{HonestPhase, ParseError, Scenario, Step};

pub const DEFAULT_BASE_DELAY_MS: u64 = 50;
pub const SERVER: &str = "hms";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("seq {0} was never captured by the adversary")]
    UnknownSeq(u64),
    #[error("replay time {at} is before the current time {now}")]
    InPast { at: Timestamp, now: Timestamp },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub seq: u64,
    pub from: String,
    pub to: String,
    pub payload: Vec<u8>,
    pub send_time: Timestamp,
    pub deliver_time: Timestamp,
}

/// Which envelopes an action applies to. `None` fields match anything.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Matcher {
    pub from: Option<String>,
    pub to: Option<String>,
    pub seq: Option<u64>,
}

impl Matcher {
    pub fn seq(seq: u64) -> Self {
        Matcher {
            seq: Some(seq),
            ..Matcher::default()
        }
    }

    pub fn any() -> Self {
        Matcher::default()
    }

    pub fn matches(&self, from: &str, to: &str, seq: u64) -> bool {
        self.from.as_deref().is_none_or(|f| f == from)
            && self.to.as_deref().is_none_or(|t| t == to)
            && self.seq.is_none_or(|s| s == seq)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActionKind {
    Eavesdrop,
    Drop,
    Delay { extra: u64 },
    Modify { byte_offset: usize, xor_mask: u8 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryAction {
    pub kind: ActionKind,
    pub matcher: Matcher,
}

impl AdversaryAction {
    pub fn new(kind: ActionKind, matcher: Matcher) -> Self {
        AdversaryAction { kind, matcher }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Sent {
        at: Timestamp,
        seq: u64,
        from: String,
        to: String,
        len: usize,
        deliver_at: Timestamp,
    },
    Captured {
        at: Timestamp,
        seq: u64,
    },
    Dropped {
        at: Timestamp,
        seq: u64,
    },
    Delayed {
        at: Timestamp,
        seq: u64,
        extra: u64,
    },
    Modified {
        at: Timestamp,
        seq: u64,
        offset: usize,
        mask: u8,
    },
    ReplayScheduled {
        at: Timestamp,
        seq: u64,
        deliver_at: Timestamp,
    },
    ReplaySkipped {
        at: Timestamp,
        seq: u64,
        wanted: Timestamp,
    },
    Delivered {
        at: Timestamp,
        seq: u64,
        from: String,
        to: String,
        replay: bool,
    },
    Outcome {
        at: Timestamp,
        entity: String,
        outcome: String,
    },
    Waited {
        at: Timestamp,
        ms: u64,
    },
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Sent {
                at,
                seq,
                from,
                to,
                len,
                deliver_at,
            } => {
                write!(
                    f,
                    "{at} send seq={seq} {from}->{to} len={len} deliver={deliver_at}"
                )
            }
            Event::Captured { at, seq } => write!(f, "{at} capture seq={seq}"),
            Event::Dropped { at, seq } => write!(f, "{at} drop seq={seq}"),
            Event::Delayed { at, seq, extra } => write!(f, "{at} delay seq={seq} extra={extra}"),
            Event::Modified {
                at,
                seq,
                offset,
                mask,
            } => {
                write!(f, "{at} modify seq={seq} offset={offset} mask={mask:02x}")
            }
            Event::ReplayScheduled {
                at,
                seq,
                deliver_at,
            } => {
                write!(f, "{at} replay seq={seq} deliver={deliver_at}")
            }
            Event::ReplaySkipped { at, seq, wanted } => {
                write!(f, "{at} replay-skipped seq={seq} wanted={wanted}")
            }
            Event::Delivered {
                at,
                seq,
                from,
                to,
                replay,
            } => {
                write!(f, "{at} deliver seq={seq} {from}->{to}")?;
                if *replay {
                    f.write_str(" replay")?;
                }
                Ok(())
            }
            Event::Outcome {
                at,
                entity,
                outcome,
            } => write!(f, "{at} outcome {entity} {outcome}"),
            Event::Waited { at, ms } => write!(f, "{at} wait {ms}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.events.iter().map(|e| e.to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in self.lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn digest(&self) -> Digest160 {
        sha256_160(&[self.to_text().as_bytes()])
    }
}

/// What an entity does with a delivered envelope.
#[derive(Clone, Debug, Default)]
pub struct Reaction {
    /// `(to, payload)` pairs sent by the receiving entity.
    pub replies: Vec<(String, Vec<u8>)>,
    pub outcome: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct QueueKey {
    time: Timestamp,
    seq: u64,
    order: u64,
}

#[derive(Clone, Debug)]
struct Pending {
    env: Envelope,
    replay: bool,
}

#[derive(Clone, Debug)]
pub struct Network {
    clock: Clock,
    base_delay: u64,
    actions: Vec<AdversaryAction>,
    armed_replays: Vec<(u64, Timestamp)>,
    next_seq: u64,
    order: u64,
    queue: BinaryHeap<Reverse<(QueueKey, u64)>>,
    pending: BTreeMap<u64, Pending>,
    knowledge: BTreeMap<u64, Vec<u8>>,
    history: Vec<Envelope>,
    log: EventLog,
}

impl Network {
    pub fn new(clock: Clock, base_delay: u64) -> Self {
        Network {
            clock,
            base_delay,
            actions: Vec::new(),
            armed_replays: Vec::new(),
            next_seq: 0,
            order: 0,
            queue: BinaryHeap::new(),
            pending: BTreeMap::new(),
            knowledge: BTreeMap::new(),
            history: Vec::new(),
            log: EventLog::default(),
        }
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn base_delay(&self) -> u64 {
        self.base_delay
    }

    pub fn set_base_delay(&mut self, ms: u64) {
        self.base_delay = ms;
    }

    pub fn add_action(&mut self, action: AdversaryAction) {
        self.actions.push(action);
    }

    /// Replays `seq` at `at` as soon as the adversary has captured it.
    /// Installs the eavesdrop this requires.
    pub fn arm_replay(&mut self, seq: u64, at: Timestamp) {
        self.actions.push(AdversaryAction::new(
            ActionKind::Eavesdrop,
            Matcher::seq(seq),
        ));
        self.armed_replays.push((seq, at));
    }

    /// The seq the next `send` will get.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Payloads captured by eavesdrop actions, keyed by seq.
    pub fn knowledge(&self) -> &BTreeMap<u64, Vec<u8>> {
        &self.knowledge
    }

    /// Every envelope ever sent, as the sender emitted it.
    pub fn history(&self) -> &[Envelope] {
        &self.history
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn is_quiescent(&self) -> bool {
        self.queue.is_empty()
    }

    fn record(&mut self, e: Event) {
        self.log.events.push(e);
    }

    fn enqueue(&mut self, env: Envelope, replay: bool) {
        let order = self.order;
        self.order += 1;
        let key = QueueKey {
            time: env.deliver_time,
            seq: env.seq,
            order,
        };
        self.pending.insert(order, Pending { env, replay });
        self.queue.push(Reverse((key, order)));
    }

    pub fn send(&mut self, from: &str, to: &str, payload: Vec<u8>) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        let now = self.now();
        let mut env = Envelope {
            seq,
            from: from.to_string(),
            to: to.to_string(),
            payload,
            send_time: now,
            deliver_time: now.saturating_add(self.base_delay),
        };
        self.history.push(env.clone());
        self.record(Event::Sent {
            at: now,
            seq,
            from: env.from.clone(),
            to: env.to.clone(),
            len: env.payload.len(),
            deliver_at: env.deliver_time,
        });

        let matching: Vec<ActionKind> = self
            .actions
            .iter()
            .filter(|a| a.matcher.matches(from, to, seq))
            .map(|a| a.kind.clone())
            .collect();
        let mut dropped = false;
        if matching.contains(&ActionKind::Eavesdrop) {
            self.knowledge.insert(seq, env.payload.clone());
            self.record(Event::Captured { at: now, seq });
        }
        for kind in &matching {
            match *kind {
                ActionKind::Eavesdrop => {}
                ActionKind::Drop => {
                    if !dropped {
                        dropped = true;
                        self.record(Event::Dropped { at: now, seq });
                    }
                }
                ActionKind::Delay { extra } => {
                    env.deliver_time = env.deliver_time.saturating_add(extra);
                    self.record(Event::Delayed {
                        at: now,
                        seq,
                        extra,
                    });
                }
                ActionKind::Modify {
                    byte_offset,
                    xor_mask,
                } => {
                    if let Some(b) = env.payload.get_mut(byte_offset) {
                        *b ^= xor_mask;
                        self.record(Event::Modified {
                            at: now,
                            seq,
                            offset: byte_offset,
                            mask: xor_mask,
                        });
                    }
                }
            }
        }

        let armed: Vec<Timestamp> = self
            .armed_replays
            .iter()
            .filter(|(s, _)| *s == seq)
            .map(|(_, at)| *at)
            .collect();
        for at in armed {
            if let Err(ChannelError::InPast { at, .. }) = self.replay(seq, at) {
                self.record(Event::ReplaySkipped {
                    at: now,
                    seq,
                    wanted: at,
                });
            }
        }

        if !dropped {
            self.enqueue(env, false);
        }
        seq
    }

    /// Injects a byte-identical copy of a captured envelope, delivered at
    /// `at`.
    pub fn replay(&mut self, of_seq: u64, at: Timestamp) -> Result<(), ChannelError> {
        let payload = self
            .knowledge
            .get(&of_seq)
            .cloned()
            .ok_or(ChannelError::UnknownSeq(of_seq))?;
        let now = self.now();
        if at < now {
            return Err(ChannelError::InPast { at, now });
        }
        let original = self
            .history
            .iter()
            .find(|e| e.seq == of_seq)
            .expect("captured seqs are in history");
        let env = Envelope {
            seq: of_seq,
            from: original.from.clone(),
            to: original.to.clone(),
            payload,
            send_time: now,
            deliver_time: at,
        };
        self.record(Event::ReplayScheduled {
            at: now,
            seq: of_seq,
            deliver_at: at,
        });
        self.enqueue(env, true);
        Ok(())
    }

    /// Moves the clock forward while nothing is in flight.
    pub fn wait(&mut self, ms: u64) {
        let at = self.clock.advance(ms);
        self.record(Event::Waited { at, ms });
    }

    /// Processes events until the queue is empty. `deliver` is invoked for
    /// each delivery; its replies are sent at the delivery time. Returns the
    /// events logged during this call.
    pub fn step<F>(&mut self, mut deliver: F) -> EventLog
    where
        F: FnMut(&Envelope) -> Reaction,
    {
        let start = self.log.events.len();
        while let Some(Reverse((key, order))) = self.queue.pop() {
            let Pending { env, replay } = self.pending.remove(&order).expect("queued entry");
            self.clock.advance_to(key.time);
            let now = self.now();
            self.record(Event::Delivered {
                at: now,
                seq: env.seq,
                from: env.from.clone(),
                to: env.to.clone(),
                replay,
            });
            let reaction = deliver(&env);
            if let Some(outcome) = reaction.outcome {
                self.record(Event::Outcome {
                    at: now,
                    entity: env.to.clone(),
                    outcome,
                });
            }
            for (to, payload) in reaction.replies {
                self.send(&env.to, &to, payload);
            }
        }
        EventLog {
            events: self.log.events[start..].to_vec(),
        }
    }

    /// Appends an entity outcome that did not come from a delivery.
    pub fn note(&mut self, entity: &str, outcome: impl Into<String>) {
        let at = self.now();
        self.record(Event::Outcome {
            at,
            entity: entity.to_string(),
            outcome: outcome.into(),
        });
    }
}
