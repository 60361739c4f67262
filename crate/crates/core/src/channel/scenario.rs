use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::primitives::Timestamp;
use crate::protocol::{Role, Scope};

use super::{ActionKind, AdversaryAction, Matcher, DEFAULT_BASE_DELAY_MS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HonestPhase {
    Register,
    Login,
    UpdateCreds,
    UpdateAuthz,
}

impl HonestPhase {
    pub fn name(self) -> &'static str {
        match self {
            HonestPhase::Register => "register",
            HonestPhase::Login => "login",
            HonestPhase::UpdateCreds => "update-creds",
            HonestPhase::UpdateAuthz => "update-authz",
        }
    }
}

impl FromStr for HonestPhase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "register" => Ok(HonestPhase::Register),
            "login" => Ok(HonestPhase::Login),
            "update-creds" => Ok(HonestPhase::UpdateCreds),
            "update-authz" => Ok(HonestPhase::UpdateAuthz),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

impl fmt::Display for HonestPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One line of a scenario's honest script.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    User {
        name: String,
        role: Role,
    },
    Scope(Scope),
    Honest {
        phase: HonestPhase,
        user: String,
        role: Option<Role>,
    },
    Wait(u64),
    Expect {
        entity: String,
        outcome: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub id: String,
    pub seed: u64,
    pub base_delay: u64,
    pub delta_t: Option<u64>,
    pub actions: Vec<AdversaryAction>,
    pub replays: Vec<(u64, Timestamp)>,
    pub script: Vec<Step>,
}

impl Scenario {
    pub fn new(id: impl Into<String>, seed: u64) -> Self {
        Scenario {
            id: id.into(),
            seed,
            base_delay: DEFAULT_BASE_DELAY_MS,
            delta_t: None,
            actions: Vec::new(),
            replays: Vec::new(),
            script: Vec::new(),
        }
    }

    /// Parses the line-oriented scenario format. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(id: impl Into<String>, text: &str) -> Result<Scenario, ParseError> {
        let mut sc = Scenario::new(id, 0);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            sc.parse_line(&words)
                .map_err(|msg| ParseError { line, msg })?;
        }
        Ok(sc)
    }

    fn parse_line(&mut self, w: &[&str]) -> Result<(), String> {
        let arity = |n: usize| -> Result<(), String> {
            if w.len() == n + 1 {
                Ok(())
            } else {
                Err(format!(
                    "`{}` takes {n} argument(s), got {}",
                    w[0],
                    w.len() - 1
                ))
            }
        };
        match w[0] {
            "seed" => {
                arity(1)?;
                self.seed = num(w[1])?;
            }
            "delay" => {
                arity(1)?;
                self.base_delay = num(w[1])?;
            }
            "delta-t" => {
                arity(1)?;
                self.delta_t = Some(num(w[1])?);
            }
            "drop" => {
                arity(3)?;
                let matcher = matcher(w[1], w[2], w[3])?;
                self.actions
                    .push(AdversaryAction::new(ActionKind::Drop, matcher));
            }
            "eavesdrop" => {
                arity(3)?;
                let matcher = matcher(w[1], w[2], w[3])?;
                self.actions
                    .push(AdversaryAction::new(ActionKind::Eavesdrop, matcher));
            }
            "lag" => {
                arity(2)?;
                let seq = num(w[1])?;
                let extra = num(w[2])?;
                self.actions.push(AdversaryAction::new(
                    ActionKind::Delay { extra },
                    Matcher::seq(seq),
                ));
            }
            "modify" => {
                arity(3)?;
                let seq = num(w[1])?;
                let byte_offset = num(w[2])? as usize;
                let xor_mask = u8::from_str_radix(w[3].trim_start_matches("0x"), 16)
                    .map_err(|_| format!("bad mask `{}`", w[3]))?;
                self.actions.push(AdversaryAction::new(
                    ActionKind::Modify {
                        byte_offset,
                        xor_mask,
                    },
                    Matcher::seq(seq),
                ));
            }
            "replay" => {
                arity(2)?;
                self.replays.push((num(w[1])?, Timestamp(num(w[2])?)));
            }
            "user" => {
                arity(2)?;
                let role = w[2].parse::<Role>().map_err(|e| e.to_string())?;
                self.script.push(Step::User {
                    name: w[1].to_string(),
                    role,
                });
            }
            "scope" => {
                arity(1)?;
                let scope = w[1].parse::<Scope>().map_err(|e| e.to_string())?;
                self.script.push(Step::Scope(scope));
            }
            "honest" => {
                if w.len() != 3 && w.len() != 4 {
                    return Err("`honest` takes <phase> <user> [role]".into());
                }
                let phase = w[1].parse::<HonestPhase>()?;
                let role = match w.get(3) {
                    Some(r) if phase == HonestPhase::UpdateAuthz => {
                        Some(r.parse::<Role>().map_err(|e| e.to_string())?)
                    }
                    Some(_) => return Err(format!("phase `{phase}` takes no role")),
                    None => None,
                };
                self.script.push(Step::Honest {
                    phase,
                    user: w[2].to_string(),
                    role,
                });
            }
            "wait" => {
                arity(1)?;
                self.script.push(Step::Wait(num(w[1])?));
            }
            "expect" => {
                arity(2)?;
                self.script.push(Step::Expect {
                    entity: w[1].to_string(),
                    outcome: w[2].to_string(),
                });
            }
            other => return Err(format!("unknown directive `{other}`")),
        }
        Ok(())
    }
}

fn num(s: &str) -> Result<u64, String> {
    s.parse::<u64>().map_err(|_| format!("bad number `{s}`"))
}

fn matcher(from: &str, to: &str, seq: &str) -> Result<Matcher, String> {
    let field = |s: &str| (s != "*").then(|| s.to_string());
    Ok(Matcher {
        from: field(from),
        to: field(to),
        seq: if seq == "*" { None } else { Some(num(seq)?) },
    })
}
