//! Roles, scopes and the permission table consulted during authentication.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::primitives::Timestamp;

/// The shipped permission table.
pub const DEFAULT_PERMISSIONS: &str = include_str!("../../config/permissions.txt");

const MINUTES_PER_DAY: u64 = 24 * 60;

/// Authorization groups, one per token class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Doctor,
    Nurse,
    Patient,
    Drug,
    Hospital,
    SystemAdmin,
    Emergency,
    Laboratory,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::Doctor,
        Role::Nurse,
        Role::Patient,
        Role::Drug,
        Role::Hospital,
        Role::SystemAdmin,
        Role::Emergency,
        Role::Laboratory,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Role::Doctor => "D",
            Role::Nurse => "N",
            Role::Patient => "P",
            Role::Drug => "M",
            Role::Hospital => "H",
            Role::SystemAdmin => "SA",
            Role::Emergency => "E",
            Role::Laboratory => "L",
        }
    }

    pub fn to_byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Option<Role> {
        Role::ALL.get(b as usize).copied()
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown role `{0}`")]
pub struct UnknownRole(pub String);

impl FromStr for Role {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownRole(s.to_string()))
    }
}

/// Data-access scopes a session may request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    ReadPatientVitals,
    ReadOtherPatientVitals,
    ReadOwnVitals,
    ReadOwnRecord,
    ReadPatientRecord,
    WritePatientRecord,
    ReadPrescription,
    WritePrescription,
    DispenseMedication,
    ReadLabResults,
    WriteLabResults,
    EmergencyOverride,
    ReadHospitalStats,
    ManageUsers,
}

impl Scope {
    pub const ALL: [Scope; 14] = [
        Scope::ReadPatientVitals,
        Scope::ReadOtherPatientVitals,
        Scope::ReadOwnVitals,
        Scope::ReadOwnRecord,
        Scope::ReadPatientRecord,
        Scope::WritePatientRecord,
        Scope::ReadPrescription,
        Scope::WritePrescription,
        Scope::DispenseMedication,
        Scope::ReadLabResults,
        Scope::WriteLabResults,
        Scope::EmergencyOverride,
        Scope::ReadHospitalStats,
        Scope::ManageUsers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scope::ReadPatientVitals => "read-patient-vitals",
            Scope::ReadOtherPatientVitals => "read-other-patient-vitals",
            Scope::ReadOwnVitals => "read-own-vitals",
            Scope::ReadOwnRecord => "read-own-record",
            Scope::ReadPatientRecord => "read-patient-record",
            Scope::WritePatientRecord => "write-patient-record",
            Scope::ReadPrescription => "read-prescription",
            Scope::WritePrescription => "write-prescription",
            Scope::DispenseMedication => "dispense-medication",
            Scope::ReadLabResults => "read-lab-results",
            Scope::WriteLabResults => "write-lab-results",
            Scope::EmergencyOverride => "emergency-override",
            Scope::ReadHospitalStats => "read-hospital-stats",
            Scope::ManageUsers => "manage-users",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown scope `{0}`")]
pub struct UnknownScope(pub String);

impl FromStr for Scope {
    type Err = UnknownScope;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scope::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| UnknownScope(s.to_string()))
    }
}

/// Daily window in minutes since midnight, `[start, end)`. Wraps past
/// midnight when `start > end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeWindow {
    pub start_minute: u16,
    pub end_minute: u16,
}

impl TimeWindow {
    pub fn contains(&self, at: Timestamp) -> bool {
        let minute = (at.millis() / 60_000 % MINUTES_PER_DAY) as u16;
        if self.start_minute <= self.end_minute {
            (self.start_minute..self.end_minute).contains(&minute)
        } else {
            minute >= self.start_minute || minute < self.end_minute
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScopeSet {
    All,
    Only(BTreeSet<Scope>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RolePermissions {
    pub scopes: ScopeSet,
    pub window: Option<TimeWindow>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermTableError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Role → allowed scopes plus an optional daily time window.
///
/// Text format, one role per line, `#` starts a comment:
///
/// ```text
/// D   read-patient-vitals,write-prescription
/// SA  *
/// L   read-lab-results window=420-1140
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermissionTable {
    entries: BTreeMap<Role, RolePermissions>,
}

impl Default for PermissionTable {
    fn default() -> Self {
        PermissionTable::parse(DEFAULT_PERMISSIONS).expect("shipped permission table parses")
    }
}

impl PermissionTable {
    pub fn parse(text: &str) -> Result<Self, PermTableError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |msg: String| PermTableError::Parse { line, msg };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut fields = content.split_whitespace();
            let role: Role = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|e: UnknownRole| err(e.to_string()))?;
            let scope_field = fields
                .next()
                .ok_or_else(|| err("missing scope list".into()))?;
            let scopes = if scope_field == "*" {
                ScopeSet::All
            } else if scope_field == "-" {
                ScopeSet::Only(BTreeSet::new())
            } else {
                let mut set = BTreeSet::new();
                for name in scope_field.split(',').filter(|s| !s.is_empty()) {
                    set.insert(name.parse().map_err(|e: UnknownScope| err(e.to_string()))?);
                }
                ScopeSet::Only(set)
            };
            let mut window = None;
            for extra in fields {
                let spec = extra
                    .strip_prefix("window=")
                    .ok_or_else(|| err(format!("unexpected field `{extra}`")))?;
                let (a, b) = spec
                    .split_once('-')
                    .ok_or_else(|| err("window must be start-end".into()))?;
                let parse_min = |s: &str| -> Result<u16, PermTableError> {
                    let m: u16 = s.parse().map_err(|_| err(format!("bad minute `{s}`")))?;
                    if u64::from(m) > MINUTES_PER_DAY {
                        return Err(err(format!("minute {m} out of range")));
                    }
                    Ok(m)
                };
                window = Some(TimeWindow {
                    start_minute: parse_min(a)?,
                    end_minute: parse_min(b)?,
                });
            }
            if entries
                .insert(role, RolePermissions { scopes, window })
                .is_some()
            {
                return Err(err(format!("duplicate role {role}")));
            }
        }
        Ok(PermissionTable { entries })
    }

    pub fn roles(&self) -> impl Iterator<Item = Role> + '_ {
        self.entries.keys().copied()
    }

    pub fn contains_role(&self, role: Role) -> bool {
        self.entries.contains_key(&role)
    }

    pub fn get(&self, role: Role) -> Option<&RolePermissions> {
        self.entries.get(&role)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether `role` may use `scope` at time `at`.
    pub fn authorize(&self, role: Role, scope: Scope, at: Timestamp) -> bool {
        let Some(perms) = self.entries.get(&role) else {
            return false;
        };
        let in_scope = match &perms.scopes {
            ScopeSet::All => true,
            ScopeSet::Only(set) => set.contains(&scope),
        };
        in_scope && perms.window.is_none_or(|w| w.contains(at))
    }
}
