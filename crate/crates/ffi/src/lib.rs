//! C ABI over the `l2ai` simulator.
//!
//! Every function returns an [`L2aiStatus`] unless it is a constructor,
//! destructor or plain query. Handles are opaque and must be released with
//! their matching `_free` function. Strings passed in are NUL-terminated
//! UTF-8. Text is returned by copying into a caller buffer: the required
//! size including the terminating NUL is written to `needed`, and
//! `L2AI_STATUS_BUFFER_TOO_SMALL` is returned when `cap` is short.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use l2ai::channel::{ActionKind, AdversaryAction, Matcher, SERVER};
use l2ai::harness::{
    run_scenario_text, run_suite, HarnessError, Report, RunOptions, SimConfig, Simulation,
};
use l2ai::primitives::{hash, Timestamp, DIGEST_LEN};
use l2ai::protocol::{Role, Scope};

/// Length in bytes of every digest and session key crossing the boundary.
pub const L2AI_DIGEST_LEN: usize = 20;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L2aiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    UnknownUser = 4,
    NoResponse = 5,
    NoSessionKey = 6,
    InvalidRole = 7,
    UnknownToken = 8,
    LocalVerifyFailed = 9,
    Stale = 10,
    UnknownPrincipal = 11,
    Unauthorized = 12,
    BadMac = 13,
    NotFound = 14,
    Malformed = 15,
    LedgerError = 16,
    ScenarioParse = 17,
    UnknownSuite = 18,
    Io = 19,
    BufferTooSmall = 20,
    Unexpected = 21,
    Panic = 22,
}

impl L2aiStatus {
    fn from_outcome(code: &str) -> L2aiStatus {
        match code {
            "invalid-role" => L2aiStatus::InvalidRole,
            "unknown-token" => L2aiStatus::UnknownToken,
            "local-verify-failed" => L2aiStatus::LocalVerifyFailed,
            "stale" => L2aiStatus::Stale,
            "unknown-principal" => L2aiStatus::UnknownPrincipal,
            "unauthorized" => L2aiStatus::Unauthorized,
            "bad-mac" => L2aiStatus::BadMac,
            "not-found" => L2aiStatus::NotFound,
            "malformed" => L2aiStatus::Malformed,
            "ledger-error" => L2aiStatus::LedgerError,
            _ => L2aiStatus::Unexpected,
        }
    }

    fn name(self) -> &'static CStr {
        match self {
            L2aiStatus::Ok => c"ok",
            L2aiStatus::NullPointer => c"null-pointer",
            L2aiStatus::InvalidUtf8 => c"invalid-utf8",
            L2aiStatus::InvalidArgument => c"invalid-argument",
            L2aiStatus::UnknownUser => c"unknown-user",
            L2aiStatus::NoResponse => c"no-response",
            L2aiStatus::NoSessionKey => c"no-session-key",
            L2aiStatus::InvalidRole => c"invalid-role",
            L2aiStatus::UnknownToken => c"unknown-token",
            L2aiStatus::LocalVerifyFailed => c"local-verify-failed",
            L2aiStatus::Stale => c"stale",
            L2aiStatus::UnknownPrincipal => c"unknown-principal",
            L2aiStatus::Unauthorized => c"unauthorized",
            L2aiStatus::BadMac => c"bad-mac",
            L2aiStatus::NotFound => c"not-found",
            L2aiStatus::Malformed => c"malformed",
            L2aiStatus::LedgerError => c"ledger-error",
            L2aiStatus::ScenarioParse => c"scenario-parse",
            L2aiStatus::UnknownSuite => c"unknown-suite",
            L2aiStatus::Io => c"io",
            L2aiStatus::BufferTooSmall => c"buffer-too-small",
            L2aiStatus::Unexpected => c"unexpected",
            L2aiStatus::Panic => c"panic",
        }
    }
}

impl From<&HarnessError> for L2aiStatus {
    fn from(e: &HarnessError) -> Self {
        match e {
            HarnessError::Parse { .. } | HarnessError::PermTable(_) => L2aiStatus::ScenarioParse,
            HarnessError::UnknownSuite(_) => L2aiStatus::UnknownSuite,
            HarnessError::Io { .. } => L2aiStatus::Io,
        }
    }
}

/// A simulated deployment: one server, any number of users, and the
/// adversarial channel between them.
pub struct L2aiSim {
    inner: Simulation,
}

/// The result of a scenario or suite run.
pub struct L2aiReport {
    inner: Report,
}

type Result<T> = std::result::Result<T, L2aiStatus>;

fn guard(f: impl FnOnce() -> Result<()>) -> L2aiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => L2aiStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => L2aiStatus::Panic,
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str> {
    if p.is_null() {
        return Err(L2aiStatus::NullPointer);
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| L2aiStatus::InvalidUtf8)
}

unsafe fn sim_mut<'a>(sim: *mut L2aiSim) -> Result<&'a mut Simulation> {
    sim.as_mut()
        .map(|s| &mut s.inner)
        .ok_or(L2aiStatus::NullPointer)
}

unsafe fn known_user<'a>(
    sim: *mut L2aiSim,
    name: *const c_char,
) -> Result<(&'a mut Simulation, &'a str)> {
    let sim = sim_mut(sim)?;
    let name = text(name)?;
    if sim.role(name).is_none() {
        return Err(L2aiStatus::UnknownUser);
    }
    Ok((sim, name))
}

unsafe fn copy_out(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<()> {
    let bytes = s.as_bytes();
    let want = bytes.len() + 1;
    if let Some(n) = needed.as_mut() {
        *n = want;
    }
    if cap < want {
        return Err(L2aiStatus::BufferTooSmall);
    }
    if buf.is_null() {
        return Err(L2aiStatus::NullPointer);
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
    *buf.add(bytes.len()) = 0;
    Ok(())
}

unsafe fn digest_out(d: &[u8; DIGEST_LEN], out: *mut u8) -> Result<()> {
    if out.is_null() {
        return Err(L2aiStatus::NullPointer);
    }
    ptr::copy_nonoverlapping(d.as_ptr(), out, DIGEST_LEN);
    Ok(())
}

fn outcome_lines(sim: &Simulation, entity: &str) -> usize {
    let prefix = format!(" outcome {entity} ");
    sim.event_log()
        .lines()
        .filter(|l| l.contains(&prefix))
        .count()
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn l2ai_status_str(status: L2aiStatus) -> *const c_char {
    status.name().as_ptr()
}

/// Truncated SHA-256 of `len` bytes at `data`, written to `out`
/// (`L2AI_DIGEST_LEN` bytes).
///
/// # Safety
/// `data` must point to `len` readable bytes (or be null with `len == 0`)
/// and `out` to `L2AI_DIGEST_LEN` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn l2ai_hash(data: *const u8, len: usize, out: *mut u8) -> L2aiStatus {
    guard(|| {
        let input: &[u8] = if len == 0 {
            &[]
        } else if data.is_null() {
            return Err(L2aiStatus::NullPointer);
        } else {
            std::slice::from_raw_parts(data, len)
        };
        digest_out(hash(input).as_bytes(), out)
    })
}

/// New simulation with default settings. Never returns null.
#[no_mangle]
pub extern "C" fn l2ai_sim_new(seed: u64) -> *mut L2aiSim {
    Box::into_raw(Box::new(L2aiSim {
        inner: Simulation::new(SimConfig::new(seed)),
    }))
}

/// New simulation with an explicit freshness window and per-hop delay,
/// both in milliseconds.
#[no_mangle]
pub extern "C" fn l2ai_sim_new_with(
    seed: u64,
    delta_t_ms: u64,
    base_delay_ms: u64,
) -> *mut L2aiSim {
    let mut config = SimConfig::new(seed);
    config.delta_t = delta_t_ms;
    config.base_delay = base_delay_ms;
    Box::into_raw(Box::new(L2aiSim {
        inner: Simulation::new(config),
    }))
}

/// # Safety
/// `sim` must come from `l2ai_sim_new*` and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_free(sim: *mut L2aiSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Adds a user holding `role` (a role code such as `"D"` or `"SA"`).
///
/// # Safety
/// `sim` must be a live handle; `name` and `role` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_add_user(
    sim: *mut L2aiSim,
    name: *const c_char,
    role: *const c_char,
) -> L2aiStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        let name = text(name)?;
        let role: Role = text(role)?
            .parse()
            .map_err(|_| L2aiStatus::InvalidArgument)?;
        if name.is_empty() || name == SERVER {
            return Err(L2aiStatus::InvalidArgument);
        }
        sim.add_user(name, role);
        Ok(())
    })
}

/// Sets the scope requested by subsequent logins, by name
/// (for example `"read-patient-vitals"`).
///
/// # Safety
/// `sim` must be a live handle; `scope` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_set_scope(sim: *mut L2aiSim, scope: *const c_char) -> L2aiStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        let scope: Scope = text(scope)?
            .parse()
            .map_err(|_| L2aiStatus::InvalidArgument)?;
        sim.set_scope(scope);
        Ok(())
    })
}

/// Runs registration for a known user through the channel.
///
/// # Safety
/// `sim` must be a live handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_register(sim: *mut L2aiSim, name: *const c_char) -> L2aiStatus {
    guard(|| {
        let (sim, name) = known_user(sim, name)?;
        let before = outcome_lines(sim, name);
        sim.register(name);
        match sim.outcome(name) {
            Some("card-issued") if outcome_lines(sim, name) > before => Ok(()),
            _ if outcome_lines(sim, SERVER) == 0 => Err(L2aiStatus::NoResponse),
            _ => match sim.outcome(SERVER) {
                Some("registered") | None => Err(L2aiStatus::NoResponse),
                Some(code) => Err(L2aiStatus::from_outcome(code)),
            },
        }
    })
}

/// Runs login and authentication for a known user. Returns
/// `L2AI_STATUS_OK` once both sides hold the session key.
///
/// # Safety
/// `sim` must be a live handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_login(sim: *mut L2aiSim, name: *const c_char) -> L2aiStatus {
    guard(|| {
        let (sim, name) = known_user(sim, name)?;
        let server_before = outcome_lines(sim, SERVER);
        let user_before = outcome_lines(sim, name);
        if sim.login(name).is_none() {
            return Err(sim
                .outcome(name)
                .map_or(L2aiStatus::Unexpected, L2aiStatus::from_outcome));
        }
        if sim.user_key(name).is_some() {
            return Ok(());
        }
        if outcome_lines(sim, SERVER) == server_before {
            return Err(L2aiStatus::NoResponse);
        }
        match sim.outcome(SERVER) {
            Some("accepted") if outcome_lines(sim, name) == user_before => {
                Err(L2aiStatus::NoResponse)
            }
            Some("accepted") => Err(sim
                .outcome(name)
                .map_or(L2aiStatus::Unexpected, L2aiStatus::from_outcome)),
            Some(code) => Err(L2aiStatus::from_outcome(code)),
            None => Err(L2aiStatus::Unexpected),
        }
    })
}

/// Replaces a known user's password and biometric template.
///
/// # Safety
/// `sim` must be a live handle; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_update_credentials(
    sim: *mut L2aiSim,
    name: *const c_char,
) -> L2aiStatus {
    guard(|| {
        let (sim, name) = known_user(sim, name)?;
        sim.update_credentials(name);
        match sim.outcome(name) {
            Some("creds-updated") => Ok(()),
            Some(code) => Err(L2aiStatus::from_outcome(code)),
            None => Err(L2aiStatus::Unexpected),
        }
    })
}

/// Rewrites a known user's authorization record. A null `role` keeps the
/// current role and only rotates the record.
///
/// # Safety
/// `sim` must be a live handle; `name` a NUL-terminated string; `role`
/// null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_update_authorization(
    sim: *mut L2aiSim,
    name: *const c_char,
    role: *const c_char,
) -> L2aiStatus {
    guard(|| {
        let (sim, name) = known_user(sim, name)?;
        let role = if role.is_null() {
            None
        } else {
            Some(
                text(role)?
                    .parse::<Role>()
                    .map_err(|_| L2aiStatus::InvalidArgument)?,
            )
        };
        sim.update_authorization(name, role);
        match sim.outcome(SERVER) {
            Some("authz-updated") => Ok(()),
            Some(code) => Err(L2aiStatus::from_outcome(code)),
            None => Err(L2aiStatus::Unexpected),
        }
    })
}

/// Writes the user's current session key (`L2AI_DIGEST_LEN` bytes).
///
/// # Safety
/// `sim` must be a live handle; `name` a NUL-terminated string; `out`
/// must hold `L2AI_DIGEST_LEN` bytes.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_session_key(
    sim: *mut L2aiSim,
    name: *const c_char,
    out: *mut u8,
) -> L2aiStatus {
    guard(|| {
        let (sim, name) = known_user(sim, name)?;
        let key = sim.user_key(name).ok_or(L2aiStatus::NoSessionKey)?;
        digest_out(key.as_bytes(), out)
    })
}

/// True when user and server hold the same session key for `name`.
/// False for invalid arguments.
///
/// # Safety
/// `sim` must be null or a live handle; `name` null or a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_keys_match(sim: *const L2aiSim, name: *const c_char) -> bool {
    catch_unwind(AssertUnwindSafe(|| match (sim.as_ref(), text(name)) {
        (Some(sim), Ok(name)) => sim.inner.keys_match(name),
        _ => false,
    }))
    .unwrap_or(false)
}

/// Delivers everything in flight, then advances the clock by `ms`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_wait(sim: *mut L2aiSim, ms: u64) -> L2aiStatus {
    guard(|| {
        sim_mut(sim)?.wait(ms);
        Ok(())
    })
}

/// Current simulated time in milliseconds, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_now(sim: *const L2aiSim) -> u64 {
    sim.as_ref().map_or(0, |s| s.inner.now().millis())
}

/// Sequence number the next message on the channel will carry, or 0 for a
/// null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_next_seq(sim: *const L2aiSim) -> u64 {
    sim.as_ref().map_or(0, |s| s.inner.net().next_seq())
}

/// Drops the message with sequence number `seq` when it is sent.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_drop(sim: *mut L2aiSim, seq: u64) -> L2aiStatus {
    guard(|| {
        sim_mut(sim)?.add_action(AdversaryAction::new(ActionKind::Drop, Matcher::seq(seq)));
        Ok(())
    })
}

/// Adds `extra_ms` of delay to the message with sequence number `seq`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_delay(sim: *mut L2aiSim, seq: u64, extra_ms: u64) -> L2aiStatus {
    guard(|| {
        sim_mut(sim)?.add_action(AdversaryAction::new(
            ActionKind::Delay { extra: extra_ms },
            Matcher::seq(seq),
        ));
        Ok(())
    })
}

/// XORs `mask` into byte `offset` of the message with sequence number
/// `seq`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_modify(
    sim: *mut L2aiSim,
    seq: u64,
    offset: usize,
    mask: u8,
) -> L2aiStatus {
    guard(|| {
        if mask == 0 {
            return Err(L2aiStatus::InvalidArgument);
        }
        sim_mut(sim)?.add_action(AdversaryAction::new(
            ActionKind::Modify {
                byte_offset: offset,
                xor_mask: mask,
            },
            Matcher::seq(seq),
        ));
        Ok(())
    })
}

/// Captures the message with sequence number `seq` and re-delivers a copy
/// at simulated time `at_ms`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_replay(sim: *mut L2aiSim, seq: u64, at_ms: u64) -> L2aiStatus {
    guard(|| {
        sim_mut(sim)?.net_mut().arm_replay(seq, Timestamp(at_ms));
        Ok(())
    })
}

/// Copies the channel event log, one event per line.
///
/// # Safety
/// `sim` must be a live handle; `buf` must hold `cap` bytes; `needed` may
/// be null.
#[no_mangle]
pub unsafe extern "C" fn l2ai_sim_event_log(
    sim: *const L2aiSim,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> L2aiStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or(L2aiStatus::NullPointer)?;
        copy_out(&sim.inner.event_log().to_text(), buf, cap, needed)
    })
}

unsafe fn store_report(
    result: std::result::Result<Report, HarnessError>,
    out: *mut *mut L2aiReport,
) -> Result<()> {
    let report = result.map_err(|e| L2aiStatus::from(&e))?;
    *out = Box::into_raw(Box::new(L2aiReport { inner: report }));
    Ok(())
}

/// Parses and runs scenario text with the given seed. On success `*out`
/// receives a report handle.
///
/// # Safety
/// `scenario` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn l2ai_run_scenario(
    scenario: *const c_char,
    seed: u64,
    out: *mut *mut L2aiReport,
) -> L2aiStatus {
    guard(|| {
        if out.is_null() {
            return Err(L2aiStatus::NullPointer);
        }
        let body = text(scenario)?;
        let opts = RunOptions {
            seed: Some(seed),
            ..RunOptions::default()
        };
        store_report(run_scenario_text("ffi", body, &opts), out)
    })
}

/// Runs a built-in suite (`honest`, `attacks`, `metrics` or `fuzz`) from
/// the given base seed. On success `*out` receives a report handle.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn l2ai_run_suite(
    name: *const c_char,
    seed: u64,
    out: *mut *mut L2aiReport,
) -> L2aiStatus {
    guard(|| {
        if out.is_null() {
            return Err(L2aiStatus::NullPointer);
        }
        let name = text(name)?;
        let opts = RunOptions {
            seed: Some(seed),
            ..RunOptions::default()
        };
        store_report(run_suite(name, &opts), out)
    })
}

/// True when every assertion in the report passed. False for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_report_passed(report: *const L2aiReport) -> bool {
    report.as_ref().is_some_and(|r| r.inner.passed())
}

/// Number of failed assertions, or 0 for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn l2ai_report_failures(report: *const L2aiReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.failures().count())
}

/// Copies the rendered text report.
///
/// # Safety
/// `report` must be a live handle; `buf` must hold `cap` bytes; `needed`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn l2ai_report_render(
    report: *const L2aiReport,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> L2aiStatus {
    guard(|| {
        let report = report.as_ref().ok_or(L2aiStatus::NullPointer)?;
        copy_out(&report.inner.render(), buf, cap, needed)
    })
}

/// # Safety
/// `report` must come from `l2ai_run_*` and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn l2ai_report_free(report: *mut L2aiReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
