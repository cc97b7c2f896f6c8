//! C ABI for the online disjoint set cover engine.
//!
//! Two entry styles:
//!
//! * **Sessions** ([`dsc_session_new`]) hold an engine and color edges one
//!   call at a time with the deterministic or randomized policy, exposing
//!   gain and potential as they go; [`dsc_session_report_json`] re-derives
//!   the full run report (offline optimum, competitive verdict, checks)
//!   for everything colored so far.
//! * **One-shot** ([`dsc_run_json`]) takes a complete instance as JSON and
//!   returns the run report as JSON.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`DscStatus`]; results travel through
//!   out-pointers that are written only on `DSC_STATUS_OK`.
//! * On any failure the per-thread error message is updated; fetch a copy
//!   with [`dsc_last_error_message`] (free it with [`dsc_string_free`]).
//! * Strings returned through out-pointers are NUL-terminated, owned by the
//!   caller, and must be released with [`dsc_string_free`]; sessions with
//!   [`dsc_session_free`]. Passing NULL to either free is a no-op.
//! * Status code 3 (`DSC_STATUS_INVARIANT_VIOLATION`) means an internal
//!   safety property failed — a bug, not bad input — mirroring the CLI's
//!   exit code 3.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dsc_core::engine::EngineState;
use dsc_core::model::parse_instance;
use dsc_core::policies::{det_decide, rand_policy, PolicyKind};
use dsc_core::potential::Potential;
use dsc_core::runner::{run, RunOptions};
use dsc_core::{Error, InstanceSpec};

/// Result of every fallible call in this ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DscStatus {
    /// Success; out-pointers have been written.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// Malformed input: bad JSON, unknown policy, node ids out of range, …
    InvalidInput = 2,
    /// An internal safety property failed; see the last error message.
    InvariantViolation = 3,
    /// A panic was caught at the ABI boundary.
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn fail(e: &Error) -> DscStatus {
    set_error(&e.to_string());
    match e {
        Error::Invariant { .. } => DscStatus::InvariantViolation,
        _ => DscStatus::InvalidInput,
    }
}

fn fail_null(what: &str) -> DscStatus {
    set_error(&format!("{what} must not be NULL"));
    DscStatus::NullArgument
}

fn fail_input(message: &str) -> DscStatus {
    set_error(message);
    DscStatus::InvalidInput
}

fn guard(f: impl FnOnce() -> DscStatus) -> DscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic caught at the ABI boundary");
            DscStatus::Panic
        }
    }
}

/// An in-progress online coloring. Opaque; create with [`dsc_session_new`],
/// destroy with [`dsc_session_free`].
pub struct DscSession {
    policy: PolicyKind,
    seed: u64,
    engine: EngineState,
    potential: Potential,
    rng: ChaCha8Rng,
    edges: Vec<Vec<u32>>,
}

impl DscSession {
    fn color_edge(&mut self, edge: &[u32]) -> Result<(u32, u64), Error> {
        let mut edge = edge.to_vec();
        edge.sort_unstable();
        edge.dedup();
        if edge.is_empty() {
            return Err(Error::InvalidArgument("an edge needs at least one node".into()));
        }
        let n = self.engine.n();
        if edge[0] == 0 || edge[edge.len() - 1] > n {
            return Err(Error::InvalidArgument(format!(
                "edge nodes must lie in 1..={n}"
            )));
        }
        let (kstar, color) = match self.policy {
            PolicyKind::Det => {
                let out = det_decide(&mut self.potential, &self.engine, &edge)?;
                (out.decision.kstar, out.decision.color)
            }
            PolicyKind::Rand => rand_policy(&self.engine, &edge, &mut self.rng)?,
            _ => unreachable!("session construction rejects other policies"),
        };
        let effect = self.engine.apply_color(&edge, kstar, color)?;
        let phi = self.potential.advance(&self.engine, &effect)?;
        // The deterministic argmin can never push Φ above its starting value.
        let n_f = f64::from(n);
        if self.policy == PolicyKind::Det && phi > n_f * (1.0 + 1e-9) {
            return Err(Error::Invariant {
                step: self.engine.step(),
                check: "phi-cap",
                detail: format!("Φ = {phi} exceeded n = {n_f}"),
            });
        }
        self.edges.push(edge);
        Ok((kstar, color.get()))
    }

    fn report_json(&self, check: bool) -> Result<String, Error> {
        let instance = InstanceSpec::new(self.engine.n(), self.edges.clone())?;
        // Re-derive the run from the recorded inputs: both policies are pure
        // functions of (instance, seed), so this reproduces the session.
        let opts = RunOptions {
            policy: self.policy,
            seed: self.seed,
            check,
            ..RunOptions::default()
        };
        let output = run(&instance, &opts)?;
        output.report.to_json()
    }
}

/// Create a session over nodes `1..=n`.
///
/// `policy` must be `"det"` (deterministic potential argmin) or `"rand"`
/// (uniform palette and color); `seed` feeds the `rand` policy and is
/// ignored by `det`. Writes the new session to `out`.
///
/// # Safety
///
/// `policy` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsc_session_new(
    n: u32,
    policy: *const c_char,
    seed: u64,
    out: *mut *mut DscSession,
) -> DscStatus {
    guard(|| {
        if out.is_null() {
            return fail_null("out");
        }
        if policy.is_null() {
            return fail_null("policy");
        }
        let policy = match unsafe { CStr::from_ptr(policy) }.to_str() {
            Ok(s) => s,
            Err(_) => return fail_input("policy is not valid UTF-8"),
        };
        let kind = match policy.parse::<PolicyKind>() {
            Ok(k) => k,
            Err(e) => return fail(&e),
        };
        if !matches!(kind, PolicyKind::Det | PolicyKind::Rand) {
            return fail_input("sessions support the det and rand policies only");
        }
        let engine = match EngineState::init(n) {
            Ok(e) => e,
            Err(e) => return fail(&e),
        };
        let potential = match Potential::new(&engine) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        let session = Box::new(DscSession {
            policy: kind,
            seed,
            engine,
            potential,
            rng: ChaCha8Rng::seed_from_u64(seed),
            edges: Vec::new(),
        });
        unsafe { out.write(Box::into_raw(session)) };
        DscStatus::Ok
    })
}

/// Color the next edge. `nodes`/`len` give the edge (1-based ids; order and
/// duplicates are tolerated). On success writes the chosen palette index and
/// color; either out-pointer may be NULL if the value is not wanted.
///
/// # Safety
///
/// `session` must come from [`dsc_session_new`] and `nodes` must point to
/// `len` readable `uint32_t`s.
#[no_mangle]
pub unsafe extern "C" fn dsc_session_color_edge(
    session: *mut DscSession,
    nodes: *const u32,
    len: usize,
    out_palette: *mut u32,
    out_color: *mut u64,
) -> DscStatus {
    guard(|| {
        let Some(session) = (unsafe { session.as_mut() }) else {
            return fail_null("session");
        };
        if nodes.is_null() {
            return fail_null("nodes");
        }
        let edge = unsafe { slice::from_raw_parts(nodes, len) };
        match session.color_edge(edge) {
            Ok((kstar, color)) => {
                if !out_palette.is_null() {
                    unsafe { out_palette.write(kstar) };
                }
                if !out_color.is_null() {
                    unsafe { out_color.write(color) };
                }
                DscStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of fully used colors so far.
///
/// # Safety
///
/// `session` must come from [`dsc_session_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dsc_session_gain(
    session: *const DscSession,
    out: *mut u64,
) -> DscStatus {
    guard(|| {
        let Some(session) = (unsafe { session.as_ref() }) else {
            return fail_null("session");
        };
        if out.is_null() {
            return fail_null("out");
        }
        unsafe { out.write(session.engine.fully_used_count()) };
        DscStatus::Ok
    })
}

/// Current value of the potential Φ (starts at `n`, never exceeds it under
/// the deterministic policy).
///
/// # Safety
///
/// `session` must come from [`dsc_session_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dsc_session_phi(
    session: *const DscSession,
    out: *mut f64,
) -> DscStatus {
    guard(|| {
        let Some(session) = (unsafe { session.as_ref() }) else {
            return fail_null("session");
        };
        if out.is_null() {
            return fail_null("out");
        }
        unsafe { out.write(session.potential.phi()) };
        DscStatus::Ok
    })
}

/// Number of edges colored so far.
///
/// # Safety
///
/// `session` must come from [`dsc_session_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dsc_session_steps(
    session: *const DscSession,
    out: *mut u64,
) -> DscStatus {
    guard(|| {
        let Some(session) = (unsafe { session.as_ref() }) else {
            return fail_null("session");
        };
        if out.is_null() {
            return fail_null("out");
        }
        unsafe { out.write(session.engine.step()) };
        DscStatus::Ok
    })
}

/// Build the full run report (offline optimum, competitive verdict, and —
/// when `check` is set — the whole per-step checker battery) for the edges
/// colored so far, as owned JSON.
///
/// # Safety
///
/// `session` must come from [`dsc_session_new`]; `out` must be valid. Free
/// the string with [`dsc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn dsc_session_report_json(
    session: *const DscSession,
    check: bool,
    out: *mut *mut c_char,
) -> DscStatus {
    guard(|| {
        let Some(session) = (unsafe { session.as_ref() }) else {
            return fail_null("session");
        };
        if out.is_null() {
            return fail_null("out");
        }
        match session.report_json(check) {
            Ok(json) => match CString::new(json) {
                Ok(s) => {
                    unsafe { out.write(s.into_raw()) };
                    DscStatus::Ok
                }
                Err(_) => fail_input("report JSON contained an interior NUL"),
            },
            Err(e) => fail(&e),
        }
    })
}

/// Destroy a session. NULL is a no-op.
///
/// # Safety
///
/// `session` must come from [`dsc_session_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dsc_session_free(session: *mut DscSession) {
    if !session.is_null() {
        drop(unsafe { Box::from_raw(session) });
    }
}

/// One-shot: parse an instance from JSON (`{"n": …, "edges": [[…], …]}`),
/// run the named policy (`"det"`, `"rand"`, or `"greedy"`) over it, and
/// return the run report as owned JSON.
///
/// # Safety
///
/// `instance_json` and `policy` must be NUL-terminated strings; `out_report`
/// must be valid. Free the result with [`dsc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn dsc_run_json(
    instance_json: *const c_char,
    policy: *const c_char,
    seed: u64,
    check: bool,
    out_report: *mut *mut c_char,
) -> DscStatus {
    guard(|| {
        if out_report.is_null() {
            return fail_null("out_report");
        }
        if instance_json.is_null() {
            return fail_null("instance_json");
        }
        if policy.is_null() {
            return fail_null("policy");
        }
        let json = match unsafe { CStr::from_ptr(instance_json) }.to_str() {
            Ok(s) => s,
            Err(_) => return fail_input("instance_json is not valid UTF-8"),
        };
        let policy = match unsafe { CStr::from_ptr(policy) }.to_str() {
            Ok(s) => s,
            Err(_) => return fail_input("policy is not valid UTF-8"),
        };
        let kind = match policy.parse::<PolicyKind>() {
            Ok(k) => k,
            Err(e) => return fail(&e),
        };
        if kind == PolicyKind::Replay {
            return fail_input("the replay policy consumes a trace; use det, rand, or greedy");
        }
        let instance = match parse_instance(json) {
            Ok(i) => i,
            Err(e) => return fail(&e),
        };
        let opts = RunOptions {
            policy: kind,
            seed,
            check,
            ..RunOptions::default()
        };
        let report = match run(&instance, &opts) {
            Ok(output) => output.report,
            Err(e) => return fail(&e),
        };
        match report.to_json() {
            Ok(json) => match CString::new(json) {
                Ok(s) => {
                    unsafe { out_report.write(s.into_raw()) };
                    DscStatus::Ok
                }
                Err(_) => fail_input("report JSON contained an interior NUL"),
            },
            Err(e) => fail(&e),
        }
    })
}

/// Free a string returned by this library. NULL is a no-op.
///
/// # Safety
///
/// `s` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn dsc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Copy of the calling thread's most recent error message, or NULL when no
/// error has occurred. Free it with [`dsc_string_free`].
#[no_mangle]
pub extern "C" fn dsc_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}
