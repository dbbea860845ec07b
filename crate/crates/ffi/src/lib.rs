//! C interface to the ppsync simulator.
//!
//! Scenarios and runs are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns a
//! [`PpsyncStatus`]; on failure a message is kept per thread and can be read
//! with [`ppsync_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ppsync::config::{parse_config, parse_with_overrides, serialize_config, ScenarioConfig};
use ppsync::error::{Error, ErrorCategory};
use ppsync::ppf::{r_factor, transform_error, PpfParams, SignBranch};
use ppsync::sim::{run_scenario, summary_toml, write_trace_csv, RunOutput};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpsyncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Graph = 4,
    Filter = 5,
    FunnelViolation = 6,
    Numerical = 7,
    Model = 8,
    Io = 9,
    UnknownExample = 10,
    OutOfRange = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

impl From<ErrorCategory> for PpsyncStatus {
    fn from(c: ErrorCategory) -> Self {
        match c {
            ErrorCategory::Config => PpsyncStatus::Config,
            ErrorCategory::Graph => PpsyncStatus::Graph,
            ErrorCategory::Filter => PpsyncStatus::Filter,
            ErrorCategory::FunnelViolation => PpsyncStatus::FunnelViolation,
            ErrorCategory::Numerical => PpsyncStatus::Numerical,
            ErrorCategory::Model => PpsyncStatus::Model,
            ErrorCategory::Io => PpsyncStatus::Io,
            ErrorCategory::UnknownExample => PpsyncStatus::UnknownExample,
        }
    }
}

/// Which side of the funnel an error started on.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpsyncBranch {
    Positive = 0,
    Negative = 1,
}

/// Funnel parameters of one channel.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpsyncPpf {
    pub rho0: f64,
    pub rho_inf: f64,
    pub ell: f64,
    pub delta_upper: f64,
    pub delta_lower: f64,
}

/// A parsed, validated scenario.
pub struct PpsyncScenario {
    config: ScenarioConfig,
}

/// The result of one simulation, possibly cut short.
pub struct PpsyncRun {
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: PpsyncStatus, msg: impl Into<String>) -> PpsyncStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> PpsyncStatus {
    fail(e.category().into(), e.to_string())
}

fn guard(f: impl FnOnce() -> PpsyncStatus) -> PpsyncStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PpsyncStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, PpsyncStatus> {
    if p.is_null() {
        return Err(fail(PpsyncStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(PpsyncStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Copy `text` into `buf` as a NUL-terminated string. `needed` (if not
/// null) receives the required size including the terminator.
unsafe fn write_str(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> PpsyncStatus {
    match copy_str(text, buf, len, needed) {
        PpsyncStatus::BufferTooSmall => fail(PpsyncStatus::BufferTooSmall, format!("buffer needs {} bytes", text.len() + 1)),
        s => s,
    }
}

/// `write_str` without touching the last error.
unsafe fn copy_str(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> PpsyncStatus {
    let required = text.len() + 1;
    if !needed.is_null() {
        *needed = required;
    }
    if buf.is_null() || len < required {
        return PpsyncStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    PpsyncStatus::Ok
}

fn boxed<T>(value: T, out: *mut *mut T) -> PpsyncStatus {
    unsafe { *out = Box::into_raw(Box::new(value)) };
    PpsyncStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ppsync_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the calling thread's last error message into `buf`. Writes an
/// empty string when there is none.
///
/// # Safety
/// `buf` must be valid for `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ppsync_last_error_message(buf: *mut c_char, len: usize, needed: *mut usize) -> PpsyncStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().as_ref().map(|c| c.to_string_lossy().into_owned()).unwrap_or_default());
    copy_str(&msg, buf, len, needed)
}

/// Parse a TOML scenario document.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppsync_scenario_from_toml(text: *const c_char, out: *mut *mut PpsyncScenario) -> PpsyncStatus {
    guard(|| {
        if out.is_null() {
            return fail(PpsyncStatus::NullPointer, "null output handle");
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config(text) {
            Ok(config) => boxed(PpsyncScenario { config }, out),
            Err(e) => from_error(&e.into()),
        }
    })
}

/// One of the built-in scenarios, `"example1"` or `"example2"`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppsync_scenario_builtin(name: *const c_char, out: *mut *mut PpsyncScenario) -> PpsyncStatus {
    guard(|| {
        if out.is_null() {
            return fail(PpsyncStatus::NullPointer, "null output handle");
        }
        let name = match read_str(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        if !ppsync::cli::EXAMPLES.contains(&name) {
            return from_error(&Error::UnknownExample(name.into()));
        }
        match ScenarioConfig::builtin(name) {
            Ok(config) => boxed(PpsyncScenario { config }, out),
            Err(e) => from_error(&e.into()),
        }
    })
}

/// Apply one `section.key=value` override in place. On error the scenario
/// is left unchanged.
///
/// # Safety
/// `scenario` must come from this library; `assignment` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ppsync_scenario_set(scenario: *mut PpsyncScenario, assignment: *const c_char) -> PpsyncStatus {
    guard(|| {
        let Some(sc) = scenario.as_mut() else {
            return fail(PpsyncStatus::NullPointer, "null scenario");
        };
        let assignment = match read_str(assignment) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_with_overrides(&serialize_config(&sc.config), &[assignment.to_string()]) {
            Ok(config) => {
                sc.config = config;
                PpsyncStatus::Ok
            }
            Err(e) => from_error(&e.into()),
        }
    })
}

/// Number of agents of a scenario, 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ppsync_scenario_agents(scenario: *const PpsyncScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.config.agents())
}

/// Serialize a scenario back to TOML.
///
/// # Safety
/// `scenario` must come from this library; `buf` must be valid for `len`
/// bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ppsync_scenario_to_toml(
    scenario: *const PpsyncScenario,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PpsyncStatus {
    guard(|| match scenario.as_ref() {
        None => fail(PpsyncStatus::NullPointer, "null scenario"),
        Some(sc) => write_str(&serialize_config(&sc.config), buf, len, needed),
    })
}

/// Graph, filter and gain checks without simulating, as a TOML report.
///
/// # Safety
/// As for [`ppsync_scenario_to_toml`].
#[no_mangle]
pub unsafe extern "C" fn ppsync_scenario_check(
    scenario: *const PpsyncScenario,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PpsyncStatus {
    guard(|| {
        let Some(sc) = scenario.as_ref() else {
            return fail(PpsyncStatus::NullPointer, "null scenario");
        };
        match ppsync::cli::check_config(&sc.config) {
            Ok(report) => write_str(&toml::to_string(&report).expect("representable"), buf, len, needed),
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `scenario` must be null or come from this library, and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ppsync_scenario_free(scenario: *mut PpsyncScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Simulate a scenario. A run that leaves the funnel after the first
/// sample still yields a handle; query it with [`ppsync_run_status`].
///
/// # Safety
/// `scenario` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppsync_run(scenario: *const PpsyncScenario, out: *mut *mut PpsyncRun) -> PpsyncStatus {
    guard(|| {
        let Some(sc) = scenario.as_ref() else {
            return fail(PpsyncStatus::NullPointer, "null scenario");
        };
        if out.is_null() {
            return fail(PpsyncStatus::NullPointer, "null output handle");
        }
        let result = sc.config.to_scenario().map_err(Error::from).and_then(|s| Ok(run_scenario(&s)?));
        match result {
            Ok(output) => boxed(PpsyncRun { output }, out),
            Err(e) => from_error(&e),
        }
    })
}

/// `PPSYNC_STATUS_OK` if the run reached the horizon, otherwise the category
/// of the error that stopped it.
///
/// # Safety
/// `run` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_status(run: *const PpsyncRun) -> PpsyncStatus {
    guard(|| match run.as_ref() {
        None => fail(PpsyncStatus::NullPointer, "null run"),
        Some(r) => match &r.output.aborted {
            None => PpsyncStatus::Ok,
            Some(e) => fail(e.category().into(), e.to_string()),
        },
    })
}

/// Whether the run completed with no funnel violation and a finite state.
///
/// # Safety
/// `run` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_passed(run: *const PpsyncRun) -> bool {
    run.as_ref().is_some_and(|r| r.output.summary.passed())
}

/// # Safety
/// `run` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_sample_count(run: *const PpsyncRun) -> usize {
    run.as_ref().map_or(0, |r| r.output.trace.samples.len())
}

/// Time of sample `k`.
///
/// # Safety
/// `run` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_time(run: *const PpsyncRun, k: usize, out: *mut f64) -> PpsyncStatus {
    sample_value(run, k, 0, 0, out, |s, _, _| s.t)
}

/// Output `x¹` of one agent and channel (0-based) at sample `k`.
///
/// # Safety
/// As for [`ppsync_run_time`].
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_output(
    run: *const PpsyncRun,
    k: usize,
    agent: usize,
    channel: usize,
    out: *mut f64,
) -> PpsyncStatus {
    sample_value(run, k, agent, channel, out, |s, i, ch| s.x[i][ch])
}

/// Synchronization error `e¹` of one agent and channel at sample `k`.
///
/// # Safety
/// As for [`ppsync_run_time`].
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_error(
    run: *const PpsyncRun,
    k: usize,
    agent: usize,
    channel: usize,
    out: *mut f64,
) -> PpsyncStatus {
    sample_value(run, k, agent, channel, out, |s, i, ch| s.e[i][ch])
}

/// Funnel radius of one agent and channel at sample `k`.
///
/// # Safety
/// As for [`ppsync_run_time`].
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_funnel(
    run: *const PpsyncRun,
    k: usize,
    agent: usize,
    channel: usize,
    out: *mut f64,
) -> PpsyncStatus {
    sample_value(run, k, agent, channel, out, |s, i, ch| s.rho[i][ch])
}

/// Control input of one agent and channel at sample `k`.
///
/// # Safety
/// As for [`ppsync_run_time`].
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_input(
    run: *const PpsyncRun,
    k: usize,
    agent: usize,
    channel: usize,
    out: *mut f64,
) -> PpsyncStatus {
    sample_value(run, k, agent, channel, out, |s, i, ch| s.u[i][ch])
}

unsafe fn sample_value(
    run: *const PpsyncRun,
    k: usize,
    agent: usize,
    channel: usize,
    out: *mut f64,
    pick: impl FnOnce(&ppsync::sim::TraceSample, usize, usize) -> f64,
) -> PpsyncStatus {
    guard(|| {
        let Some(r) = run.as_ref() else {
            return fail(PpsyncStatus::NullPointer, "null run");
        };
        if out.is_null() {
            return fail(PpsyncStatus::NullPointer, "null output");
        }
        let trace = &r.output.trace;
        if k >= trace.samples.len() || agent >= trace.agents || channel >= trace.channels {
            return fail(
                PpsyncStatus::OutOfRange,
                format!(
                    "index (sample {k}, agent {agent}, channel {channel}) outside {}×{}×{}",
                    trace.samples.len(),
                    trace.agents,
                    trace.channels
                ),
            );
        }
        *out = pick(&trace.samples[k], agent, channel);
        PpsyncStatus::Ok
    })
}

/// The run summary as TOML.
///
/// # Safety
/// `run` must come from this library; `buf` must be valid for `len` bytes;
/// `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_summary_toml(
    run: *const PpsyncRun,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PpsyncStatus {
    guard(|| match run.as_ref() {
        None => fail(PpsyncStatus::NullPointer, "null run"),
        Some(r) => write_str(&summary_toml(&r.output.summary), buf, len, needed),
    })
}

/// Write the full trace as CSV.
///
/// # Safety
/// `run` must come from this library; `path` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_write_trace(run: *const PpsyncRun, path: *const c_char) -> PpsyncStatus {
    guard(|| {
        let Some(r) = run.as_ref() else {
            return fail(PpsyncStatus::NullPointer, "null run");
        };
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let written = std::fs::File::create(path)
            .and_then(|f| write_trace_csv(&r.output.trace, std::io::BufWriter::new(f)));
        match written {
            Ok(()) => PpsyncStatus::Ok,
            Err(source) => from_error(&Error::Io { path: path.into(), source }),
        }
    })
}

/// # Safety
/// `run` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ppsync_run_free(run: *mut PpsyncRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

fn ppf_params(p: &PpsyncPpf) -> Result<PpfParams, PpsyncStatus> {
    PpfParams::new(p.rho0, p.rho_inf, p.ell, p.delta_upper, p.delta_lower)
        .map_err(|e| fail(PpsyncStatus::Config, e.to_string()))
}

fn branch(b: PpsyncBranch) -> SignBranch {
    match b {
        PpsyncBranch::Positive => SignBranch::Positive,
        PpsyncBranch::Negative => SignBranch::Negative,
    }
}

/// Transformed error `ε` of an error `e` inside a funnel of radius `rho`.
///
/// # Safety
/// `params` must point to a valid struct; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppsync_transform_error(
    e: f64,
    rho: f64,
    params: *const PpsyncPpf,
    side: PpsyncBranch,
    out: *mut f64,
) -> PpsyncStatus {
    scalar(params, out, |p| transform_error(e, rho, p, branch(side)).map_err(|v| v.to_string()))
}

/// Scaling factor `r` of the transformed-error derivative.
///
/// # Safety
/// As for [`ppsync_transform_error`].
#[no_mangle]
pub unsafe extern "C" fn ppsync_r_factor(
    e: f64,
    rho: f64,
    params: *const PpsyncPpf,
    side: PpsyncBranch,
    out: *mut f64,
) -> PpsyncStatus {
    scalar(params, out, |p| r_factor(e, rho, p, branch(side)).map_err(|v| v.to_string()))
}

unsafe fn scalar(
    params: *const PpsyncPpf,
    out: *mut f64,
    f: impl FnOnce(&PpfParams) -> Result<f64, String>,
) -> PpsyncStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return fail(PpsyncStatus::NullPointer, "null argument");
        };
        let p = match ppf_params(p) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match f(&p) {
            Ok(v) => {
                *out = v;
                PpsyncStatus::Ok
            }
            Err(msg) => fail(PpsyncStatus::FunnelViolation, msg),
        }
    })
}
