//! C ABI over the bps-vortex solver.
//!
//! Every call returns a [`BpsStatus`]. On failure a message is kept per thread
//! and can be read with [`bps_last_error`]. Runs are opaque handles created by
//! [`bps_run_new`] and released by [`bps_run_free`]; strings handed out by the
//! library are released with [`bps_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bps_vortex::cli::config::{parse_config, RunConfig};
use bps_vortex::cli::report::{RunReport, Status};
use bps_vortex::cli::{evaluate, Command};
use bps_vortex::diagnostics::{physical_logs, reconstruct_physical};
use bps_vortex::setup::{threshold, ModelTag};
use bps_vortex::{Error, Problem, StatePair};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ThresholdViolated = 3,
    NotConverged = 4,
    NotSolved = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpsModel {
    Base = 0,
    Extended = 1,
}

/// Result of [`bps_check_existence`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BpsThreshold {
    pub first: f64,
    pub second: f64,
    pub margin: f64,
    pub solvable: bool,
}

/// Opaque run handle.
pub struct BpsRun {
    config: RunConfig,
    report: Option<RunReport>,
    solved: Option<(Problem, StatePair)>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: BpsStatus, msg: impl Into<String>) -> BpsStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> BpsStatus) -> BpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(BpsStatus::Internal, "panic inside the solver"),
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, BpsStatus> {
    if p.is_null() {
        return Err(fail(BpsStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(BpsStatus::InvalidArgument, "string argument is not UTF-8"))
}

/// Message for the most recent failure on this thread; empty if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Torus existence test for `n` zeros of `phi` and `m` zeros of `kappa`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `BpsThreshold`.
#[no_mangle]
pub unsafe extern "C" fn bps_check_existence(
    model: BpsModel,
    lambda: f64,
    area: f64,
    n: usize,
    m: usize,
    out: *mut BpsThreshold,
) -> BpsStatus {
    guard(|| {
        if out.is_null() {
            return fail(BpsStatus::NullPointer, "out is null");
        }
        if !(lambda.is_finite() && lambda > 0.0 && area.is_finite() && area > 0.0) {
            return fail(
                BpsStatus::InvalidArgument,
                "lambda and area must be positive",
            );
        }
        let tag = match model {
            BpsModel::Base => ModelTag::Base,
            BpsModel::Extended => ModelTag::Extended,
        };
        let r = threshold(tag, lambda, area, n, m);
        *out = BpsThreshold {
            first: r.first,
            second: r.second,
            margin: r.margin,
            solvable: r.solvable,
        };
        BpsStatus::Ok
    })
}

/// Parses a JSON run configuration into a new handle.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bps_run_new(
    config_json: *const c_char,
    out: *mut *mut BpsRun,
) -> BpsStatus {
    guard(|| {
        if out.is_null() {
            return fail(BpsStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let text = match c_str(config_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let config = match parse_config(text).and_then(|c| c.validate().map(|_| c)) {
            Ok(c) => c,
            Err(e) => return fail(BpsStatus::InvalidArgument, e.to_string()),
        };
        *out = Box::into_raw(Box::new(BpsRun {
            config,
            report: None,
            solved: None,
        }));
        BpsStatus::Ok
    })
}

/// Solves the configured problem with the configured method.
///
/// A report is available afterwards even when the status is
/// `ThresholdViolated` or `NotConverged`.
///
/// # Safety
/// `run` must be a handle from [`bps_run_new`].
#[no_mangle]
pub unsafe extern "C" fn bps_run_solve(run: *mut BpsRun) -> BpsStatus {
    guard(|| {
        let Some(run) = run.as_mut() else {
            return fail(BpsStatus::NullPointer, "run is null");
        };
        let eval = match evaluate(Command::Solve, &run.config) {
            Ok(e) => e,
            Err(e) => return fail(BpsStatus::InvalidArgument, e.to_string()),
        };
        let outcome = eval.report.outcome.clone();
        run.report = Some(eval.report);
        run.solved = eval.solved;
        let message = outcome.message.unwrap_or_default();
        match outcome.status {
            Status::Ok => BpsStatus::Ok,
            Status::ThresholdViolated => fail(BpsStatus::ThresholdViolated, message),
            Status::NotConverged => fail(BpsStatus::NotConverged, message),
            Status::Error => fail(BpsStatus::Internal, message),
        }
    })
}

/// Number of grid nodes, i.e. the length of every field.
///
/// # Safety
/// `run` must be a handle from [`bps_run_new`]; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bps_run_node_count(run: *const BpsRun, out: *mut usize) -> BpsStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), out.is_null()) else {
            return fail(BpsStatus::NullPointer, "null argument");
        };
        match run.config.grid() {
            Ok(g) => {
                *out = g.len();
                BpsStatus::Ok
            }
            Err(e) => fail(BpsStatus::InvalidArgument, e.to_string()),
        }
    })
}

fn field_values(problem: &Problem, state: &StatePair, name: &str) -> Result<Vec<f64>, Error> {
    let (u, v) = physical_logs(problem, state);
    let values = match name {
        "u" => u.values().to_vec(),
        "v" => v.values().to_vec(),
        _ => {
            let p = reconstruct_physical(problem, state);
            match name {
                "kappa" => p.kappa.values().to_vec(),
                "phi_abs" => p.phi_abs.values().to_vec(),
                "a12" => p.a12.values().to_vec(),
                "b12" => p.b12.values().to_vec(),
                _ => return Err(Error::InvalidParameter(format!("unknown field {name:?}"))),
            }
        }
    };
    Ok(values)
}

/// Copies the named field (`u`, `v`, `kappa`, `phi_abs`, `a12`, `b12`) of the
/// solution into `buf`, row-major.
///
/// # Safety
/// `run` must be a handle from [`bps_run_new`], `name` a NUL-terminated
/// string and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bps_run_field(
    run: *const BpsRun,
    name: *const c_char,
    buf: *mut f64,
    len: usize,
) -> BpsStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), buf.is_null()) else {
            return fail(BpsStatus::NullPointer, "null argument");
        };
        let name = match c_str(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let Some((problem, state)) = &run.solved else {
            return fail(BpsStatus::NotSolved, "no solution available");
        };
        let values = match field_values(problem, state, name) {
            Ok(v) => v,
            Err(e) => return fail(BpsStatus::InvalidArgument, e.to_string()),
        };
        if len < values.len() {
            return fail(
                BpsStatus::BufferTooSmall,
                format!("buffer holds {len} values, field has {}", values.len()),
            );
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        BpsStatus::Ok
    })
}

/// The run report as JSON. Free the string with [`bps_string_free`].
///
/// # Safety
/// `run` must be a handle from [`bps_run_new`]; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bps_run_report_json(
    run: *const BpsRun,
    out: *mut *mut c_char,
) -> BpsStatus {
    guard(|| {
        let (Some(run), false) = (run.as_ref(), out.is_null()) else {
            return fail(BpsStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        let Some(report) = &run.report else {
            return fail(BpsStatus::NotSolved, "no report available");
        };
        let json = match serde_json::to_string(report) {
            Ok(j) => j,
            Err(e) => return fail(BpsStatus::Internal, e.to_string()),
        };
        match CString::new(json) {
            Ok(c) => {
                *out = c.into_raw();
                BpsStatus::Ok
            }
            Err(e) => fail(BpsStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn bps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `run` must be null or a handle from [`bps_run_new`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn bps_run_free(run: *mut BpsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
