//! C ABI for `fastsdr`.
//!
//! Configurations and results are opaque heap handles created and released
//! through this API. Every fallible call returns a [`FastsdrStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`fastsdr_last_error_message`].
//!
//! Signals are passed channel-major: channel `c` occupies
//! `data[c * len .. (c + 1) * len]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fastsdr::{BssEvalResult, Error, EvalConfig, MetricSet, MultichannelSignal, Precision, Solver};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastsdrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Solver = 4,
    /// The requested metric was not computed for this result.
    NotComputed = 5,
    BufferTooSmall = 6,
    Panic = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastsdrSolver {
    Direct = 0,
    Cgd = 1,
    Levinson = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastsdrPrecision {
    Single = 0,
    Double = 1,
}

/// Opaque evaluation settings.
pub struct FastsdrConfig {
    inner: EvalConfig,
}

/// Opaque evaluation result.
pub struct FastsdrResult {
    inner: BssEvalResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: FastsdrStatus, msg: impl Into<String>) -> FastsdrStatus {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> FastsdrStatus {
    if err.is_validation() {
        FastsdrStatus::Validation
    } else if err.is_solver() {
        FastsdrStatus::Solver
    } else {
        FastsdrStatus::Internal
    }
}

fn guard(f: impl FnOnce() -> FastsdrStatus) -> FastsdrStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(FastsdrStatus::Panic, "internal panic"))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fastsdr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fastsdr_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// New configuration with the library defaults (L = 512, CGD with 10
/// iterations, double precision, all metrics, permutation resolved).
#[no_mangle]
pub extern "C" fn fastsdr_config_new() -> *mut FastsdrConfig {
    Box::into_raw(Box::new(FastsdrConfig {
        inner: EvalConfig::default(),
    }))
}

/// # Safety
/// `cfg` must be NULL or a pointer returned by `fastsdr_config_new` that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_config_free(cfg: *mut FastsdrConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn with_config(cfg: *mut FastsdrConfig, f: impl FnOnce(&mut EvalConfig) -> FastsdrStatus) -> FastsdrStatus {
    match cfg.as_mut() {
        Some(c) => guard(|| f(&mut c.inner)),
        None => fail(FastsdrStatus::NullPointer, "config is NULL"),
    }
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_config_set_filter_length(cfg: *mut FastsdrConfig, filter_length: usize) -> FastsdrStatus {
    with_config(cfg, |c| {
        if filter_length == 0 {
            return fail(FastsdrStatus::InvalidArgument, "filter length must be at least 1");
        }
        c.filter_length = filter_length;
        FastsdrStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_config_set_solver(cfg: *mut FastsdrConfig, solver: FastsdrSolver) -> FastsdrStatus {
    with_config(cfg, |c| {
        c.solver = match solver {
            FastsdrSolver::Direct => Solver::Direct,
            FastsdrSolver::Cgd => Solver::Cgd,
            FastsdrSolver::Levinson => Solver::Levinson,
        };
        FastsdrStatus::Ok
    })
}

/// Iteration cap and early-stop relative residual (0 runs every iteration).
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_config_set_cgd(cfg: *mut FastsdrConfig, iters: usize, tol: f64) -> FastsdrStatus {
    with_config(cfg, |c| {
        if iters == 0 || !(tol >= 0.0 && tol.is_finite()) {
            return fail(FastsdrStatus::InvalidArgument, "iters must be positive and tol a nonnegative number");
        }
        c.cgd_iters = iters;
        c.cgd_tol = tol;
        FastsdrStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_config_set_precision(cfg: *mut FastsdrConfig, precision: FastsdrPrecision) -> FastsdrStatus {
    with_config(cfg, |c| {
        c.precision = match precision {
            FastsdrPrecision::Single => Precision::Single,
            FastsdrPrecision::Double => Precision::Double,
        };
        FastsdrStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_config_set_metrics(cfg: *mut FastsdrConfig, sdr: bool, sir: bool, sar: bool) -> FastsdrStatus {
    with_config(cfg, |c| {
        if !(sdr || sir || sar) {
            return fail(FastsdrStatus::InvalidArgument, "no metric requested");
        }
        c.metrics = MetricSet { sdr, sir, sar };
        FastsdrStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_config_set_resolve_permutation(cfg: *mut FastsdrConfig, resolve: bool) -> FastsdrStatus {
    with_config(cfg, |c| {
        c.resolve_permutation = resolve;
        FastsdrStatus::Ok
    })
}

/// Clamp for cosine metrics; a value `<= 0` restores the precision default.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_config_set_clamp_epsilon(cfg: *mut FastsdrConfig, epsilon: f64) -> FastsdrStatus {
    with_config(cfg, |c| {
        if epsilon.is_nan() || epsilon >= 0.5 {
            return fail(FastsdrStatus::InvalidArgument, "epsilon must lie below 0.5");
        }
        c.clamp_epsilon = (epsilon > 0.0).then_some(epsilon);
        FastsdrStatus::Ok
    })
}

unsafe fn signal(data: *const f64, channels: usize, len: usize, what: &str) -> Result<MultichannelSignal, FastsdrStatus> {
    if data.is_null() {
        return Err(fail(FastsdrStatus::NullPointer, format!("{what} is NULL")));
    }
    let total = channels
        .checked_mul(len)
        .ok_or_else(|| fail(FastsdrStatus::InvalidArgument, "signal size overflows"))?;
    let slice = std::slice::from_raw_parts(data, total);
    MultichannelSignal::from_channel_major(slice.to_vec(), channels, 0)
        .map_err(|e| fail(status_of(&e), format!("{what}: {e}")))
}

type Entry = fn(&MultichannelSignal, &MultichannelSignal, &EvalConfig) -> fastsdr::Result<BssEvalResult>;

#[allow(clippy::too_many_arguments)]
unsafe fn evaluate(
    entry: Entry,
    cfg: *const FastsdrConfig,
    references: *const f64,
    num_refs: usize,
    estimates: *const f64,
    num_ests: usize,
    len: usize,
    out: *mut *mut FastsdrResult,
) -> FastsdrStatus {
    guard(|| {
        if out.is_null() {
            return fail(FastsdrStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let default = EvalConfig::default();
        let cfg = cfg.as_ref().map_or(&default, |c| &c.inner);
        let refs = match signal(references, num_refs, len, "references") {
            Ok(s) => s,
            Err(st) => return st,
        };
        let ests = match signal(estimates, num_ests, len, "estimates") {
            Ok(s) => s,
            Err(st) => return st,
        };
        match entry(&refs, &ests, cfg) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FastsdrResult { inner }));
                FastsdrStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Evaluates `num_ests` estimates against `num_refs` references, each
/// `len` samples, channel-major. `cfg` may be NULL for the defaults. On
/// success `*out` receives a result handle to release with
/// `fastsdr_result_free`; on failure it is set to NULL.
///
/// # Safety
/// The signal pointers must reference `num_refs * len` and `num_ests * len`
/// readable doubles; `cfg` must be NULL or live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_bss_eval(
    cfg: *const FastsdrConfig,
    references: *const f64,
    num_refs: usize,
    estimates: *const f64,
    num_ests: usize,
    len: usize,
    out: *mut *mut FastsdrResult,
) -> FastsdrStatus {
    evaluate(fastsdr::bss_eval, cfg, references, num_refs, estimates, num_ests, len, out)
}

/// Scale-invariant SDR: `fastsdr_bss_eval` with a one-tap filter.
///
/// # Safety
/// Same contract as `fastsdr_bss_eval`.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_si_sdr(
    cfg: *const FastsdrConfig,
    references: *const f64,
    num_refs: usize,
    estimates: *const f64,
    num_ests: usize,
    len: usize,
    out: *mut *mut FastsdrResult,
) -> FastsdrStatus {
    evaluate(fastsdr::si_sdr, cfg, references, num_refs, estimates, num_ests, len, out)
}

/// # Safety
/// `res` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_free(res: *mut FastsdrResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Number of reference channels, or 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_num_refs(res: *const FastsdrResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.num_refs)
}

/// Number of estimate channels, or 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_num_ests(res: *const FastsdrResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.num_ests)
}

unsafe fn copy_out(
    res: *const FastsdrResult,
    out: *mut f64,
    capacity: usize,
    pick: impl FnOnce(&BssEvalResult) -> Option<Vec<f64>>,
) -> FastsdrStatus {
    guard(|| {
        let Some(res) = res.as_ref() else {
            return fail(FastsdrStatus::NullPointer, "result is NULL");
        };
        if out.is_null() {
            return fail(FastsdrStatus::NullPointer, "output buffer is NULL");
        }
        let Some(values) = pick(&res.inner) else {
            return fail(FastsdrStatus::NotComputed, "metric was not computed");
        };
        if capacity < values.len() {
            return fail(
                FastsdrStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {} needed", values.len()),
            );
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        FastsdrStatus::Ok
    })
}

/// Copies SDR in dB, `num_refs × num_ests` row-major, into `out`.
///
/// # Safety
/// `res` must be live and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_sdr(res: *const FastsdrResult, out: *mut f64, capacity: usize) -> FastsdrStatus {
    copy_out(res, out, capacity, |r| r.sdr.as_ref().map(|m| m.concat()))
}

/// Copies SIR in dB, `num_refs × num_ests` row-major, into `out`.
///
/// # Safety
/// `res` must be live and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_sir(res: *const FastsdrResult, out: *mut f64, capacity: usize) -> FastsdrStatus {
    copy_out(res, out, capacity, |r| r.sir.as_ref().map(|m| m.concat()))
}

/// Copies SAR in dB, one value per estimate, into `out`.
///
/// # Safety
/// `res` must be live and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_sar(res: *const FastsdrResult, out: *mut f64, capacity: usize) -> FastsdrStatus {
    copy_out(res, out, capacity, |r| r.sar.clone())
}

/// Copies the raw cosine metrics `c`, `num_refs × num_ests` row-major.
///
/// # Safety
/// `res` must be live and `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_cosine(res: *const FastsdrResult, out: *mut f64, capacity: usize) -> FastsdrStatus {
    copy_out(res, out, capacity, |r| Some(r.cosine.c.clone()))
}

/// Copies the estimate index assigned to each reference (`num_refs`
/// values, -1 where unassigned).
///
/// # Safety
/// `res` must be live and `out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_permutation(res: *const FastsdrResult, out: *mut i64, capacity: usize) -> FastsdrStatus {
    guard(|| {
        let Some(res) = res.as_ref() else {
            return fail(FastsdrStatus::NullPointer, "result is NULL");
        };
        if out.is_null() {
            return fail(FastsdrStatus::NullPointer, "output buffer is NULL");
        }
        let Some(perm) = &res.inner.permutation else {
            return fail(FastsdrStatus::NotComputed, "permutation was not resolved");
        };
        if capacity < perm.len() {
            return fail(FastsdrStatus::BufferTooSmall, format!("buffer holds {capacity} values, {} needed", perm.len()));
        }
        for (i, m) in perm.iter().enumerate() {
            *out.add(i) = m.map_or(-1, |m| m as i64);
        }
        FastsdrStatus::Ok
    })
}

/// Number of systems that fell back to the direct solver, or 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fastsdr_result_fallbacks(res: *const FastsdrResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.diagnostics.fallbacks())
}
