//! C ABI over `semistable`.
//!
//! Objects are opaque heap handles created by `ss_*_new`-style functions and
//! released with the matching `ss_*_free`. Every fallible call returns an
//! [`SsStatus`]; on failure a message for the calling thread is available
//! from [`ss_last_error`] until the next failing call on that thread.
//! Panics never cross the boundary; they are reported as `SS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use semistable::inversion::InversionSettings;
use semistable::processes::{simulate_ar1, Ar1Config, Ar1Paths, Ar1Start};
use semistable::verify::{run_all, VerifySettings};
use semistable::{pgf_to_pmf, Error, PgfExpr, PmfTable, SemiStableParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    InvalidParameter = 1,
    Domain = 2,
    NegativeCoefficient = 3,
    ModulusExceedsOne = 4,
    TailToleranceUnmet = 5,
    BranchTrackingFailure = 6,
    TailTooHeavy = 7,
    Parse = 8,
    Io = 9,
    NullPointer = 10,
    Panic = 11,
}

impl From<&Error> for SsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) => SsStatus::InvalidParameter,
            Error::Domain(_) => SsStatus::Domain,
            Error::NegativeCoefficient { .. } => SsStatus::NegativeCoefficient,
            Error::ModulusExceedsOne { .. } => SsStatus::ModulusExceedsOne,
            Error::TailToleranceUnmet { .. } => SsStatus::TailToleranceUnmet,
            Error::BranchTrackingFailure { .. } => SsStatus::BranchTrackingFailure,
            Error::TailTooHeavy { .. } => SsStatus::TailTooHeavy,
            Error::Parse(_) | Error::Json(_) => SsStatus::Parse,
            Error::Io(_) => SsStatus::Io,
        }
    }
}

/// Parameters `(alpha, A, b)` of a semi-stable law.
pub struct SsParams(SemiStableParams);

/// A generating-function expression.
pub struct SsExpr(PgfExpr);

/// A truncated pmf table.
pub struct SsPmfTable(PmfTable);

/// A simulated `n_paths x (n_steps + 1)` matrix of AR(1) paths.
pub struct SsAr1Paths(Ar1Paths);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> SsStatus
where
    F: FnOnce() -> Result<(), SsError>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err(SsError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside semistable".into());
            SsStatus::Panic
        }
    }
}

struct SsError(SsStatus, String);

impl From<Error> for SsError {
    fn from(e: Error) -> Self {
        SsError(SsStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> SsError {
    SsError(SsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, SsError> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), SsError> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failing call on this thread, or null.
#[no_mangle]
pub extern "C" fn ss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ss_params_new(
    alpha: f64,
    amplitude: f64,
    b: f64,
    out: *mut *mut SsParams,
) -> SsStatus {
    guard(|| put(out, SsParams(SemiStableParams::new(alpha, amplitude, b)?)))
}

/// # Safety
/// `p` must be null or a handle from [`ss_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_params_free(p: *mut SsParams) {
    free(p)
}

/// Epoch `a = b^alpha`, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_params_epoch(p: *const SsParams) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.epoch())
}

/// Largest amplitude for which the law is a genuine pmf, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_params_admissible_amplitude(p: *const SsParams) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.admissible_amplitude())
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_expr_semi_stable(
    p: *const SsParams,
    out: *mut *mut SsExpr,
) -> SsStatus {
    guard(|| {
        let p = deref(p, "params")?;
        put(out, SsExpr(PgfExpr::semi_stable(p.0)))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_expr_poisson(lambda: f64, out: *mut *mut SsExpr) -> SsStatus {
    guard(|| put(out, SsExpr(PgfExpr::poisson(lambda)?)))
}

/// `b ⊗ X`. The input handle stays owned by the caller.
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_expr_thinned(
    e: *const SsExpr,
    b: f64,
    out: *mut *mut SsExpr,
) -> SsStatus {
    guard(|| {
        let e = deref(e, "expr")?;
        put(out, SsExpr(e.0.thinned(b)?))
    })
}

/// `P^t`.
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_expr_power(
    e: *const SsExpr,
    t: f64,
    out: *mut *mut SsExpr,
) -> SsStatus {
    guard(|| {
        let e = deref(e, "expr")?;
        put(out, SsExpr(e.0.power(t)?))
    })
}

/// Law of the sum of independent variables.
///
/// # Safety
/// `lhs`, `rhs` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_expr_product(
    lhs: *const SsExpr,
    rhs: *const SsExpr,
    out: *mut *mut SsExpr,
) -> SsStatus {
    guard(|| {
        let l = deref(lhs, "lhs")?;
        let r = deref(rhs, "rhs")?;
        put(out, SsExpr(l.0.product(&r.0)))
    })
}

/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_expr_free(e: *mut SsExpr) {
    free(e)
}

/// `P(re + i im)`, written to `out_re` / `out_im`.
///
/// # Safety
/// `e` must be a live handle; `out_re`, `out_im` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_expr_eval(
    e: *const SsExpr,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SsStatus {
    guard(|| {
        let e = deref(e, "expr")?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output pointer"));
        }
        let v = e.0.eval(Complex64::new(re, im))?;
        *out_re = v.re;
        *out_im = v.im;
        Ok(())
    })
}

/// Inverts `e` into a pmf table. `n_terms` is the initial length (0 for the
/// default); `radius <= 0` selects the automatic radius.
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_pmf_new(
    e: *const SsExpr,
    n_terms: usize,
    tail_tol: f64,
    radius: f64,
    out: *mut *mut SsPmfTable,
) -> SsStatus {
    guard(|| {
        let e = deref(e, "expr")?;
        let mut s = InversionSettings::default().with_tail_tol(tail_tol);
        if n_terms > 0 {
            s = s.with_n_terms(n_terms);
        }
        if radius > 0.0 {
            s = s.with_radius(radius);
        }
        put(out, SsPmfTable(pgf_to_pmf(&e.0, &s)?))
    })
}

/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_pmf_len(t: *const SsPmfTable) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// `P(X = n)`; 0 beyond the table or for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_pmf_get(t: *const SsPmfTable, n: usize) -> f64 {
    t.as_ref().map_or(0.0, |t| t.0.prob(n))
}

/// Pointer to the `ss_pmf_len` probabilities, valid while `t` lives.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_pmf_probs(t: *const SsPmfTable) -> *const f64 {
    t.as_ref().map_or(ptr::null(), |t| t.0.probs().as_ptr())
}

/// Mass beyond the table, NaN for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_pmf_tail_mass(t: *const SsPmfTable) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.0.tail_mass())
}

/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_pmf_free(t: *mut SsPmfTable) {
    free(t)
}

/// Simulates `n_paths` paths of `n_steps` steps; `zero_start != 0` starts
/// from `X_0 = 0` instead of the stationary law.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_ar1_simulate(
    p: *const SsParams,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    zero_start: i32,
    out: *mut *mut SsAr1Paths,
) -> SsStatus {
    guard(|| {
        let p = deref(p, "params")?;
        let mut config = Ar1Config::new(p.0, n_steps, n_paths, seed);
        if zero_start != 0 {
            config.start = Ar1Start::Zero;
        }
        put(out, SsAr1Paths(simulate_ar1(&config)?))
    })
}

/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_ar1_n_paths(a: *const SsAr1Paths) -> usize {
    a.as_ref().map_or(0, |a| a.0.n_paths())
}

/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_ar1_n_steps(a: *const SsAr1Paths) -> usize {
    a.as_ref().map_or(0, |a| a.0.n_steps())
}

/// Row-major values, `n_paths * (n_steps + 1)` entries, valid while `a` lives.
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_ar1_data(a: *const SsAr1Paths) -> *const u64 {
    a.as_ref().map_or(ptr::null(), |a| a.0.data().as_ptr())
}

/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_ar1_free(a: *mut SsAr1Paths) {
    free(a)
}

/// Runs the verification suite and returns the JSON report in `out_json`
/// (release with [`ss_string_free`]) and the overall flag in `out_overall`.
/// Zero sizes select the defaults.
///
/// # Safety
/// `p` must be a live handle; `out_json` and `out_overall` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_verify_json(
    p: *const SsParams,
    seed: u64,
    n_draws: usize,
    n_paths: usize,
    calibration_reps: usize,
    negative_controls: i32,
    out_json: *mut *mut c_char,
    out_overall: *mut i32,
) -> SsStatus {
    guard(|| {
        let p = deref(p, "params")?;
        if out_json.is_null() || out_overall.is_null() {
            return Err(null("output pointer"));
        }
        let mut s = VerifySettings {
            seed,
            negative_controls: negative_controls != 0,
            ..VerifySettings::default()
        };
        if n_draws > 0 {
            s.n_draws = n_draws;
        }
        if n_paths > 0 {
            s.n_paths = n_paths;
        }
        if calibration_reps > 0 {
            s.calibration_reps = calibration_reps;
        }
        let report = run_all(&p.0, &s)?;
        let json =
            CString::new(report.to_json()?).map_err(|e| SsError(SsStatus::Parse, e.to_string()))?;
        *out_overall = i32::from(report.overall);
        *out_json = json.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
