//! C ABI for the qrk library.
//!
//! Conventions:
//! - objects are opaque handles created and freed by this library;
//! - every fallible call returns a [`QrkStatus`] and writes results through
//!   out-pointers, which are left untouched on failure;
//! - [`qrk_last_error_message`] returns a thread-local description of the most
//!   recent failure, valid until the next failing call on the same thread;
//! - the generated header lives at `include/qrk.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use qrk::corruption::{
    corrupt, generate_gaussian_system, load_system, save_system, CorruptedSystem, CorruptionModel,
    CorruptionSpec,
};
use qrk::error::Error;
use qrk::solvers::{run_solver, ConvergenceTrace, SelectionStrategy, SolverConfig, TraceOracle};
use qrk::spectral::{
    condition_lhs, convergence_rate, corollary_threshold, heuristic, spectral_summary,
    SubsetEstimate, SubsetMethod,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParameterDomain = 3,
    ParseError = 4,
    InvariantViolation = 5,
    NoConvergence = 6,
    TooManySubsets = 7,
    CertificateUnavailable = 8,
    IoError = 9,
    Panic = 10,
}

/// Row-selection strategies exposed over the C ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrkStrategy {
    Uniform = 0,
    Quantile = 1,
    SampledQuantile = 2,
    Motzkin = 3,
    Powered = 4,
}

/// Corruption models exposed over the C ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrkCorruptionModel {
    /// `param` = gaussian scale; pass NaN for the default 10 * ||b_true||_inf.
    RandomGaussian = 0,
    /// `param` = the constant offset.
    ConstantOffset = 1,
    SignFlip = 2,
    AlignedCluster = 3,
}

/// Subset-extremal estimation methods.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrkSubsetMethod {
    /// Exact enumeration (refuses beyond the subset cap).
    Exact = 0,
    /// `budget` random subsets; min results are upper bounds.
    Sampled = 1,
    /// `budget` random directions; min results are upper bounds.
    Greedy = 2,
}

/// Spectral picture of a system at (q, beta). `sigma_beta_max` and `rate_c`
/// are NaN when absent; `sub_min_is_exact` is 0 for sampled/greedy estimates.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QrkSpectralSummary {
    pub sigma_max: f64,
    pub sigma_sub_min: f64,
    pub sub_min_is_exact: i32,
    pub subset_size: usize,
    pub sigma_beta_max: f64,
    pub condition_lhs: f64,
    pub condition_rhs: f64,
    pub rate_c: f64,
}

/// Truncated-Gaussian heuristic values at mass = q - beta, plus the certified
/// threshold beta* for the q alone.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QrkHeuristic {
    pub mass: f64,
    pub alpha: f64,
    pub ratio: f64,
    pub beta_star: f64,
}

/// Opaque system handle.
pub struct QrkSystem {
    inner: CorruptedSystem,
}

/// Opaque solver-trace handle.
pub struct QrkTrace {
    inner: ConvergenceTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(e: &Error) -> QrkStatus {
    match e {
        Error::ParseError { .. } => QrkStatus::ParseError,
        Error::InvariantViolation(_) => QrkStatus::InvariantViolation,
        Error::NoConvergence { .. } => QrkStatus::NoConvergence,
        Error::TooManySubsets { .. } => QrkStatus::TooManySubsets,
        Error::CertificateUnavailable(_) => QrkStatus::CertificateUnavailable,
        Error::Io(_) => QrkStatus::IoError,
        Error::ParameterDomain { .. } | Error::MassOutOfRange(_) | Error::BetaOutOfRange(_) => {
            QrkStatus::ParameterDomain
        }
        _ => QrkStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> QrkStatus {
    set_error(&e.to_string());
    status_of(&e)
}

/// Run `f` with panics converted to `QrkStatus::Panic`.
fn guarded(f: impl FnOnce() -> QrkStatus) -> QrkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            QrkStatus::Panic
        }
    }
}

unsafe fn path_from(ptr: *const c_char) -> Result<PathBuf, QrkStatus> {
    if ptr.is_null() {
        set_error("null path");
        return Err(QrkStatus::NullPointer);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(QrkStatus::InvalidArgument)
        }
    }
}

/// Message of the most recent failure on this thread. Never null; empty
/// before the first failure. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn qrk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Generate an uncorrupted random system (rows uniform on the sphere).
///
/// # Safety
/// `out` must be a valid pointer to a `QrkSystem*` slot.
#[no_mangle]
pub unsafe extern "C" fn qrk_system_generate(
    m: usize,
    n: usize,
    seed: u64,
    out: *mut *mut QrkSystem,
) -> QrkStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        match generate_gaussian_system(m, n, seed) {
            Ok(sys) => {
                *out = Box::into_raw(Box::new(QrkSystem { inner: sys }));
                QrkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Load a system from the text format written by [`qrk_system_save`].
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn qrk_system_load(
    path: *const c_char,
    out: *mut *mut QrkSystem,
) -> QrkStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_system(&path) {
            Ok(sys) => {
                *out = Box::into_raw(Box::new(QrkSystem { inner: sys }));
                QrkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `sys` must be a live handle from this library; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn qrk_system_save(
    sys: *const QrkSystem,
    path: *const c_char,
) -> QrkStatus {
    guarded(|| {
        let Some(sys) = sys.as_ref() else {
            set_error("null system");
            return QrkStatus::NullPointer;
        };
        let path = match path_from(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match save_system(&sys.inner, &path) {
            Ok(()) => QrkStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Apply a corruption model to `sys`, producing a new system handle. `param`
/// is the model parameter (see [`QrkCorruptionModel`]); NaN selects defaults.
///
/// # Safety
/// `sys` must be a live handle; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn qrk_system_corrupt(
    sys: *const QrkSystem,
    beta: f64,
    model: QrkCorruptionModel,
    param: f64,
    seed: u64,
    out: *mut *mut QrkSystem,
) -> QrkStatus {
    guarded(|| {
        let Some(sys) = sys.as_ref() else {
            set_error("null system");
            return QrkStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        let model = match model {
            QrkCorruptionModel::RandomGaussian => CorruptionModel::RandomGaussian {
                scale: if param.is_nan() { None } else { Some(param) },
            },
            QrkCorruptionModel::ConstantOffset => CorruptionModel::ConstantOffset {
                value: if param.is_nan() { 10.0 } else { param },
            },
            QrkCorruptionModel::SignFlip => CorruptionModel::SignFlip,
            QrkCorruptionModel::AlignedCluster => CorruptionModel::AlignedCluster,
        };
        match corrupt(&sys.inner, &CorruptionSpec { beta, model, seed }) {
            Ok(corrupted) => {
                *out = Box::into_raw(Box::new(QrkSystem { inner: corrupted }));
                QrkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Row count; 0 for a null handle.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qrk_system_rows(sys: *const QrkSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.m())
}

/// Column count; 0 for a null handle.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qrk_system_cols(sys: *const QrkSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.n())
}

/// Number of corrupted right-hand-side entries.
///
/// # Safety
/// `sys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qrk_system_corrupt_count(sys: *const QrkSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.corrupt_set.len())
}

/// # Safety
/// `sys` must be a handle from this library, not yet freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn qrk_system_free(sys: *mut QrkSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Run a solver. Strategy parameters: `q` for Quantile/SampledQuantile, `t`
/// for SampledQuantile, `p` for Powered; ignored otherwise. With
/// `use_ground_truth` false the run is blind (budget mode only, trace errors
/// are NaN).
///
/// # Safety
/// `sys` must be a live handle; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn qrk_solve(
    sys: *const QrkSystem,
    strategy: QrkStrategy,
    q: f64,
    t: usize,
    p: f64,
    max_iters: usize,
    stop_tol: f64,
    seed: u64,
    use_ground_truth: bool,
    out: *mut *mut QrkTrace,
) -> QrkStatus {
    guarded(|| {
        let Some(sys) = sys.as_ref() else {
            set_error("null system");
            return QrkStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        let strategy = match strategy {
            QrkStrategy::Uniform => SelectionStrategy::Uniform,
            QrkStrategy::Quantile => SelectionStrategy::Quantile { q },
            QrkStrategy::SampledQuantile => SelectionStrategy::SampledQuantile { q, t },
            QrkStrategy::Motzkin => SelectionStrategy::Motzkin,
            QrkStrategy::Powered => SelectionStrategy::Powered { p },
        };
        let config = SolverConfig { strategy, max_iters, stop_tol, seed, x0: None };
        let oracle = use_ground_truth.then(|| TraceOracle::from_system(&sys.inner));
        match run_solver(&sys.inner.a, &sys.inner.b_observed, &config, oracle) {
            Ok(trace) => {
                *out = Box::into_raw(Box::new(QrkTrace { inner: trace }));
                QrkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qrk_trace_iterations(trace: *const QrkTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.iterations())
}

/// Final squared error to the ground truth; NaN for blind runs or null.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qrk_trace_final_err_sq(trace: *const QrkTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.inner.final_err_sq())
}

/// 1 when the run stopped on the error tolerance, 0 otherwise.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qrk_trace_converged(trace: *const QrkTrace) -> i32 {
    trace.as_ref().map_or(0, |t| {
        (t.inner.status == qrk::solvers::TerminalStatus::Converged) as i32
    })
}

/// Write the per-iteration CSV trace.
///
/// # Safety
/// `trace` must be a live handle; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn qrk_trace_write_csv(
    trace: *const QrkTrace,
    path: *const c_char,
) -> QrkStatus {
    guarded(|| {
        let Some(trace) = trace.as_ref() else {
            set_error("null trace");
            return QrkStatus::NullPointer;
        };
        let path = match path_from(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let file = match std::fs::File::create(&path) {
            Ok(f) => f,
            Err(e) => return fail(Error::Io(e)),
        };
        let mut w = std::io::BufWriter::new(file);
        match trace.inner.write_csv(&mut w) {
            Ok(()) => QrkStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `trace` must be a handle from this library, not yet freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn qrk_trace_free(trace: *mut QrkTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Spectral summary of a system at (q, beta). `budget` is the trial count for
/// Sampled or the direction count for Greedy; ignored for Exact.
///
/// # Safety
/// `sys` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrk_spectral_summary(
    sys: *const QrkSystem,
    q: f64,
    beta: f64,
    method: QrkSubsetMethod,
    budget: usize,
    seed: u64,
    out: *mut QrkSpectralSummary,
) -> QrkStatus {
    guarded(|| {
        let Some(sys) = sys.as_ref() else {
            set_error("null system");
            return QrkStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        let method = match method {
            QrkSubsetMethod::Exact => SubsetMethod::Exact,
            QrkSubsetMethod::Sampled => SubsetMethod::Sampled { trials: budget, seed },
            QrkSubsetMethod::Greedy => SubsetMethod::Greedy { directions: budget, seed },
        };
        match spectral_summary(sys.inner.a.matrix(), q, beta, method) {
            Ok(s) => {
                *out = QrkSpectralSummary {
                    sigma_max: s.sigma_max,
                    sigma_sub_min: s.sigma_sub_min,
                    sub_min_is_exact: (s.sigma_sub_min_method == SubsetEstimate::Exact) as i32,
                    subset_size: s.subset_size,
                    sigma_beta_max: s.sigma_beta_max.unwrap_or(f64::NAN),
                    condition_lhs: s.condition_lhs,
                    condition_rhs: s.condition_rhs,
                    rate_c: s.rate_c.unwrap_or(f64::NAN),
                };
                QrkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Truncated-Gaussian heuristic at mass = q - beta, plus the corollary
/// threshold beta* for q.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrk_heuristic(q: f64, beta: f64, out: *mut QrkHeuristic) -> QrkStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        if !(q > 0.0 && q < 1.0) {
            return fail(Error::MassOutOfRange(q));
        }
        if !(beta >= 0.0 && beta < q) {
            return fail(Error::ParameterDomain { q, beta });
        }
        let h = match heuristic(q - beta) {
            Ok(h) => h,
            Err(e) => return fail(e),
        };
        let beta_star = match corollary_threshold(q) {
            Ok(b) => b,
            Err(e) => return fail(e),
        };
        *out = QrkHeuristic { mass: h.mass, alpha: h.alpha, ratio: h.ratio, beta_star };
        QrkStatus::Ok
    })
}

/// Left-hand side of the convergence condition.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrk_condition_lhs(q: f64, beta: f64, out: *mut f64) -> QrkStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        match condition_lhs(q, beta) {
            Ok(v) => {
                *out = v;
                QrkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Rate constant c for the given spectral values; NaN when the condition
/// fails (no certificate).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrk_convergence_rate(
    sigma_max: f64,
    sigma_sub_min: f64,
    q: f64,
    beta: f64,
    m: usize,
    out: *mut f64,
) -> QrkStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        match convergence_rate(sigma_max, sigma_sub_min, q, beta, m) {
            Ok(rate) => {
                *out = rate.unwrap_or(f64::NAN);
                QrkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Largest beta certified by the Gaussian heuristic at quantile q.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrk_corollary_threshold(q: f64, out: *mut f64) -> QrkStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return QrkStatus::NullPointer;
        }
        match corollary_threshold(q) {
            Ok(v) => {
                *out = v;
                QrkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
