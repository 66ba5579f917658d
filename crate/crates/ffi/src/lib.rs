//! C ABI over `tourney_extremes`.
//!
//! Models and simulation reports are opaque heap handles created and
//! released through this interface. Every fallible call returns a
//! [`TeStatus`]; on failure the message is kept per thread and can be read
//! with [`te_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use tourney_extremes::asymptotics::{self, LimitSpec};
use tourney_extremes::exact::{self, ConvolutionConfig};
use tourney_extremes::sim::{run_experiment, SimConfig, SimReport};
use tourney_extremes::verify::{run_suite, VerifyOptions};
use tourney_extremes::{Error, OutcomeModel};

/// Result codes. The first four agree with the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeStatus {
    TeOk = 0,
    TeVerificationFailed = 1,
    TeConfigError = 2,
    TeCapacityError = 3,
    TeDomainError = 4,
    TeInvalidModel = 5,
    TeNullPointer = 6,
    TePanic = 7,
}

/// Opaque outcome model.
pub struct TeModel(OutcomeModel);

/// Opaque simulation report.
pub struct TeSimReport(SimReport);

/// Exact exceedance quantities at one `(n, t)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TeExceedance {
    pub n: u64,
    pub t: f64,
    pub x_n: f64,
    pub raw_threshold: f64,
    pub p_n: f64,
    pub lambda_n: f64,
    pub pair_cov: f64,
    pub var_w: f64,
    pub stein_bound: f64,
    pub mean_mismatch_bound: f64,
    pub combined_bound: f64,
    pub threshold_near_atom: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> TeStatus {
    match e {
        Error::Capacity { .. } | Error::BudgetExceeded { .. } => TeStatus::TeCapacityError,
        Error::InvalidModel(_) => TeStatus::TeInvalidModel,
        Error::Domain(_) => TeStatus::TeDomainError,
        _ => TeStatus::TeConfigError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (TeStatus, String)>) -> TeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TeStatus::TeOk
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TeStatus::TePanic
        }
    }
}

fn lib(e: Error) -> (TeStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TeStatus, String) {
    (TeStatus::TeNullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(model: *const TeModel) -> Result<&'a OutcomeModel, (TeStatus, String)> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

fn into_handle<T>(value: T, out: *mut *mut T) {
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn te_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns its full length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn te_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

#[no_mangle]
pub extern "C" fn te_model_classical() -> *mut TeModel {
    Box::into_raw(Box::new(TeModel(OutcomeModel::classical())))
}

#[no_mangle]
pub extern "C" fn te_model_chess() -> *mut TeModel {
    Box::into_raw(Box::new(TeModel(OutcomeModel::chess())))
}

/// Builds a model on the lattice `{0, 1/denominator, ..., 1}` from `len`
/// pairs `(masses[i], probs[i])`.
///
/// # Safety
/// `masses` and `probs` must point to `len` readable elements; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn te_model_new(
    denominator: u32,
    masses: *const u32,
    probs: *const f64,
    len: usize,
    out: *mut *mut TeModel,
) -> TeStatus {
    guard(|| {
        if masses.is_null() || probs.is_null() {
            return Err(null("support"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let support = slice::from_raw_parts(masses, len)
            .iter()
            .copied()
            .zip(slice::from_raw_parts(probs, len).iter().copied())
            .collect();
        let model = OutcomeModel::new(denominator, support).map_err(lib)?;
        into_handle(TeModel(model), out);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn te_model_free(model: *mut TeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Per-match standard deviation of the model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn te_model_sigma(model: *const TeModel, out: *mut f64) -> TeStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = m.moments().map_err(lib)?.sigma;
        Ok(())
    })
}

/// # Safety
/// `a_n` and `b_n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn te_norming(n: u64, a_n: *mut f64, b_n: *mut f64) -> TeStatus {
    guard(|| {
        let (a, b) = (a_n.as_mut().ok_or_else(|| null("a_n"))?, b_n.as_mut().ok_or_else(|| null("b_n"))?);
        let c = asymptotics::norming(n).map_err(lib)?;
        *a = c.a_n;
        *b = c.b_n;
        Ok(())
    })
}

/// Limit of `P(M_{n,j} <= t)`.
#[no_mangle]
pub extern "C" fn te_order_stat_limit_cdf(t: f64, j: u32) -> f64 {
    asymptotics::order_stat_limit_cdf(LimitSpec { t, j })
}

/// Exact exceedance quantities by lattice convolution.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn te_exceedance(model: *const TeModel, n: u64, t: f64, out: *mut TeExceedance) -> TeStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = exact::exceedance_report(m, n, t, &ConvolutionConfig::default()).map_err(lib)?;
        *out = TeExceedance {
            n: r.n,
            t: r.t,
            x_n: r.x_n,
            raw_threshold: r.raw_threshold,
            p_n: r.p_n,
            lambda_n: r.lambda_n,
            pair_cov: r.pair_cov,
            var_w: r.var_w,
            stein_bound: r.stein_bound,
            mean_mismatch_bound: r.mean_mismatch_bound,
            combined_bound: r.combined_bound,
            threshold_near_atom: r.threshold_near_atom,
        };
        Ok(())
    })
}

/// Runs a simulation over the `t_len` Gumbel coordinates in `t_grid`,
/// retaining order statistics `0..=j_max`. Results do not depend on
/// `workers`; pass 0 to use every available core.
///
/// # Safety
/// `model` must be a live handle, `t_grid` must point to `t_len` readable
/// values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn te_simulate(
    model: *const TeModel,
    n: u64,
    t_grid: *const f64,
    t_len: usize,
    j_max: u32,
    replicates: u64,
    seed: u64,
    workers: usize,
    out: *mut *mut TeSimReport,
) -> TeStatus {
    guard(|| {
        let m = model_ref(model)?;
        if t_grid.is_null() {
            return Err(null("t_grid"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let cfg = SimConfig {
            model: m.clone(),
            n,
            t_grid: slice::from_raw_parts(t_grid, t_len).to_vec(),
            j_max,
            replicates,
            seed,
            workers,
        };
        cfg.validate().map_err(lib)?;
        let report = run_experiment(&cfg, None).map_err(lib)?;
        into_handle(TeSimReport(report), out);
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn te_sim_report_free(report: *mut TeSimReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Copies the exceedance-count histogram for grid point `t_index` into
/// `counts` (at most `len` entries) and writes the number of bins to
/// `bins` and the overflow count to `overflow`.
///
/// # Safety
/// `report` must be a live handle; `counts` must be null or hold `len`
/// writable values; `bins` and `overflow` must be writable.
#[no_mangle]
pub unsafe extern "C" fn te_sim_exceedance_histogram(
    report: *const TeSimReport,
    t_index: usize,
    counts: *mut u64,
    len: usize,
    bins: *mut usize,
    overflow: *mut u64,
) -> TeStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let e = r
            .exceedances
            .get(t_index)
            .ok_or_else(|| (TeStatus::TeDomainError, format!("t index {t_index} out of range")))?;
        *bins.as_mut().ok_or_else(|| null("bins"))? = e.histogram.len();
        *overflow.as_mut().ok_or_else(|| null("overflow"))? = e.overflow;
        if !counts.is_null() {
            let n = len.min(e.histogram.len());
            ptr::copy_nonoverlapping(e.histogram.as_ptr(), counts, n);
        }
        Ok(())
    })
}

/// Empirical total variation distance of the exceedance count at grid point
/// `t_index` from its Poisson limit.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn te_sim_tv_limit(report: *const TeSimReport, t_index: usize, out: *mut f64) -> TeStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let e = r
            .exceedances
            .get(t_index)
            .ok_or_else(|| (TeStatus::TeDomainError, format!("t index {t_index} out of range")))?;
        *out.as_mut().ok_or_else(|| null("out"))? = e.tv_limit;
        Ok(())
    })
}

/// Empirical `P(M_{n,j} <= t)`.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn te_sim_order_stat_cdf(report: *const TeSimReport, j: u32, t: f64, out: *mut f64) -> TeStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        *out.as_mut().ok_or_else(|| null("out"))? = r.order_stat_cdf(j, t).map_err(lib)?;
        Ok(())
    })
}

/// Runs the oracle verification suite with the given enumeration budget.
/// Returns `TE_VERIFICATION_FAILED` when any check fails; `failed` receives
/// the number of failing checks.
///
/// # Safety
/// `failed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn te_verify(budget: u64, failed: *mut usize) -> TeStatus {
    let mut count = 0;
    let status = guard(|| {
        let report = run_suite(&VerifyOptions {
            budget: u128::from(budget),
            negate_covariance: false,
        })
        .map_err(lib)?;
        count = report.failed().len();
        if count > 0 {
            let names: Vec<&str> = report.failed().iter().map(|c| c.name.as_str()).collect();
            return Err((TeStatus::TeVerificationFailed, format!("failed: {}", names.join(", "))));
        }
        Ok(())
    });
    if let Some(f) = failed.as_mut() {
        *f = count;
    }
    status
}

/// Reads a NUL-terminated model file path or builtin name (`classical`,
/// `chess`).
///
/// # Safety
/// `spec` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn te_model_load(spec: *const c_char, out: *mut *mut TeModel) -> TeStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = CStr::from_ptr(spec)
            .to_str()
            .map_err(|_| (TeStatus::TeConfigError, "model spec is not UTF-8".to_string()))?;
        let model = tourney_extremes::cli::model_file::load_model(spec).map_err(lib)?;
        into_handle(TeModel(model), out);
        Ok(())
    })
}
