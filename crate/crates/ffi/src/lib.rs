//! C ABI over the `pipeperf` library.
//!
//! Conventions:
//! - Handles (`PpDist`, `PpTrace`) are opaque; create them through the
//!   `pp_*` constructors and release them with the matching `pp_*_free`.
//!   Freeing a null handle is a no-op.
//! - Every fallible call returns a [`PpStatus`]; output parameters are
//!   written only when the call returns `PP_STATUS_OK`.
//! - On failure a human-readable message is stored per thread; fetch it with
//!   [`pp_last_error_message`].
//! - No call panics across the boundary: unexpected panics are caught and
//!   reported as `PP_STATUS_INTERNAL_PANIC`.

use pipeperf::dist::{self, DistError, DistSpec};
use pipeperf::model::{self, ModelError};
use pipeperf::rng::RandomStream;
use pipeperf::simulate::{self, SimConfig, SimError, SimSource};
use pipeperf::stats::{self, StatsError};
use pipeperf::trace::{self, Method, TimingTrace, TraceError};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Result of a C-ABI call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpStatus {
    /// Success; output parameters are valid.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument violated a documented precondition.
    InvalidArgument = 3,
    /// Textual input (spec string, trace file, metadata) failed to parse.
    ParseError = 4,
    /// A file could not be read or written.
    IoError = 5,
    /// Input data is structurally valid but unusable (empty, degenerate,
    /// inconsistent matrix, ...).
    DataError = 6,
    /// A numerical routine failed (fit divergence, quadrature failure,
    /// degenerate hyper-model).
    NumericalError = 7,
    /// The caller-provided buffer is too small; the required size was
    /// reported through the size output parameter.
    BufferTooSmall = 8,
    /// An unexpected internal panic was caught at the boundary.
    InternalPanic = 9,
}

/// Opaque distribution handle.
pub struct PpDist(DistSpec);

/// Opaque timing-trace handle.
pub struct PpTrace(TimingTrace);

// -- per-thread error message -------------------------------------------------

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: impl std::fmt::Display) {
    LAST_ERROR.with(|cell| {
        let mut slot = cell.borrow_mut();
        slot.clear();
        use std::fmt::Write as _;
        write!(slot, "{message}").ok();
    });
}

fn fail(status: PpStatus, message: impl std::fmt::Display) -> PpStatus {
    set_last_error(message);
    status
}

fn null_arg(name: &str) -> PpStatus {
    fail(PpStatus::NullArgument, format!("null pointer for `{name}`"))
}

/// Copies the message of the most recent failing call on this thread into
/// `buf` (NUL-terminated, truncated to `cap` bytes) and returns the size in
/// bytes the full message needs, including the terminating NUL. `buf` may be
/// null when only the size is wanted.
#[no_mangle]
pub unsafe extern "C" fn pp_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|cell| {
        let message = cell.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let copy = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, copy);
            *buf.add(copy) = 0;
        }
        bytes.len() + 1
    })
}

// -- status mapping -------------------------------------------------------------

fn dist_status(e: &DistError) -> PpStatus {
    match e {
        DistError::InvalidParameter { .. }
        | DistError::PointMassDensity { .. }
        | DistError::InvalidBins { .. } => PpStatus::InvalidArgument,
        DistError::UnsupportedFamily { .. } | DistError::Parse { .. } => PpStatus::ParseError,
        DistError::EmptySample | DistError::DegenerateSample { .. } => PpStatus::DataError,
        DistError::FitDiverged => PpStatus::NumericalError,
    }
}

fn model_status(e: &ModelError) -> PpStatus {
    match e {
        ModelError::Quadrature { .. } => PpStatus::NumericalError,
        ModelError::Dist(d) => dist_status(d),
        ModelError::ZeroCount { .. } => PpStatus::InvalidArgument,
    }
}

fn trace_status(e: &TraceError) -> PpStatus {
    match e {
        TraceError::Io { .. } | TraceError::MissingMetadata { .. } => PpStatus::IoError,
        TraceError::MalformedRow { .. } | TraceError::MalformedMeta { .. } => PpStatus::ParseError,
        TraceError::IterationOutOfRange { .. }
        | TraceError::RankOutOfRange { .. }
        | TraceError::ZeroRestart => PpStatus::InvalidArgument,
        TraceError::DuplicateEntry { .. }
        | TraceError::IncompleteMatrix { .. }
        | TraceError::NonPositiveTime { .. }
        | TraceError::MissingKey { .. }
        | TraceError::IndivisibleLayout { .. }
        | TraceError::EmptyTrace
        | TraceError::RaggedData { .. }
        | TraceError::NonFiniteTime { .. } => PpStatus::DataError,
    }
}

fn stats_status(e: &StatsError) -> PpStatus {
    match e {
        StatsError::EmptySample | StatsError::NonFiniteSample => PpStatus::DataError,
        StatsError::UnsupportedAlpha { .. }
        | StatsError::NodeOutOfRange { .. }
        | StatsError::NotEnoughRanks { .. } => PpStatus::InvalidArgument,
        StatsError::Trace(t) => trace_status(t),
    }
}

fn sim_status(e: &SimError) -> PpStatus {
    match e {
        SimError::Dist(d) => dist_status(d),
        SimError::Model(m) => model_status(m),
        SimError::Trace(t) => trace_status(t),
        SimError::HyperModelDegenerate { .. } => PpStatus::NumericalError,
        SimError::NotEnoughReplicates { .. }
        | SimError::Config { .. }
        | SimError::ConfigMissingKey { .. }
        | SimError::InvalidConfig { .. } => PpStatus::InvalidArgument,
    }
}

// -- guard rails ------------------------------------------------------------------

fn guarded(body: impl FnOnce() -> PpStatus) -> PpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(PpStatus::InternalPanic, "internal panic caught at the C boundary"),
    }
}

unsafe fn dist_ref<'a>(d: *const PpDist) -> Result<&'a DistSpec, PpStatus> {
    d.as_ref().map(|h| &h.0).ok_or_else(|| null_arg("dist"))
}

unsafe fn trace_ref<'a>(t: *const PpTrace) -> Result<&'a TimingTrace, PpStatus> {
    t.as_ref().map(|h| &h.0).ok_or_else(|| null_arg("trace"))
}

unsafe fn slice_arg<'a>(
    name: &str,
    ptr: *const f64,
    len: usize,
) -> Result<&'a [f64], PpStatus> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(null_arg(name))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn out_arg<'a, T>(name: &str, ptr: *mut T) -> Result<&'a mut T, PpStatus> {
    ptr.as_mut().ok_or_else(|| null_arg(name))
}

unsafe fn str_arg<'a>(name: &str, ptr: *const c_char) -> Result<&'a str, PpStatus> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail(PpStatus::InvalidUtf8, format!("`{name}` is not UTF-8: {e}")))
}

fn emit_dist(spec: DistSpec, out: &mut *mut PpDist) -> PpStatus {
    *out = Box::into_raw(Box::new(PpDist(spec)));
    PpStatus::Ok
}

// -- distributions -----------------------------------------------------------------

/// Creates a uniform distribution on [a, a + s] (`s = 0` is a point mass).
#[no_mangle]
pub unsafe extern "C" fn pp_dist_uniform(a: f64, s: f64, out: *mut *mut PpDist) -> PpStatus {
    guarded(|| {
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match DistSpec::uniform(a, s) {
            Ok(spec) => emit_dist(spec, out),
            Err(e) => fail(dist_status(&e), e),
        }
    })
}

/// Creates a Johnson S_U distribution with shape (a, b), location, and scale.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_johnson_su(
    a: f64,
    b: f64,
    loc: f64,
    scale: f64,
    out: *mut *mut PpDist,
) -> PpStatus {
    guarded(|| {
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match DistSpec::johnson_su(a, b, loc, scale) {
            Ok(spec) => emit_dist(spec, out),
            Err(e) => fail(dist_status(&e), e),
        }
    })
}

/// Creates the empirical (step) distribution of `len` finite values.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_empirical(
    values: *const f64,
    len: usize,
    out: *mut *mut PpDist,
) -> PpStatus {
    guarded(|| {
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let sample = match slice_arg("values", values, len) {
            Ok(v) => v.to_vec(),
            Err(s) => return s,
        };
        match DistSpec::empirical(sample) {
            Ok(spec) => emit_dist(spec, out),
            Err(e) => fail(dist_status(&e), e),
        }
    })
}

/// Parses a textual spec like `uniform;a=0;s=1` or
/// `johnsonsu;a=-0.5;b=2;loc=1e-3;scale=2e-4`.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_parse(text: *const c_char, out: *mut *mut PpDist) -> PpStatus {
    guarded(|| {
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let text = match str_arg("text", text) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match text.parse::<DistSpec>() {
            Ok(spec) => emit_dist(spec, out),
            Err(e) => fail(dist_status(&e), e),
        }
    })
}

/// Writes the canonical textual form of `dist` into `buf` (NUL-terminated).
/// `needed` always receives the full size in bytes including the NUL; when
/// `cap` is too small nothing is written and `PP_STATUS_BUFFER_TOO_SMALL` is
/// returned.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_format(
    dist: *const PpDist,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let needed = match out_arg("needed", needed) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let text = spec.to_string();
        *needed = text.len() + 1;
        if buf.is_null() || cap < text.len() + 1 {
            return fail(
                PpStatus::BufferTooSmall,
                format!("spec needs {} bytes, buffer holds {cap}", text.len() + 1),
            );
        }
        std::ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
        *buf.add(text.len()) = 0;
        PpStatus::Ok
    })
}

/// Releases a distribution handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_free(dist: *mut PpDist) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Mean of the distribution.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_mean(dist: *const PpDist, out: *mut f64) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = spec.mean();
        PpStatus::Ok
    })
}

/// Probability density at `x`. Point masses have no density at their atom.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_pdf(dist: *const PpDist, x: f64, out: *mut f64) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match spec.pdf(x) {
            Ok(v) => {
                *out = v;
                PpStatus::Ok
            }
            Err(e) => fail(dist_status(&e), e),
        }
    })
}

/// Cumulative distribution function at `x`.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_cdf(dist: *const PpDist, x: f64, out: *mut f64) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = spec.cdf(x);
        PpStatus::Ok
    })
}

/// Fills `out` with `len` draws from the stream keyed by `seed`. The same
/// (distribution, seed, len) always produces the same values.
#[no_mangle]
pub unsafe extern "C" fn pp_dist_sample(
    dist: *const PpDist,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        if len == 0 {
            return PpStatus::Ok;
        }
        if out.is_null() {
            return null_arg("out");
        }
        let mut rng = RandomStream::seeded(seed);
        let draws = spec.sample(&mut rng, len);
        std::ptr::copy_nonoverlapping(draws.as_ptr(), out, len);
        PpStatus::Ok
    })
}

/// Fits a uniform distribution to a sample (min/range estimator).
#[no_mangle]
pub unsafe extern "C" fn pp_fit_uniform(
    values: *const f64,
    len: usize,
    out: *mut *mut PpDist,
) -> PpStatus {
    guarded(|| {
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let sample = match slice_arg("values", values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match dist::fit_uniform(sample) {
            Ok(spec) => emit_dist(spec, out),
            Err(e) => fail(dist_status(&e), e),
        }
    })
}

/// Fits a Johnson S_U distribution by maximum likelihood. `log_likelihood`
/// may be null when the attained log-likelihood is not wanted.
#[no_mangle]
pub unsafe extern "C" fn pp_fit_johnson_su(
    values: *const f64,
    len: usize,
    seed: u64,
    log_likelihood: *mut f64,
    out: *mut *mut PpDist,
) -> PpStatus {
    guarded(|| {
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let sample = match slice_arg("values", values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match dist::fit_johnson_su(sample, seed) {
            Ok(fit) => {
                if !log_likelihood.is_null() {
                    *log_likelihood = fit.log_likelihood;
                }
                emit_dist(fit.spec, out)
            }
            Err(e) => fail(dist_status(&e), e),
        }
    })
}

/// Sum of squared differences between the fitted density and a `bins`-bin
/// histogram of the sample.
#[no_mangle]
pub unsafe extern "C" fn pp_goodness_sse(
    dist: *const PpDist,
    values: *const f64,
    len: usize,
    bins: usize,
    out: *mut f64,
) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let sample = match slice_arg("values", values, len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match dist::goodness_sse(spec, sample, bins) {
            Ok(v) => {
                *out = v;
                PpStatus::Ok
            }
            Err(e) => fail(dist_status(&e), e),
        }
    })
}

// -- runtime models ------------------------------------------------------------------

/// Expected maximum of `n` independent draws from the distribution.
#[no_mangle]
pub unsafe extern "C" fn pp_expected_max(
    dist: *const PpDist,
    n: usize,
    out: *mut f64,
) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match model::expected_max(spec, n) {
            Ok(v) => {
                *out = v;
                PpStatus::Ok
            }
            Err(e) => fail(model_status(&e), e),
        }
    })
}

/// Total of `iterations` synchronized iterations, each costing the expected
/// maximum over `n` processes.
#[no_mangle]
pub unsafe extern "C" fn pp_stationary_barrier_total(
    dist: *const PpDist,
    iterations: usize,
    n: usize,
    out: *mut f64,
) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match model::stationary_barrier_total(spec, iterations, n) {
            Ok(est) => {
                *out = est.seconds;
                PpStatus::Ok
            }
            Err(e) => fail(model_status(&e), e),
        }
    })
}

/// Total of `iterations` overlap-friendly iterations at the distribution mean.
#[no_mangle]
pub unsafe extern "C" fn pp_stationary_pipelined_total(
    dist: *const PpDist,
    iterations: usize,
    out: *mut f64,
) -> PpStatus {
    guarded(|| {
        let spec = match dist_ref(dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match model::stationary_pipelined_total(spec, iterations) {
            Ok(est) => {
                *out = est.seconds;
                PpStatus::Ok
            }
            Err(e) => fail(model_status(&e), e),
        }
    })
}

/// Moment bound mu + sigma (n-1)/sqrt(2n-1) on the expected maximum of `n`
/// i.i.d. draws.
#[no_mangle]
pub extern "C" fn pp_cramer_bound(mu: f64, sigma: f64, n: usize) -> f64 {
    model::cramer_bound(mu, sigma, n.max(1))
}

/// Distribution-free bound mu + sigma sqrt(n-1) valid under arbitrary
/// dependence.
#[no_mangle]
pub extern "C" fn pp_bertsimas_bound(mu: f64, sigma: f64, n: usize) -> f64 {
    model::bertsimas_bound(mu, sigma, n.max(1))
}

// -- two-sample testing ----------------------------------------------------------------

/// Two-sample Kolmogorov-Smirnov statistic (tie-aware).
#[no_mangle]
pub unsafe extern "C" fn pp_ks_statistic(
    first: *const f64,
    first_len: usize,
    second: *const f64,
    second_len: usize,
    out: *mut f64,
) -> PpStatus {
    guarded(|| {
        let a = match slice_arg("first", first, first_len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let b = match slice_arg("second", second, second_len) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match stats::ks_statistic(a, b) {
            Ok(v) => {
                *out = v;
                PpStatus::Ok
            }
            Err(e) => fail(stats_status(&e), e),
        }
    })
}

/// Rejection threshold c(alpha) sqrt((n+m)/(nm)) for tabulated alpha levels
/// (0.10, 0.05, 0.025, 0.01, 0.005, 0.001).
#[no_mangle]
pub unsafe extern "C" fn pp_ks_threshold(
    n: usize,
    m: usize,
    alpha: f64,
    out: *mut f64,
) -> PpStatus {
    guarded(|| {
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match stats::ks_threshold(n, m, alpha) {
            Ok(v) => {
                *out = v;
                PpStatus::Ok
            }
            Err(e) => fail(stats_status(&e), e),
        }
    })
}

// -- timing traces ------------------------------------------------------------------------

/// Loads a trace CSV and its `.meta` sidecar from `path` (UTF-8).
#[no_mangle]
pub unsafe extern "C" fn pp_trace_load(path: *const c_char, out: *mut *mut PpTrace) -> PpStatus {
    guarded(|| {
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let path = match str_arg("path", path) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match trace::load_trace(Path::new(path)) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(PpTrace(t)));
                PpStatus::Ok
            }
            Err(e) => fail(trace_status(&e), e),
        }
    })
}

/// Releases a trace handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn pp_trace_free(t: *mut PpTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of iterations (rows).
#[no_mangle]
pub unsafe extern "C" fn pp_trace_iterations(t: *const PpTrace, out: *mut usize) -> PpStatus {
    guarded(|| {
        let tr = match trace_ref(t) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = tr.iterations();
        PpStatus::Ok
    })
}

/// Number of processes (columns).
#[no_mangle]
pub unsafe extern "C" fn pp_trace_processes(t: *const PpTrace, out: *mut usize) -> PpStatus {
    guarded(|| {
        let tr = match trace_ref(t) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = tr.processes();
        PpStatus::Ok
    })
}

/// New trace with the restart-cycle fill iterations removed (identity for
/// traces without fill).
#[no_mangle]
pub unsafe extern "C" fn pp_trace_filter_fill(
    t: *const PpTrace,
    out: *mut *mut PpTrace,
) -> PpStatus {
    guarded(|| {
        let tr = match trace_ref(t) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = Box::into_raw(Box::new(PpTrace(trace::filter_fill(tr))));
        PpStatus::Ok
    })
}

/// Total runtime under synchronized semantics: sum over iterations of the
/// slowest process.
#[no_mangle]
pub unsafe extern "C" fn pp_trace_eval_barrier(t: *const PpTrace, out: *mut f64) -> PpStatus {
    guarded(|| {
        let tr = match trace_ref(t) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = simulate::eval_barrier(tr);
        PpStatus::Ok
    })
}

/// Total runtime under overlapped semantics: slowest process's summed work.
#[no_mangle]
pub unsafe extern "C" fn pp_trace_eval_pipeline(t: *const PpTrace, out: *mut f64) -> PpStatus {
    guarded(|| {
        let tr = match trace_ref(t) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let out = match out_arg("out", out) {
            Ok(v) => v,
            Err(s) => return s,
        };
        *out = simulate::eval_pipeline(tr);
        PpStatus::Ok
    })
}

/// Per-iteration uniform fits: writes each iteration's minimum into `a_out`
/// and span into `s_out`. Both arrays must hold exactly
/// `pp_trace_iterations` values.
#[no_mangle]
pub unsafe extern "C" fn pp_trace_iteration_fits(
    t: *const PpTrace,
    a_out: *mut f64,
    s_out: *mut f64,
    len: usize,
) -> PpStatus {
    guarded(|| {
        let tr = match trace_ref(t) {
            Ok(v) => v,
            Err(s) => return s,
        };
        if a_out.is_null() {
            return null_arg("a_out");
        }
        if s_out.is_null() {
            return null_arg("s_out");
        }
        if len != tr.iterations() {
            return fail(
                PpStatus::InvalidArgument,
                format!("arrays hold {len} values, trace has {} iterations", tr.iterations()),
            );
        }
        let fits = trace::per_iteration_uniform_fits(tr);
        std::ptr::copy_nonoverlapping(fits.a.as_ptr(), a_out, len);
        std::ptr::copy_nonoverlapping(fits.s.as_ptr(), s_out, len);
        PpStatus::Ok
    })
}

// -- Monte Carlo prediction -----------------------------------------------------------------

/// Monte Carlo runtime prediction from hyper-distributions of the
/// per-iteration uniform minimum (`a_dist`) and span (`s_dist`): mean total
/// over `replicates` independent parameter draws. `pipelined` selects the
/// overlapped semantics; otherwise each iteration costs the expected maximum
/// over `processes`. `clamped_out` (nullable) receives the number of negative
/// span draws clamped to zero.
#[no_mangle]
pub unsafe extern "C" fn pp_mc_predict_hyper(
    a_dist: *const PpDist,
    s_dist: *const PpDist,
    iterations: usize,
    processes: usize,
    pipelined: bool,
    seed: u64,
    replicates: usize,
    total_out: *mut f64,
    clamped_out: *mut usize,
) -> PpStatus {
    guarded(|| {
        let a = match dist_ref(a_dist) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let s = match dist_ref(s_dist) {
            Ok(v) => v,
            Err(st) => return st,
        };
        let total_out = match out_arg("total_out", total_out) {
            Ok(v) => v,
            Err(st) => return st,
        };
        let config = SimConfig {
            iterations,
            processes,
            seed,
            mode: if pipelined { Method::Pipelined } else { Method::Barrier },
            source: SimSource::Hyper { a_dist: a.clone(), s_dist: s.clone() },
        };
        match simulate::mc_predict(&config, replicates) {
            Ok(result) => {
                *total_out = result.total_seconds;
                if !clamped_out.is_null() {
                    *clamped_out = result.clamped_spans;
                }
                PpStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e),
        }
    })
}
