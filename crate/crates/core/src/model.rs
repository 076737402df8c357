//! Expected-runtime models.
//!
//! A run of K iterations on n processes costs, in expectation,
//!
//! * barrier-synchronized: K * E[max of n draws] (every iteration waits for
//!   the slowest process), and
//! * pipelined: K * E[one draw] (waiting overlaps, so only the average
//!   matters in the limit).
//!
//! `expected_max` is the workhorse: n * integral of x F(x)^(n-1) f(x) dx,
//! with closed forms where they exist and adaptive quadrature elsewhere.
//! Non-stationary variants sum a different spec per iteration. The two
//! classical mean/variance bounds on the expected maximum are included for
//! comparison columns.

use crate::dist::{DistError, DistSpec};
use crate::numeric;
use crate::quad::{self, QuadOptions, QuadratureError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("quadrature failed{}: {source}", fmt_iteration(.iteration))]
    Quadrature { iteration: Option<usize>, source: QuadratureError },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("{name} must be at least 1 (got 0)")]
    ZeroCount { name: &'static str },
}

fn fmt_iteration(iteration: &Option<usize>) -> String {
    match iteration {
        Some(k) => format!(" at iteration {k}"),
        None => String::new(),
    }
}

impl From<QuadratureError> for ModelError {
    fn from(source: QuadratureError) -> Self {
        ModelError::Quadrature { iteration: None, source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    StationaryBarrier,
    StationaryPipelined,
    NonStationaryBarrier,
    NonStationaryPipelined,
    CramerBound,
    BertsimasBound,
}

/// A runtime prediction in seconds, tagged with how it was produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuntimeEstimate {
    pub seconds: f64,
    pub model: ModelKind,
    /// Iteration count the total covers.
    pub iterations: usize,
    /// Effective process count entering the order statistic (1 for
    /// pipelined models, where it plays no role).
    pub n_eff: usize,
}

/// Expected maximum of `n` i.i.d. draws from `spec`.
///
/// Uniform uses the closed form `a + s * n/(n+1)`, Empirical the exact
/// order-statistic plug-in on the sorted sample, JohnsonSu adaptive
/// quadrature. `n = 1` reduces to the mean for every family.
pub fn expected_max(spec: &DistSpec, n: usize) -> Result<f64, ModelError> {
    if n == 0 {
        return Err(ModelError::ZeroCount { name: "n" });
    }
    match spec {
        DistSpec::Uniform { a, s } => Ok(a + s * n as f64 / (n as f64 + 1.0)),
        DistSpec::Empirical { sample } => Ok(empirical_expected_max(sample, n)),
        DistSpec::JohnsonSu { .. } => expected_max_quadrature(spec, n),
    }
}

/// E[max of n] for sampling with replacement from a sorted sample:
/// sum_i x_(i) * ((i/m)^n - ((i-1)/m)^n).
fn empirical_expected_max(sorted: &[f64], n: usize) -> f64 {
    let m = sorted.len() as f64;
    let nf = n as f64;
    let terms: Vec<f64> = sorted
        .iter()
        .enumerate()
        .map(|(idx, &x)| {
            let i = (idx + 1) as f64;
            x * ((i / m).powf(nf) - ((i - 1.0) / m).powf(nf))
        })
        .collect();
    numeric::pairwise_sum(&terms)
}

/// Quadrature route for `expected_max`, kept independent of the closed forms
/// so the two can cross-check each other. Only families with a density
/// integrate; Empirical is rejected.
pub fn expected_max_quadrature(spec: &DistSpec, n: usize) -> Result<f64, ModelError> {
    expected_max_quadrature_opts(spec, n, None, &QuadOptions::default())
}

/// Quadrature restricted to observed data bounds [lo, hi] — the convention
/// when the spec was fitted to a sample and tail extrapolation beyond the
/// data is unwanted.
pub fn expected_max_quadrature_within(
    spec: &DistSpec,
    n: usize,
    lo: f64,
    hi: f64,
) -> Result<f64, ModelError> {
    expected_max_quadrature_opts(spec, n, Some((lo, hi)), &QuadOptions::default())
}

pub(crate) fn expected_max_quadrature_opts(
    spec: &DistSpec,
    n: usize,
    window: Option<(f64, f64)>,
    opts: &QuadOptions,
) -> Result<f64, ModelError> {
    if n == 0 {
        return Err(ModelError::ZeroCount { name: "n" });
    }
    let nf = n as f64;
    match spec {
        DistSpec::Uniform { a, s } => {
            if *s == 0.0 {
                // Point mass: max of any number of draws is the atom.
                return Ok(*a);
            }
            let (mut lo, mut hi) = (*a, a + s);
            if let Some((wlo, whi)) = window {
                lo = lo.max(wlo);
                hi = hi.min(whi);
            }
            if hi <= lo {
                return Ok(0.0);
            }
            // Mass of F^(n-1) piles up near the top; seed panels with a
            // geometric ladder so the peak is visible to the first pass.
            let mut points = vec![lo];
            let mut offset = (hi - lo) * 0.5;
            while offset * nf > 0.05 * (hi - lo) {
                points.push(hi - offset);
                offset *= 0.5;
            }
            points.push(hi);
            let spec = spec.clone();
            let value = quad::integrate_segments(
                move |x| nf * x * spec.cdf(x).powf(nf - 1.0) * spec.pdf(x).unwrap(),
                &points,
                opts,
            )?
            .value;
            Ok(value)
        }
        DistSpec::JohnsonSu { a, b, loc, scale } => {
            // Substitute u = a + b asinh((x - loc)/scale): F(x) = Phi(u),
            // f(x) dx = phi(u) du, and the integrand stays O(1)-smooth no
            // matter how violently sinh stretches the x axis.
            let (a, b, loc, scale) = (*a, *b, *loc, *scale);
            let (mut u_lo, mut u_hi) = (-crate::dist::JSU_Z_RANGE, crate::dist::JSU_Z_RANGE);
            if let Some((wlo, whi)) = window {
                let to_u = |x: f64| a + b * ((x - loc) / scale).asinh();
                u_lo = u_lo.max(to_u(wlo));
                u_hi = u_hi.min(to_u(whi));
            }
            if u_hi <= u_lo {
                return Ok(0.0);
            }
            // Unit-width panels in u cover the normal density evenly.
            let mut points = vec![u_lo];
            let mut u = u_lo.floor() + 1.0;
            while u < u_hi {
                if u > u_lo {
                    points.push(u);
                }
                u += 1.0;
            }
            points.push(u_hi);
            let value = quad::integrate_segments(
                move |u| {
                    let x = crate::dist::johnson_su_from_normal(a, b, loc, scale, u);
                    nf * x * std_normal_cdf(u).powf(nf - 1.0) * std_normal_pdf(u)
                },
                &points,
                opts,
            )?
            .value;
            Ok(value)
        }
        DistSpec::Empirical { .. } => {
            Err(DistError::UnsupportedFamily { family: "empirical" }.into())
        }
    }
}

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / 2.5066282746310002
}

fn std_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// K iterations, each costing the expected maximum over n processes.
pub fn stationary_barrier_total(
    spec: &DistSpec,
    iterations: usize,
    n: usize,
) -> Result<RuntimeEstimate, ModelError> {
    if iterations == 0 {
        return Err(ModelError::ZeroCount { name: "iterations" });
    }
    let per_iteration = expected_max(spec, n)?;
    Ok(RuntimeEstimate {
        seconds: iterations as f64 * per_iteration,
        model: ModelKind::StationaryBarrier,
        iterations,
        n_eff: n,
    })
}

/// K iterations at the distribution mean: the pipelined limit, where no
/// iteration waits on stragglers.
pub fn stationary_pipelined_total(
    spec: &DistSpec,
    iterations: usize,
) -> Result<RuntimeEstimate, ModelError> {
    if iterations == 0 {
        return Err(ModelError::ZeroCount { name: "iterations" });
    }
    Ok(RuntimeEstimate {
        seconds: iterations as f64 * spec.mean(),
        model: ModelKind::StationaryPipelined,
        iterations,
        n_eff: 1,
    })
}

/// Per-iteration specs, summed expected maxima. A quadrature failure names
/// the iteration that caused it.
pub fn nonstationary_barrier_total(
    specs: &[DistSpec],
    n: usize,
) -> Result<RuntimeEstimate, ModelError> {
    nonstationary_barrier_total_opts(specs, n, &QuadOptions::default())
}

pub(crate) fn nonstationary_barrier_total_opts(
    specs: &[DistSpec],
    n: usize,
    opts: &QuadOptions,
) -> Result<RuntimeEstimate, ModelError> {
    if specs.is_empty() {
        return Err(ModelError::ZeroCount { name: "iterations" });
    }
    let mut terms = Vec::with_capacity(specs.len());
    for (k, spec) in specs.iter().enumerate() {
        let term = match spec {
            DistSpec::JohnsonSu { .. } => expected_max_quadrature_opts(spec, n, None, opts),
            _ => expected_max(spec, n),
        };
        terms.push(term.map_err(|e| match e {
            ModelError::Quadrature { source, .. } => {
                ModelError::Quadrature { iteration: Some(k), source }
            }
            other => other,
        })?);
    }
    Ok(RuntimeEstimate {
        seconds: numeric::pairwise_sum(&terms),
        model: ModelKind::NonStationaryBarrier,
        iterations: specs.len(),
        n_eff: n,
    })
}

/// Per-iteration specs, summed means.
pub fn nonstationary_pipelined_total(specs: &[DistSpec]) -> Result<RuntimeEstimate, ModelError> {
    if specs.is_empty() {
        return Err(ModelError::ZeroCount { name: "iterations" });
    }
    let terms: Vec<f64> = specs.iter().map(DistSpec::mean).collect();
    Ok(RuntimeEstimate {
        seconds: numeric::pairwise_sum(&terms),
        model: ModelKind::NonStationaryPipelined,
        iterations: specs.len(),
        n_eff: 1,
    })
}

/// Hartley-David style bound on the expected maximum of n i.i.d. draws with
/// the given mean and standard deviation: mu + sigma (n-1)/sqrt(2n-1).
pub fn cramer_bound(mu: f64, sigma: f64, n: usize) -> f64 {
    debug_assert!(n >= 1);
    let nf = n as f64;
    mu + sigma * (nf - 1.0) / (2.0 * nf - 1.0).sqrt()
}

/// Looser distribution-free bound: mu + sigma sqrt(n-1).
pub fn bertsimas_bound(mu: f64, sigma: f64, n: usize) -> f64 {
    debug_assert!(n >= 1);
    mu + sigma * ((n as f64) - 1.0).sqrt()
}
