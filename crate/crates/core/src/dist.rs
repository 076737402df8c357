//! Distribution kernel: the three families used to model per-iteration
//! compute times, plus fitting and goodness-of-fit.
//!
//! * `Uniform` — parameterized by minimum `a` and span `s` (not endpoints),
//!   because per-iteration fits produce exactly (min, span). `s = 0` is a
//!   legal point mass.
//! * `JohnsonSu` — the unbounded Johnson family: if Z is standard normal,
//!   `X = loc + scale * sinh((Z - a) / b)`. Flexible enough for the skewed,
//!   heavy-tailed iteration-time samples that Gaussians fit poorly.
//! * `Empirical` — a sorted sample treated as its own step distribution;
//!   it has a CDF and mean but no density.
//!
//! Every spec serializes to a one-line `family;key=value;...` record with
//! round-trip-exact floats, which is how fitted models move between the CLI
//! commands.

use crate::numeric;
use crate::opt::{nelder_mead, SimplexOptions};
use crate::rng::RandomStream;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("parameter {name} must be {requirement} (got {value})")]
    InvalidParameter { name: &'static str, requirement: &'static str, value: f64 },
    #[error("point mass at {at} has no density")]
    PointMassDensity { at: f64 },
    #[error("operation is not defined for the {family} family")]
    UnsupportedFamily { family: &'static str },
    #[error("empty sample")]
    EmptySample,
    #[error("sample is too degenerate to fit: {reason}")]
    DegenerateSample { reason: &'static str },
    #[error("fit did not converge within the iteration budget")]
    FitDiverged,
    #[error("histogram needs at least 2 bins (got {bins})")]
    InvalidBins { bins: usize },
    #[error("cannot parse distribution spec: {reason}")]
    Parse { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum DistSpec {
    /// Uniform on [a, a + s]; `s = 0` is a point mass at `a`.
    Uniform { a: f64, s: f64 },
    /// Johnson S_U with shape (a, b), location `loc`, scale `scale`.
    JohnsonSu { a: f64, b: f64, loc: f64, scale: f64 },
    /// Step distribution of a sorted, finite sample.
    Empirical { sample: Vec<f64> },
}

/// Johnson S_U draws map the normal z-range [-8, 8] onto the support used
/// for integration; sinh arguments are capped so the bound stays finite even
/// for tiny shape `b`.
pub(crate) const JSU_Z_RANGE: f64 = 8.0;
const SINH_ARG_CAP: f64 = 700.0;

const SQRT_2PI: f64 = 2.5066282746310002;

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / SQRT_2PI
}

fn std_normal_cdf(t: f64) -> f64 {
    // erfc keeps full relative accuracy in the lower tail, where
    // 0.5 * (1 + erf) would cancel.
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

fn require_finite(name: &'static str, value: f64) -> Result<(), DistError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(DistError::InvalidParameter { name, requirement: "finite", value })
    }
}

/// The sampling transform behind JohnsonSu draws, exposed so callers can
/// push a chosen normal deviate `z` through it (handy for exactness checks).
pub fn johnson_su_from_normal(a: f64, b: f64, loc: f64, scale: f64, z: f64) -> f64 {
    // The cap keeps extreme normal deviates finite; sinh(700) ~ 5e303 is
    // already far past anything a double-precision tail can weight.
    let arg = ((z - a) / b).clamp(-SINH_ARG_CAP, SINH_ARG_CAP);
    loc + scale * arg.sinh()
}

impl DistSpec {
    pub fn uniform(a: f64, s: f64) -> Result<Self, DistError> {
        require_finite("a", a)?;
        require_finite("s", s)?;
        if s < 0.0 {
            return Err(DistError::InvalidParameter { name: "s", requirement: "non-negative", value: s });
        }
        Ok(DistSpec::Uniform { a, s })
    }

    pub fn johnson_su(a: f64, b: f64, loc: f64, scale: f64) -> Result<Self, DistError> {
        require_finite("a", a)?;
        require_finite("b", b)?;
        require_finite("loc", loc)?;
        require_finite("scale", scale)?;
        if b <= 0.0 {
            return Err(DistError::InvalidParameter { name: "b", requirement: "positive", value: b });
        }
        if scale <= 0.0 {
            return Err(DistError::InvalidParameter { name: "scale", requirement: "positive", value: scale });
        }
        Ok(DistSpec::JohnsonSu { a, b, loc, scale })
    }

    /// Builds an empirical spec; the sample is sorted here to establish the
    /// invariant.
    pub fn empirical(mut sample: Vec<f64>) -> Result<Self, DistError> {
        if sample.is_empty() {
            return Err(DistError::EmptySample);
        }
        for &x in &sample {
            require_finite("sample", x)?;
        }
        sample.sort_by(f64::total_cmp);
        Ok(DistSpec::Empirical { sample })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            DistSpec::Uniform { .. } => "uniform",
            DistSpec::JohnsonSu { .. } => "johnsonsu",
            DistSpec::Empirical { .. } => "empirical",
        }
    }

    /// Probability density at `x`.
    ///
    /// Errors: a uniform point mass has no density at its atom
    /// (`PointMassDensity`), and the empirical family has no density at all
    /// (`UnsupportedFamily`).
    pub fn pdf(&self, x: f64) -> Result<f64, DistError> {
        match self {
            DistSpec::Uniform { a, s } => {
                if *s == 0.0 {
                    if x == *a {
                        Err(DistError::PointMassDensity { at: *a })
                    } else {
                        Ok(0.0)
                    }
                } else if x >= *a && x <= a + s {
                    Ok(1.0 / s)
                } else {
                    Ok(0.0)
                }
            }
            DistSpec::JohnsonSu { a, b, loc, scale } => {
                let z = (x - loc) / scale;
                let t = a + b * z.asinh();
                Ok(b / (scale * (z * z + 1.0).sqrt()) * std_normal_pdf(t))
            }
            DistSpec::Empirical { .. } => Err(DistError::UnsupportedFamily { family: "empirical" }),
        }
    }

    /// Cumulative distribution at `x`. Total for every family: a point mass
    /// is a unit step, the empirical CDF is the fraction of points <= x.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DistSpec::Uniform { a, s } => {
                if *s == 0.0 {
                    if x < *a {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    ((x - a) / s).clamp(0.0, 1.0)
                }
            }
            DistSpec::JohnsonSu { a, b, loc, scale } => {
                let z = (x - loc) / scale;
                std_normal_cdf(a + b * z.asinh())
            }
            DistSpec::Empirical { sample } => {
                let below = sample.partition_point(|&v| v <= x);
                below as f64 / sample.len() as f64
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistSpec::Uniform { a, s } => a + 0.5 * s,
            DistSpec::JohnsonSu { a, b, loc, scale } => {
                loc - scale * (0.5 / (b * b)).exp() * (a / b).sinh()
            }
            DistSpec::Empirical { sample } => numeric::mean(sample),
        }
    }

    /// One draw. Uniform: `a + s*u`. JohnsonSu: the sinh transform of a
    /// standard normal. Empirical: resample with replacement.
    pub fn draw(&self, rng: &mut RandomStream) -> f64 {
        match self {
            DistSpec::Uniform { a, s } => a + s * rng.next_f64(),
            DistSpec::JohnsonSu { a, b, loc, scale } => {
                johnson_su_from_normal(*a, *b, *loc, *scale, rng.next_normal())
            }
            DistSpec::Empirical { sample } => sample[rng.next_index(sample.len())],
        }
    }

    /// `n` i.i.d. draws.
    pub fn sample(&self, rng: &mut RandomStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// Integration support: exact for Uniform and Empirical; for JohnsonSu
    /// the image of the normal z-range [-8, 8], beyond which the remaining
    /// mass (~1e-15) is far below the quadrature tolerances.
    pub fn support(&self) -> (f64, f64) {
        match self {
            DistSpec::Uniform { a, s } => (*a, a + s),
            DistSpec::JohnsonSu { a, b, loc, scale } => {
                let lo_arg = ((-JSU_Z_RANGE - a) / b).clamp(-SINH_ARG_CAP, SINH_ARG_CAP);
                let hi_arg = ((JSU_Z_RANGE - a) / b).clamp(-SINH_ARG_CAP, SINH_ARG_CAP);
                (loc + scale * lo_arg.sinh(), loc + scale * hi_arg.sinh())
            }
            DistSpec::Empirical { sample } => (sample[0], sample[sample.len() - 1]),
        }
    }
}

/// Maximum-likelihood uniform fit: `a = min`, `s = max - min`.
pub fn fit_uniform(sample: &[f64]) -> Result<DistSpec, DistError> {
    if sample.is_empty() {
        return Err(DistError::EmptySample);
    }
    let mut min = sample[0];
    let mut max = sample[0];
    for &x in sample {
        require_finite("sample", x)?;
        min = min.min(x);
        max = max.max(x);
    }
    DistSpec::uniform(min, max - min)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JohnsonSuFit {
    pub spec: DistSpec,
    /// Total log-likelihood of the sample at the fitted parameters.
    pub log_likelihood: f64,
}

const FIT_MIN_SAMPLE: usize = 8;
const FIT_MIN_DISTINCT: usize = 4;
const FIT_RESTARTS: usize = 3;
const FIT_MAX_ITER: usize = 2000;
const FIT_F_TOL: f64 = 1e-10;
const FIT_STEP: f64 = 0.3;
const LOG_2PI: f64 = 1.8378770664093453;

/// Mean negative log-likelihood of Johnson S_U in the optimizer's
/// coordinates theta = (a, ln b, loc, ln scale).
fn jsu_neg_mean_loglik(theta: &[f64; 4], sample: &[f64]) -> f64 {
    let (a, b, loc, scale) = (theta[0], theta[1].exp(), theta[2], theta[3].exp());
    if !b.is_finite() || !scale.is_finite() || b == 0.0 || scale == 0.0 {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for &x in sample {
        let z = (x - loc) / scale;
        let t = a + b * z.asinh();
        acc += 0.5 * (z * z).ln_1p() + 0.5 * t * t;
    }
    let n = sample.len() as f64;
    let v = acc / n - theta[1] + theta[3] + 0.5 * LOG_2PI;
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

pub fn total_log_likelihood(spec: &DistSpec, sample: &[f64]) -> Result<f64, DistError> {
    let mut terms = Vec::with_capacity(sample.len());
    for &x in sample {
        let p = spec.pdf(x)?;
        terms.push(p.ln());
    }
    Ok(numeric::pairwise_sum(&terms))
}

/// Maximum-likelihood Johnson S_U fit.
///
/// The sample is standardized by median and IQR so the optimizer works at
/// unit scale, then a Nelder-Mead simplex minimizes the mean negative
/// log-likelihood over (a, ln b, loc, ln scale), started from the
/// quantile-matching guess and three seed-derived perturbations of it. The
/// best converged restart wins; the whole procedure is a pure function of
/// `(sample, seed)`.
pub fn fit_johnson_su(sample: &[f64], seed: u64) -> Result<JohnsonSuFit, DistError> {
    if sample.is_empty() {
        return Err(DistError::EmptySample);
    }
    if sample.len() < FIT_MIN_SAMPLE {
        return Err(DistError::DegenerateSample { reason: "fewer than 8 points" });
    }
    for &x in sample {
        if !x.is_finite() {
            return Err(DistError::DegenerateSample { reason: "non-finite values" });
        }
    }
    let sorted = numeric::sorted_copy(sample);
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    if distinct < FIT_MIN_DISTINCT {
        return Err(DistError::DegenerateSample { reason: "fewer than 4 distinct values" });
    }

    // Standardize: y = (x - center) / spread, spread > 0 guaranteed by the
    // distinct-value check (IQR can still be 0 for lumpy samples; fall back
    // to the full range).
    let center = numeric::quantile_sorted(&sorted, 0.5);
    let iqr = numeric::quantile_sorted(&sorted, 0.75) - numeric::quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { iqr } else { sorted[sorted.len() - 1] - sorted[0] };
    let y: Vec<f64> = sample.iter().map(|x| (x - center) / spread).collect();
    let y_sorted = numeric::sorted_copy(&y);

    // Quantile-matching start: median -> loc, IQR -> scale, shape (0, 1).
    let loc0 = numeric::quantile_sorted(&y_sorted, 0.5);
    let iqr0 = numeric::quantile_sorted(&y_sorted, 0.75) - numeric::quantile_sorted(&y_sorted, 0.25);
    let scale0 = if iqr0 > 0.0 { iqr0 } else { 1.0 };
    let start = [0.0, 0.0, loc0, scale0.ln()];

    let opts = SimplexOptions { step: FIT_STEP, f_tol: FIT_F_TOL, max_iter: FIT_MAX_ITER };
    let mut best: Option<([f64; 4], f64)> = None;
    for restart in 0..=FIT_RESTARTS {
        let mut theta = start;
        if restart > 0 {
            let mut rng = RandomStream::split(seed, restart as u64);
            for t in &mut theta {
                *t += rng.next_f64() - 0.5;
            }
        }
        let out = nelder_mead(|th: &[f64; 4]| jsu_neg_mean_loglik(th, &y), theta, &opts);
        if out.converged && out.f.is_finite() && best.map_or(true, |(_, f)| out.f < f) {
            best = Some((out.x, out.f));
        }
    }
    let (theta, f) = best.ok_or(DistError::FitDiverged)?;

    let spec = DistSpec::johnson_su(
        theta[0],
        theta[1].exp(),
        center + spread * theta[2],
        spread * theta[3].exp(),
    )?;
    // Un-standardize the likelihood: densities pick up a 1/spread factor.
    let n = sample.len() as f64;
    let log_likelihood = -n * f - n * spread.ln();
    Ok(JohnsonSuFit { spec, log_likelihood })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    /// count / (n * width): integrates to 1 over the sample range.
    pub density: f64,
}

/// Equal-width density histogram over [min(sample), max(sample)].
pub fn histogram_density(sample: &[f64], bins: usize) -> Result<Vec<HistogramBin>, DistError> {
    if bins < 2 {
        return Err(DistError::InvalidBins { bins });
    }
    if sample.is_empty() {
        return Err(DistError::EmptySample);
    }
    let mut min = sample[0];
    let mut max = sample[0];
    for &x in sample {
        require_finite("sample", x)?;
        min = min.min(x);
        max = max.max(x);
    }
    if min == max {
        return Err(DistError::DegenerateSample { reason: "zero-width data range" });
    }
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in sample {
        let idx = (((x - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let norm = 1.0 / (sample.len() as f64 * width);
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| HistogramBin {
            left: min + i as f64 * width,
            right: min + (i + 1) as f64 * width,
            density: c as f64 * norm,
        })
        .collect())
}

/// Sum of squared differences between the sample's density histogram and the
/// spec's density at each bin center. Lower is better; only comparable
/// across specs for the same sample and bin count.
pub fn goodness_sse(spec: &DistSpec, sample: &[f64], bins: usize) -> Result<f64, DistError> {
    if let DistSpec::Empirical { .. } = spec {
        return Err(DistError::UnsupportedFamily { family: "empirical" });
    }
    let hist = histogram_density(sample, bins)?;
    let mut sse = 0.0;
    for bin in &hist {
        let center = 0.5 * (bin.left + bin.right);
        let diff = bin.density - spec.pdf(center)?;
        sse += diff * diff;
    }
    Ok(sse)
}

/// Freedman-Diaconis bin count, the CLI default. Falls back to ceil(sqrt(n))
/// when the IQR collapses; always at least 2.
pub fn freedman_diaconis_bins(sample: &[f64]) -> usize {
    if sample.is_empty() {
        return 2;
    }
    let sorted = numeric::sorted_copy(sample);
    let n = sorted.len() as f64;
    let iqr = numeric::quantile_sorted(&sorted, 0.75) - numeric::quantile_sorted(&sorted, 0.25);
    let range = sorted[sorted.len() - 1] - sorted[0];
    let width = 2.0 * iqr / n.cbrt();
    let bins = if width > 0.0 && range > 0.0 {
        (range / width).ceil() as usize
    } else {
        n.sqrt().ceil() as usize
    };
    bins.clamp(2, 512)
}

// --- one-line serialization -------------------------------------------------

/// Round-trip-exact float formatting (17 significant digits).
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(key: &str, raw: &str) -> Result<f64, DistError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| DistError::Parse { reason: format!("bad float for {key}: {raw:?}") })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DistError::Parse { reason: format!("non-finite value for {key}") })
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Uniform { a, s } => {
                write!(f, "uniform;a={};s={}", format_f64(*a), format_f64(*s))
            }
            DistSpec::JohnsonSu { a, b, loc, scale } => write!(
                f,
                "johnsonsu;a={};b={};loc={};scale={}",
                format_f64(*a),
                format_f64(*b),
                format_f64(*loc),
                format_f64(*scale)
            ),
            DistSpec::Empirical { sample } => {
                write!(f, "empirical;sample=")?;
                for (i, v) in sample.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", format_f64(*v))?;
                }
                Ok(())
            }
        }
    }
}

fn collect_params<'a>(
    parts: impl Iterator<Item = &'a str>,
    expected: &[&str],
) -> Result<Vec<f64>, DistError> {
    let mut found: Vec<Option<f64>> = vec![None; expected.len()];
    for part in parts {
        let (key, raw) = part
            .split_once('=')
            .ok_or_else(|| DistError::Parse { reason: format!("expected key=value, got {part:?}") })?;
        let idx = expected
            .iter()
            .position(|&e| e == key)
            .ok_or_else(|| DistError::Parse { reason: format!("unknown parameter {key:?}") })?;
        if found[idx].is_some() {
            return Err(DistError::Parse { reason: format!("duplicate parameter {key:?}") });
        }
        found[idx] = Some(parse_f64(key, raw)?);
    }
    found
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| DistError::Parse { reason: format!("missing parameter {:?}", expected[i]) }))
        .collect()
}

impl FromStr for DistSpec {
    type Err = DistError;

    fn from_str(line: &str) -> Result<Self, DistError> {
        let line = line.trim();
        let mut parts = line.split(';');
        let family = parts.next().unwrap_or_default();
        match family {
            "uniform" => {
                let p = collect_params(parts, &["a", "s"])?;
                DistSpec::uniform(p[0], p[1])
            }
            "johnsonsu" => {
                let p = collect_params(parts, &["a", "b", "loc", "scale"])?;
                DistSpec::johnson_su(p[0], p[1], p[2], p[3])
            }
            "empirical" => {
                let rest: Vec<&str> = parts.collect();
                if rest.len() != 1 {
                    return Err(DistError::Parse {
                        reason: "empirical takes exactly one sample=... field".into(),
                    });
                }
                let raw = rest[0]
                    .strip_prefix("sample=")
                    .ok_or_else(|| DistError::Parse { reason: format!("expected sample=..., got {:?}", rest[0]) })?;
                let values: Result<Vec<f64>, _> =
                    raw.split(',').map(|tok| parse_f64("sample", tok)).collect();
                DistSpec::empirical(values?)
            }
            other => Err(DistError::Parse { reason: format!("unknown family {other:?}") }),
        }
    }
}
