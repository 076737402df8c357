//! Execution oracles and Monte Carlo prediction.
//!
//! The oracles evaluate both execution semantics exactly on a concrete
//! trace: barrier-synchronized runs cost the sum over iterations of the
//! slowest process (`eval_barrier`), pipelined runs cost the busiest
//! process's total (`eval_pipeline`). Synthetic traces drawn from
//! distribution specs make the oracles usable as ground truth for the
//! closed-form models, and `mc_predict` implements the hyper-model
//! predictor: per-iteration uniform parameters are themselves drawn from
//! fitted distributions, and expected iteration costs are accumulated per
//! replicate.

use crate::dist::{DistError, DistSpec};
use crate::model::{self, ModelError};
use crate::numeric;
use crate::rng::RandomStream;
use crate::trace::{CycleLayout, Method, TimingTrace, TraceError, TraceMeta};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("hyper-model degenerate: {clamped} of {total} span draws were negative")]
    HyperModelDegenerate { clamped: usize, total: usize },
    #[error("replicates must be at least {min}, got {got}")]
    NotEnoughReplicates { got: usize, min: usize },
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("config is missing required key `{key}`")]
    ConfigMissingKey { key: &'static str },
    #[error("invalid simulation config: {reason}")]
    InvalidConfig { reason: String },
}

/// Where per-iteration time distributions come from.
#[derive(Clone, Debug, PartialEq)]
pub enum SimSource {
    /// One spec per iteration, in iteration order.
    PerIteration(Vec<DistSpec>),
    /// Hyper-model: each iteration's uniform minimum a_k and span s_k are
    /// drawn from these distributions (negative spans clamp to zero).
    Hyper { a_dist: DistSpec, s_dist: DistSpec },
}

/// A complete simulation request.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub iterations: usize,
    /// Process count; in hyper mode this is the effective count entering
    /// the order statistic.
    pub processes: usize,
    pub seed: u64,
    pub mode: Method,
    pub source: SimSource,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.iterations == 0 {
            return Err(SimError::InvalidConfig { reason: "iterations must be >= 1".into() });
        }
        if self.processes == 0 {
            return Err(SimError::InvalidConfig { reason: "processes must be >= 1".into() });
        }
        if let SimSource::PerIteration(specs) = &self.source {
            if specs.len() != self.iterations {
                return Err(SimError::InvalidConfig {
                    reason: format!(
                        "{} per-iteration specs for {} iterations",
                        specs.len(),
                        self.iterations
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Monte Carlo outcome: replicate totals and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Mean of `replicate_totals`.
    pub total_seconds: f64,
    pub replicate_totals: Vec<f64>,
    /// Negative span draws clamped to zero, across all replicates.
    pub clamped_spans: usize,
    pub seed: u64,
}

// -- exact oracles -----------------------------------------------------------

/// Barrier semantics: sum over iterations of the per-iteration maximum.
/// Per-iteration maxima are computed in parallel; the final reduction is a
/// pairwise sum over the iteration-ordered maxima, so the result does not
/// depend on worker count.
pub fn eval_barrier(trace: &TimingTrace) -> f64 {
    let iterations = trace.iterations();
    let maxima = parallel_by_index(iterations, |k| {
        let row = trace.iteration_slice(k).expect("k < iterations");
        row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    });
    numeric::pairwise_sum(&maxima)
}

/// Pipelined semantics: maximum over processes of the per-process sum.
/// Column sums are computed in parallel per process; each sum is a pairwise
/// reduction over that process's own iteration-ordered values.
pub fn eval_pipeline(trace: &TimingTrace) -> f64 {
    let totals = parallel_by_index(trace.processes(), |p| {
        let series = trace.rank_series(p).expect("p < processes");
        numeric::pairwise_sum(&series)
    });
    totals.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluates `f` at each index 0..len, filling a result vector in index
/// order; work is chunked across threads but the output is by construction
/// independent of the chunking.
fn parallel_by_index<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism().map(|w| w.get()).unwrap_or(1);
    let chunk = len.div_ceil(workers).max(1);
    let mut out: Vec<Option<T>> = (0..len).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, slot_chunk) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (offset, slot) in slot_chunk.iter_mut().enumerate() {
                    *slot = Some(f(w * chunk + offset));
                }
            });
        }
    });
    out.into_iter().map(|v| v.expect("every index filled")).collect()
}

// -- synthetic traces ----------------------------------------------------------

fn synthetic_meta(processes: usize) -> TraceMeta {
    TraceMeta {
        processes,
        cores_per_node: 1,
        method: Method::Barrier,
        cycle: CycleLayout { restart: 30, fill: 0 },
        platform: Some("synthetic".to_string()),
        solve_seconds: None,
    }
}

/// Draws a K x P trace with row k i.i.d. from `specs[k]`. Iteration k uses
/// the stream split at index k, so traces are reproducible and rows are
/// independent of one another.
pub fn synth_trace(specs: &[DistSpec], processes: usize, seed: u64) -> Result<TimingTrace, SimError> {
    if specs.is_empty() || processes == 0 {
        return Err(SimError::InvalidConfig {
            reason: "synthetic trace needs at least one iteration and one process".into(),
        });
    }
    let mut times = Vec::with_capacity(specs.len() * processes);
    for (k, spec) in specs.iter().enumerate() {
        let mut rng = RandomStream::split(seed, k as u64);
        for _ in 0..processes {
            times.push(spec.draw(&mut rng));
        }
    }
    Ok(TimingTrace::new(synthetic_meta(processes), times)?)
}

/// Hyper-model trace: per-iteration uniform parameters are drawn first
/// (stream index 0; negative spans clamp to zero and are counted), then the
/// matrix is drawn as in [`synth_trace`] (stream index k+1 for iteration k).
/// Returns the trace and the clamp count.
pub fn synth_trace_hyper(
    a_dist: &DistSpec,
    s_dist: &DistSpec,
    iterations: usize,
    processes: usize,
    seed: u64,
) -> Result<(TimingTrace, usize), SimError> {
    if iterations == 0 || processes == 0 {
        return Err(SimError::InvalidConfig {
            reason: "synthetic trace needs at least one iteration and one process".into(),
        });
    }
    let mut hyper_rng = RandomStream::split(seed, 0);
    let mut clamped = 0_usize;
    let mut specs = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let a = a_dist.draw(&mut hyper_rng);
        let mut s = s_dist.draw(&mut hyper_rng);
        if s < 0.0 {
            s = 0.0;
            clamped += 1;
        }
        specs.push(DistSpec::uniform(a, s)?);
    }
    let mut times = Vec::with_capacity(iterations * processes);
    for (k, spec) in specs.iter().enumerate() {
        let mut rng = RandomStream::split(seed, k as u64 + 1);
        for _ in 0..processes {
            times.push(spec.draw(&mut rng));
        }
    }
    Ok((TimingTrace::new(synthetic_meta(processes), times)?, clamped))
}

// -- Monte Carlo predictor -------------------------------------------------------

/// Expected-cost total for one replicate. In hyper mode, replicate `r`
/// draws its (a_k, s_k) sequence from the stream split at index r; the
/// iteration term is the closed-form uniform expected max (barrier) or the
/// uniform mean a_k + s_k/2 (pipelined). With per-iteration specs the total
/// is deterministic and replicates coincide.
fn replicate_total(config: &SimConfig, replicate: u64) -> Result<(f64, usize), SimError> {
    let n = config.processes;
    let mut clamped = 0_usize;
    let terms: Vec<f64> = match &config.source {
        SimSource::Hyper { a_dist, s_dist } => {
            let mut rng = RandomStream::split(config.seed, replicate);
            let mut terms = Vec::with_capacity(config.iterations);
            for _ in 0..config.iterations {
                let a = a_dist.draw(&mut rng);
                let mut s = s_dist.draw(&mut rng);
                if s < 0.0 {
                    s = 0.0;
                    clamped += 1;
                }
                let term = match config.mode {
                    Method::Barrier => a + s * n as f64 / (n as f64 + 1.0),
                    Method::Pipelined => a + s / 2.0,
                };
                terms.push(term);
            }
            terms
        }
        SimSource::PerIteration(specs) => {
            let mut terms = Vec::with_capacity(specs.len());
            for spec in specs {
                let term = match config.mode {
                    Method::Barrier => model::expected_max(spec, n)?,
                    Method::Pipelined => spec.mean(),
                };
                terms.push(term);
            }
            terms
        }
    };
    Ok((numeric::pairwise_sum(&terms), clamped))
}

fn run_replicates(config: &SimConfig, replicates: usize) -> Result<SimResult, SimError> {
    config.validate()?;
    let per_replicate: Vec<Result<(f64, usize), SimError>> =
        parallel_by_index(replicates, |r| replicate_total(config, r as u64));
    let mut totals = Vec::with_capacity(replicates);
    let mut clamped = 0_usize;
    for outcome in per_replicate {
        let (total, c) = outcome?;
        totals.push(total);
        clamped += c;
    }
    if let SimSource::Hyper { .. } = config.source {
        let total_spans = replicates * config.iterations;
        if 2 * clamped > total_spans {
            return Err(SimError::HyperModelDegenerate { clamped, total: total_spans });
        }
    }
    let total_seconds = numeric::pairwise_sum(&totals) / replicates as f64;
    Ok(SimResult { total_seconds, replicate_totals: totals, clamped_spans: clamped, seed: config.seed })
}

/// Monte Carlo runtime prediction: mean expected-cost total over
/// `replicates` independent hyper-model draws. Errors if more than half of
/// all span draws had to be clamped — the hyper-model is then a poor
/// description of non-negative spans.
pub fn mc_predict(config: &SimConfig, replicates: usize) -> Result<SimResult, SimError> {
    if replicates < 1 {
        return Err(SimError::NotEnoughReplicates { got: replicates, min: 1 });
    }
    run_replicates(config, replicates)
}

/// Like [`mc_predict`] but demands enough replicates for spread estimates.
pub fn replicate_stats(config: &SimConfig, replicates: usize) -> Result<SimResult, SimError> {
    if replicates < 2 {
        return Err(SimError::NotEnoughReplicates { got: replicates, min: 2 });
    }
    run_replicates(config, replicates)
}

// -- config file -----------------------------------------------------------------

/// Parses a simulation config: `key=value` lines mirroring the trace
/// sidecar (`K`, `P`, `method`, optional `seed`, `cores_per_node`,
/// `restart`, `fill`, `platform`) plus the source — either a single
/// `dist=` spec replicated for every iteration, or `a_dist=` and `s_dist=`
/// hyper-model specs. Returns the simulation config and the metadata any
/// emitted trace should carry.
pub fn parse_sim_config(text: &str) -> Result<(SimConfig, TraceMeta), SimError> {
    const KEYS: [&str; 11] = [
        "K", "P", "seed", "method", "dist", "a_dist", "s_dist", "cores_per_node", "restart",
        "fill", "platform",
    ];
    let mut seen: Vec<(&str, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let entry = raw.trim();
        if entry.is_empty() {
            continue;
        }
        let Some((key, value)) = entry.split_once('=') else {
            return Err(SimError::Config {
                line,
                reason: format!("expected key=value, found `{entry}`"),
            });
        };
        let Some(&canon) = KEYS.iter().find(|&&k| k == key) else {
            return Err(SimError::Config { line, reason: format!("unknown key `{key}`") });
        };
        if seen.iter().any(|(k, _, _)| *k == canon) {
            return Err(SimError::Config { line, reason: format!("duplicate key `{key}`") });
        }
        seen.push((canon, value.to_string(), line));
    }
    let lookup = |key: &str| seen.iter().find(|(k, _, _)| *k == key).cloned();
    let required = |key: &'static str| lookup(key).ok_or(SimError::ConfigMissingKey { key });
    fn count_of(value: &str, key: &str, line: usize) -> Result<usize, SimError> {
        value.parse().map_err(|_| SimError::Config {
            line,
            reason: format!("cannot parse `{key}` count from `{value}`"),
        })
    }
    let (_, k_value, k_line) = required("K")?;
    let iterations = count_of(&k_value, "K", k_line)?;
    let (_, p_value, p_line) = required("P")?;
    let processes = count_of(&p_value, "P", p_line)?;
    let seed = match lookup("seed") {
        None => 0,
        Some((_, value, line)) => value.parse().map_err(|_| SimError::Config {
            line,
            reason: format!("cannot parse `seed` from `{value}`"),
        })?,
    };
    let (_, method_value, method_line) = required("method")?;
    let method = Method::from_keyword(&method_value).ok_or_else(|| SimError::Config {
        line: method_line,
        reason: format!("method must be `barrier` or `pipelined`, got `{method_value}`"),
    })?;
    let parse_spec = |key: &'static str| -> Result<Option<DistSpec>, SimError> {
        match lookup(key) {
            None => Ok(None),
            Some((_, value, line)) => value
                .parse::<DistSpec>()
                .map(Some)
                .map_err(|e| SimError::Config { line, reason: format!("bad `{key}`: {e}") }),
        }
    };
    let dist = parse_spec("dist")?;
    let a_dist = parse_spec("a_dist")?;
    let s_dist = parse_spec("s_dist")?;
    let source = match (dist, a_dist, s_dist) {
        (Some(d), None, None) => SimSource::PerIteration(vec![d; iterations]),
        (None, Some(a), Some(s)) => SimSource::Hyper { a_dist: a, s_dist: s },
        (None, None, None) => {
            return Err(SimError::ConfigMissingKey { key: "dist (or a_dist/s_dist)" })
        }
        _ => {
            return Err(SimError::InvalidConfig {
                reason: "provide either `dist` or both `a_dist` and `s_dist`, not a mixture"
                    .into(),
            })
        }
    };
    let cores_per_node = match lookup("cores_per_node") {
        None => 1,
        Some((_, value, line)) => {
            let n = count_of(&value, "cores_per_node", line)?;
            if n == 0 {
                return Err(SimError::Config {
                    line,
                    reason: "`cores_per_node` must be at least 1".into(),
                });
            }
            n
        }
    };
    let restart = match lookup("restart") {
        None => 30,
        Some((_, value, line)) => count_of(&value, "restart", line)?,
    };
    let fill = match lookup("fill") {
        None => 0,
        Some((_, value, line)) => count_of(&value, "fill", line)?,
    };
    let cycle = CycleLayout::new(restart, fill)?;
    let platform = lookup("platform").map(|(_, v, _)| v);
    let config = SimConfig { iterations, processes, seed, mode: method, source };
    config.validate()?;
    let meta = TraceMeta {
        processes,
        cores_per_node,
        method,
        cycle,
        platform,
        solve_seconds: None,
    };
    Ok((config, meta))
}
