//! Timing traces: a complete K x P matrix of per-iteration, per-process
//! wall-clock seconds plus the metadata needed to interpret it (process
//! layout, synchronization method, restart-cycle shape).
//!
//! The on-disk form is a CSV (`rank,iteration,seconds`, any row order) with
//! a `key=value` sidecar carrying the metadata; both round-trip
//! bit-identically. Restart-cycle bookkeeping (which iterations are
//! pipeline fill) and per-iteration uniform fits live here too, since both
//! are pure functions of the matrix.

use crate::dist::DistSpec;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("cannot access {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("missing metadata sidecar {path}")]
    MissingMetadata { path: String },
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate entry for iteration {iteration}, rank {rank}")]
    DuplicateEntry { iteration: usize, rank: usize },
    #[error("incomplete matrix: {}", describe_missing(.missing))]
    IncompleteMatrix { missing: Vec<(usize, usize)> },
    #[error("line {line}: seconds must be positive, got {value}")]
    NonPositiveTime { line: usize, value: f64 },
    #[error("metadata line {line}: {reason}")]
    MalformedMeta { line: usize, reason: String },
    #[error("metadata is missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("{processes} processes cannot be grouped into nodes of {cores_per_node}")]
    IndivisibleLayout { processes: usize, cores_per_node: usize },
    #[error("iteration {iteration} out of range for a trace with {iterations} iterations")]
    IterationOutOfRange { iteration: usize, iterations: usize },
    #[error("rank {rank} out of range for a trace with {processes} ranks")]
    RankOutOfRange { rank: usize, processes: usize },
    #[error("restart must be at least 1")]
    ZeroRestart,
    #[error("trace must contain at least one iteration and one rank")]
    EmptyTrace,
    #[error("trace data length {len} is not a multiple of {processes} processes")]
    RaggedData { len: usize, processes: usize },
    #[error("non-finite time at iteration {iteration}, rank {rank}")]
    NonFiniteTime { iteration: usize, rank: usize },
}

fn describe_missing(missing: &[(usize, usize)]) -> String {
    let shown: Vec<String> =
        missing.iter().take(4).map(|(k, p)| format!("({k}, {p})")).collect();
    let suffix = if missing.len() > 4 { ", ..." } else { "" };
    format!("{} (iteration, rank) pairs absent: {}{}", missing.len(), shown.join(", "), suffix)
}

/// Synchronization style of the run the trace was captured from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Barrier,
    Pipelined,
}

impl Method {
    pub fn keyword(self) -> &'static str {
        match self {
            Method::Barrier => "barrier",
            Method::Pipelined => "pipelined",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Method> {
        match s {
            "barrier" => Some(Method::Barrier),
            "pipelined" => Some(Method::Pipelined),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Restart-cycle shape: `restart` working iterations per cycle, preceded by
/// `fill` pipeline-fill iterations (0 for barrier methods). Cycle length is
/// `restart + fill`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleLayout {
    pub restart: usize,
    pub fill: usize,
}

impl CycleLayout {
    pub fn new(restart: usize, fill: usize) -> Result<Self, TraceError> {
        if restart == 0 {
            return Err(TraceError::ZeroRestart);
        }
        Ok(CycleLayout { restart, fill })
    }

    pub fn cycle_length(&self) -> usize {
        self.restart + self.fill
    }

    /// Position of global iteration `k` within its cycle.
    pub fn position(&self, k: usize) -> usize {
        k % self.cycle_length()
    }

    /// Fill iterations occupy the first `fill` positions of every cycle.
    pub fn is_fill(&self, k: usize) -> bool {
        self.position(k) < self.fill
    }
}

/// Free-function spelling of [`CycleLayout::position`].
pub fn cycle_position(k: usize, layout: &CycleLayout) -> usize {
    layout.position(k)
}

/// Number of independent actors when all cores of a node move in lockstep.
pub fn effective_process_count(
    processes: usize,
    cores_per_node: usize,
) -> Result<usize, TraceError> {
    if cores_per_node == 0 || processes % cores_per_node != 0 {
        return Err(TraceError::IndivisibleLayout { processes, cores_per_node });
    }
    Ok(processes / cores_per_node)
}

/// Everything about a trace that is not the matrix itself.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceMeta {
    pub processes: usize,
    pub cores_per_node: usize,
    pub method: Method,
    pub cycle: CycleLayout,
    pub platform: Option<String>,
    pub solve_seconds: Option<f64>,
}

impl TraceMeta {
    /// Node count under the cores-per-node grouping.
    pub fn node_count(&self) -> Result<usize, TraceError> {
        effective_process_count(self.processes, self.cores_per_node)
    }
}

/// Complete K x P matrix of iteration times, iteration-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingTrace {
    meta: TraceMeta,
    times: Vec<f64>,
}

impl TimingTrace {
    /// Validates shape and finiteness. Positivity is a property of ingested
    /// data (checked during parsing, where a line number is available), not
    /// of the container: synthetic generators may legitimately produce
    /// non-positive draws, which callers surface as a count.
    pub fn new(meta: TraceMeta, times: Vec<f64>) -> Result<Self, TraceError> {
        if meta.processes == 0 || times.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        if times.len() % meta.processes != 0 {
            return Err(TraceError::RaggedData { len: times.len(), processes: meta.processes });
        }
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(TraceError::NonFiniteTime {
                    iteration: i / meta.processes,
                    rank: i % meta.processes,
                });
            }
        }
        Ok(TimingTrace { meta, times })
    }

    /// Shape-trusted constructor for internal callers that have already
    /// validated entries; permits an empty matrix (e.g. every iteration
    /// filtered away).
    fn from_validated(meta: TraceMeta, times: Vec<f64>) -> Self {
        TimingTrace { meta, times }
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    /// The same matrix under different metadata (for stamping run details on
    /// generated traces). The process count must be unchanged.
    pub fn with_meta(&self, meta: TraceMeta) -> Result<TimingTrace, TraceError> {
        if meta.processes != self.meta.processes {
            return Err(TraceError::RaggedData {
                len: self.times.len(),
                processes: meta.processes,
            });
        }
        Ok(TimingTrace { meta, times: self.times.clone() })
    }

    pub fn processes(&self) -> usize {
        self.meta.processes
    }

    pub fn iterations(&self) -> usize {
        self.times.len() / self.meta.processes
    }

    /// Row `k` of the matrix: the P per-process times of one iteration.
    pub fn iteration_slice(&self, k: usize) -> Result<&[f64], TraceError> {
        let (iterations, p) = (self.iterations(), self.meta.processes);
        if k >= iterations {
            return Err(TraceError::IterationOutOfRange { iteration: k, iterations });
        }
        Ok(&self.times[k * p..(k + 1) * p])
    }

    /// Column `p` of the matrix: one process's time at every iteration.
    pub fn rank_series(&self, p: usize) -> Result<Vec<f64>, TraceError> {
        if p >= self.meta.processes {
            return Err(TraceError::RankOutOfRange { rank: p, processes: self.meta.processes });
        }
        Ok(self.times.iter().skip(p).step_by(self.meta.processes).copied().collect())
    }

    /// All entries as `(iteration, rank, seconds)`, iteration-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let p = self.meta.processes;
        self.times.iter().enumerate().map(move |(i, &t)| (i / p, i % p, t))
    }
}

/// Removes the pipeline-fill iterations (cycle positions `0..fill`) from
/// every cycle and zeroes `fill` in the resulting metadata, which makes the
/// operation idempotent. Traces with `fill = 0` pass through unchanged.
pub fn filter_fill(trace: &TimingTrace) -> TimingTrace {
    let layout = trace.meta.cycle;
    if layout.fill == 0 {
        return trace.clone();
    }
    let p = trace.meta.processes;
    let mut retained = Vec::with_capacity(trace.times.len());
    for k in 0..trace.iterations() {
        if !layout.is_fill(k) {
            retained.extend_from_slice(&trace.times[k * p..(k + 1) * p]);
        }
    }
    let mut meta = trace.meta.clone();
    meta.cycle = CycleLayout { restart: layout.restart, fill: 0 };
    TimingTrace::from_validated(meta, retained)
}

/// Per-iteration uniform parameters: iteration k ranges over
/// `[a[k], a[k] + s[k]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationFit {
    pub a: Vec<f64>,
    pub s: Vec<f64>,
}

impl IterationFit {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// The fits as distribution specs, one per iteration.
    pub fn specs(&self) -> Vec<DistSpec> {
        self.a
            .iter()
            .zip(&self.s)
            .map(|(&a, &s)| DistSpec::uniform(a, s).expect("fit parameters are finite, s >= 0"))
            .collect()
    }

    /// CSV with header `iter,a,s`, one row per iteration in order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,a,s\n");
        for (k, (a, s)) in self.a.iter().zip(&self.s).enumerate() {
            writeln!(out, "{k},{a},{s}").expect("string write");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "iter,a,s")) => {}
            other => {
                return Err(TraceError::MalformedRow {
                    line: 1,
                    reason: format!(
                        "expected header `iter,a,s`, found `{}`",
                        other.map(|(_, l)| l).unwrap_or("")
                    ),
                })
            }
        }
        let (mut a, mut s) = (Vec::new(), Vec::new());
        for (idx, raw) in lines {
            let line = idx + 1;
            let row = raw.trim_end_matches('\r');
            if row.is_empty() {
                continue;
            }
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != 3 {
                return Err(TraceError::MalformedRow {
                    line,
                    reason: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let malformed = |what: &str| TraceError::MalformedRow {
                line,
                reason: format!("cannot parse {what} from `{row}`"),
            };
            let iter: usize = fields[0].parse().map_err(|_| malformed("iteration index"))?;
            if iter != a.len() {
                return Err(TraceError::MalformedRow {
                    line,
                    reason: format!("iteration index {iter} out of order (expected {})", a.len()),
                });
            }
            let ak: f64 = fields[1].parse().map_err(|_| malformed("a"))?;
            let sk: f64 = fields[2].parse().map_err(|_| malformed("s"))?;
            if !ak.is_finite() || !sk.is_finite() {
                return Err(malformed("a finite value"));
            }
            if sk < 0.0 {
                return Err(TraceError::MalformedRow {
                    line,
                    reason: format!("span must be non-negative, got {sk}"),
                });
            }
            a.push(ak);
            s.push(sk);
        }
        if a.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        Ok(IterationFit { a, s })
    }
}

/// Min/span of each iteration row: the exact uniform endpoints implied by
/// the observed extremes.
pub fn per_iteration_uniform_fits(trace: &TimingTrace) -> IterationFit {
    let mut a = Vec::with_capacity(trace.iterations());
    let mut s = Vec::with_capacity(trace.iterations());
    for k in 0..trace.iterations() {
        let row = trace.iteration_slice(k).expect("k < iterations");
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        a.push(lo);
        s.push(hi - lo);
    }
    IterationFit { a, s }
}

pub const TRACE_HEADER: &str = "rank,iteration,seconds";

/// Parses the trace CSV against the given metadata. The iteration count is
/// inferred from the data; the rank count must match `meta.processes`, and
/// every (iteration, rank) pair must appear exactly once with a finite,
/// positive time.
pub fn parse_trace(text: &str, meta: TraceMeta) -> Result<TimingTrace, TraceError> {
    if meta.processes == 0 {
        return Err(TraceError::EmptyTrace);
    }
    let p = meta.processes;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim_end_matches('\r') == TRACE_HEADER => {}
        other => {
            return Err(TraceError::MalformedRow {
                line: 1,
                reason: format!(
                    "expected header `{TRACE_HEADER}`, found `{}`",
                    other.map(|(_, l)| l).unwrap_or("")
                ),
            })
        }
    }
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    let mut max_iteration = 0_usize;
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(TraceError::MalformedRow {
                line,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let malformed = |what: String| TraceError::MalformedRow { line, reason: what };
        let rank: usize = fields[0]
            .parse()
            .map_err(|_| malformed(format!("cannot parse rank from `{}`", fields[0])))?;
        let iteration: usize = fields[1]
            .parse()
            .map_err(|_| malformed(format!("cannot parse iteration from `{}`", fields[1])))?;
        let seconds: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(format!("cannot parse seconds from `{}`", fields[2])))?;
        if rank >= p {
            return Err(malformed(format!("rank {rank} out of range for P={p}")));
        }
        if !seconds.is_finite() {
            return Err(malformed(format!("seconds must be finite, got {seconds}")));
        }
        if seconds <= 0.0 {
            return Err(TraceError::NonPositiveTime { line, value: seconds });
        }
        max_iteration = max_iteration.max(iteration);
        rows.push((iteration, rank, seconds));
    }
    if rows.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    let iterations = max_iteration + 1;
    let mut grid = vec![f64::NAN; iterations * p];
    for (k, rank, seconds) in rows {
        let slot = &mut grid[k * p + rank];
        if !slot.is_nan() {
            return Err(TraceError::DuplicateEntry { iteration: k, rank });
        }
        *slot = seconds;
    }
    let missing: Vec<(usize, usize)> = grid
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_nan())
        .map(|(i, _)| (i / p, i % p))
        .collect();
    if !missing.is_empty() {
        return Err(TraceError::IncompleteMatrix { missing });
    }
    Ok(TimingTrace::from_validated(meta, grid))
}

/// Serializes the matrix iteration-major. Floats use the shortest
/// representation that round-trips, so parse(write(t)) == t bitwise.
pub fn write_trace(trace: &TimingTrace) -> String {
    let mut out = String::with_capacity(16 * trace.times.len());
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (k, rank, seconds) in trace.entries() {
        writeln!(out, "{rank},{k},{seconds}").expect("string write");
    }
    out
}

const META_KEYS: [&str; 7] =
    ["P", "cores_per_node", "method", "restart", "fill", "platform", "solve_seconds"];

/// Parses the `key=value` metadata sidecar. Required keys: `P`,
/// `cores_per_node`, `method`, `restart`, `fill`. Optional: `platform`,
/// `solve_seconds`. Unknown or repeated keys are rejected.
pub fn parse_meta(text: &str) -> Result<TraceMeta, TraceError> {
    let mut seen: Vec<(&str, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let entry = raw.trim();
        if entry.is_empty() {
            continue;
        }
        let Some((key, value)) = entry.split_once('=') else {
            return Err(TraceError::MalformedMeta {
                line,
                reason: format!("expected key=value, found `{entry}`"),
            });
        };
        let Some(&canon) = META_KEYS.iter().find(|&&k| k == key) else {
            return Err(TraceError::MalformedMeta { line, reason: format!("unknown key `{key}`") });
        };
        if seen.iter().any(|(k, _, _)| *k == canon) {
            return Err(TraceError::MalformedMeta {
                line,
                reason: format!("duplicate key `{key}`"),
            });
        }
        seen.push((canon, value.to_string(), line));
    }
    let lookup = |key: &str| seen.iter().find(|(k, _, _)| *k == key).cloned();
    let required = |key: &'static str| lookup(key).ok_or(TraceError::MissingKey { key });
    let parse_count = |key: &'static str, min: usize| -> Result<usize, TraceError> {
        let (_, value, line) = required(key)?;
        let n: usize = value.parse().map_err(|_| TraceError::MalformedMeta {
            line,
            reason: format!("cannot parse `{key}` count from `{value}`"),
        })?;
        if n < min {
            return Err(TraceError::MalformedMeta {
                line,
                reason: format!("`{key}` must be at least {min}, got {n}"),
            });
        }
        Ok(n)
    };
    let processes = parse_count("P", 1)?;
    let cores_per_node = parse_count("cores_per_node", 1)?;
    let (_, method_value, method_line) = required("method")?;
    let method =
        Method::from_keyword(&method_value).ok_or_else(|| TraceError::MalformedMeta {
            line: method_line,
            reason: format!("method must be `barrier` or `pipelined`, got `{method_value}`"),
        })?;
    let restart = parse_count("restart", 1)?;
    let fill = parse_count("fill", 0)?;
    let platform = lookup("platform").map(|(_, v, _)| v);
    let solve_seconds = match lookup("solve_seconds") {
        None => None,
        Some((_, value, line)) => {
            let v: f64 = value.parse().map_err(|_| TraceError::MalformedMeta {
                line,
                reason: format!("cannot parse `solve_seconds` from `{value}`"),
            })?;
            if !v.is_finite() || v <= 0.0 {
                return Err(TraceError::MalformedMeta {
                    line,
                    reason: format!("`solve_seconds` must be positive and finite, got {v}"),
                });
            }
            Some(v)
        }
    };
    Ok(TraceMeta {
        processes,
        cores_per_node,
        method,
        cycle: CycleLayout::new(restart, fill)?,
        platform,
        solve_seconds,
    })
}

/// Serializes metadata in a fixed key order, omitting absent optionals.
pub fn write_meta(meta: &TraceMeta) -> String {
    let mut out = String::new();
    writeln!(out, "P={}", meta.processes).expect("string write");
    writeln!(out, "cores_per_node={}", meta.cores_per_node).expect("string write");
    writeln!(out, "method={}", meta.method).expect("string write");
    writeln!(out, "restart={}", meta.cycle.restart).expect("string write");
    writeln!(out, "fill={}", meta.cycle.fill).expect("string write");
    if let Some(platform) = &meta.platform {
        writeln!(out, "platform={platform}").expect("string write");
    }
    if let Some(solve_seconds) = meta.solve_seconds {
        writeln!(out, "solve_seconds={solve_seconds}").expect("string write");
    }
    out
}

/// Sidecar path convention: same basename with a `.meta` extension.
pub fn meta_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("meta")
}

fn io_error(path: &Path, e: &std::io::Error) -> TraceError {
    TraceError::Io { path: path.display().to_string(), reason: e.to_string() }
}

/// Reads trace CSV + metadata sidecar from disk.
pub fn load_trace(path: &Path) -> Result<TimingTrace, TraceError> {
    let sidecar = meta_path(path);
    let meta_text = std::fs::read_to_string(&sidecar).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            TraceError::MissingMetadata { path: sidecar.display().to_string() }
        } else {
            io_error(&sidecar, &e)
        }
    })?;
    let meta = parse_meta(&meta_text)?;
    let csv = std::fs::read_to_string(path).map_err(|e| io_error(path, &e))?;
    parse_trace(&csv, meta)
}

/// Writes trace CSV + metadata sidecar to disk.
pub fn save_trace(path: &Path, trace: &TimingTrace) -> Result<(), TraceError> {
    std::fs::write(path, write_trace(trace)).map_err(|e| io_error(path, &e))?;
    let sidecar = meta_path(path);
    std::fs::write(&sidecar, write_meta(trace.meta())).map_err(|e| io_error(&sidecar, &e))
}

/// Convenience for deserializing metadata text directly.
impl FromStr for TraceMeta {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_meta(s)
    }
}
