//! Subcommand implementations. Each returns the full stdout text so the
//! binary has exactly one success print site, keeping output byte-stable.

use clap::{Args, Parser, Subcommand, ValueEnum};
use pipeperf::dist::{self, DistError, DistSpec};
use pipeperf::model::{self, ModelError};
use pipeperf::simulate::{self, SimConfig, SimError, SimSource};
use pipeperf::stats::{self, StatsError};
use pipeperf::trace::{self, IterationFit, Method, TimingTrace, TraceError};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

// -- error surface -------------------------------------------------------------

#[derive(Debug)]
pub enum CliError {
    Dist(DistError),
    Model(ModelError),
    Stats(StatsError),
    Trace(TraceError),
    Sim(SimError),
    /// CLI-level validation with an explicit slug and exit code.
    Invalid { slug: &'static str, message: String, code: u8 },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Dist(e) => e.fmt(f),
            CliError::Model(e) => e.fmt(f),
            CliError::Stats(e) => e.fmt(f),
            CliError::Trace(e) => e.fmt(f),
            CliError::Sim(e) => e.fmt(f),
            CliError::Invalid { message, .. } => f.write_str(message),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        CliError::Dist(e)
    }
}
impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e)
    }
}
impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Stats(e)
    }
}
impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        CliError::Trace(e)
    }
}
impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e)
    }
}

fn dist_slug(e: &DistError) -> &'static str {
    match e {
        DistError::InvalidParameter { .. } => "invalid_parameter",
        DistError::PointMassDensity { .. } => "point_mass_density",
        DistError::UnsupportedFamily { .. } => "unsupported_family",
        DistError::EmptySample => "empty_sample",
        DistError::DegenerateSample { .. } => "degenerate_sample",
        DistError::FitDiverged => "fit_diverged",
        DistError::InvalidBins { .. } => "invalid_bins",
        DistError::Parse { .. } => "spec_parse",
    }
}

fn trace_slug(e: &TraceError) -> &'static str {
    match e {
        TraceError::Io { .. } => "io",
        TraceError::MissingMetadata { .. } => "missing_metadata",
        TraceError::MalformedRow { .. } => "malformed_row",
        TraceError::DuplicateEntry { .. } => "duplicate_entry",
        TraceError::IncompleteMatrix { .. } => "incomplete_matrix",
        TraceError::NonPositiveTime { .. } => "non_positive_time",
        TraceError::MalformedMeta { .. } => "malformed_metadata",
        TraceError::MissingKey { .. } => "missing_metadata_key",
        TraceError::IndivisibleLayout { .. } => "indivisible_layout",
        TraceError::IterationOutOfRange { .. } => "iteration_out_of_range",
        TraceError::RankOutOfRange { .. } => "rank_out_of_range",
        TraceError::ZeroRestart => "zero_restart",
        TraceError::EmptyTrace => "empty_trace",
        TraceError::RaggedData { .. } => "ragged_data",
        TraceError::NonFiniteTime { .. } => "non_finite_time",
    }
}

fn model_slug(e: &ModelError) -> &'static str {
    match e {
        ModelError::Quadrature { .. } => "quadrature",
        ModelError::Dist(d) => dist_slug(d),
        ModelError::ZeroCount { .. } => "zero_count",
    }
}

fn stats_slug(e: &StatsError) -> &'static str {
    match e {
        StatsError::EmptySample => "empty_sample",
        StatsError::NonFiniteSample => "non_finite_sample",
        StatsError::UnsupportedAlpha { .. } => "unsupported_alpha",
        StatsError::NodeOutOfRange { .. } => "node_out_of_range",
        StatsError::NotEnoughRanks { .. } => "not_enough_ranks",
        StatsError::Trace(t) => trace_slug(t),
    }
}

fn sim_slug(e: &SimError) -> &'static str {
    match e {
        SimError::Dist(d) => dist_slug(d),
        SimError::Model(m) => model_slug(m),
        SimError::Trace(t) => trace_slug(t),
        SimError::HyperModelDegenerate { .. } => "hyper_model_degenerate",
        SimError::NotEnoughReplicates { .. } => "not_enough_replicates",
        SimError::Config { .. } => "config",
        SimError::ConfigMissingKey { .. } => "config_missing_key",
        SimError::InvalidConfig { .. } => "invalid_config",
    }
}

fn dist_exit(e: &DistError) -> u8 {
    match e {
        DistError::UnsupportedFamily { .. } | DistError::InvalidBins { .. } => 2,
        DistError::FitDiverged => 4,
        _ => 3,
    }
}

fn trace_exit(e: &TraceError) -> u8 {
    match e {
        TraceError::Io { .. }
        | TraceError::MissingMetadata { .. }
        | TraceError::IndivisibleLayout { .. }
        | TraceError::IterationOutOfRange { .. }
        | TraceError::RankOutOfRange { .. }
        | TraceError::ZeroRestart => 2,
        TraceError::NonFiniteTime { .. } => 4,
        _ => 3,
    }
}

fn model_exit(e: &ModelError) -> u8 {
    match e {
        ModelError::Quadrature { .. } => 4,
        ModelError::Dist(d) => dist_exit(d),
        ModelError::ZeroCount { .. } => 2,
    }
}

fn stats_exit(e: &StatsError) -> u8 {
    match e {
        StatsError::EmptySample | StatsError::NonFiniteSample => 3,
        StatsError::UnsupportedAlpha { .. }
        | StatsError::NodeOutOfRange { .. }
        | StatsError::NotEnoughRanks { .. } => 2,
        StatsError::Trace(t) => trace_exit(t),
    }
}

fn sim_exit(e: &SimError) -> u8 {
    match e {
        SimError::Dist(d) => dist_exit(d),
        SimError::Model(m) => model_exit(m),
        SimError::Trace(t) => trace_exit(t),
        SimError::HyperModelDegenerate { .. } => 4,
        SimError::NotEnoughReplicates { .. } => 2,
        SimError::Config { .. } | SimError::ConfigMissingKey { .. } => 3,
        SimError::InvalidConfig { .. } => 2,
    }
}

impl CliError {
    pub fn slug(&self) -> &'static str {
        match self {
            CliError::Dist(e) => dist_slug(e),
            CliError::Model(e) => model_slug(e),
            CliError::Stats(e) => stats_slug(e),
            CliError::Trace(e) => trace_slug(e),
            CliError::Sim(e) => sim_slug(e),
            CliError::Invalid { slug, .. } => slug,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Dist(e) => dist_exit(e),
            CliError::Model(e) => model_exit(e),
            CliError::Stats(e) => stats_exit(e),
            CliError::Trace(e) => trace_exit(e),
            CliError::Sim(e) => sim_exit(e),
            CliError::Invalid { code, .. } => *code,
        }
    }
}

fn invalid(slug: &'static str, message: impl Into<String>) -> CliError {
    CliError::Invalid { slug, message: message.into(), code: 2 }
}

fn file_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Trace(TraceError::Io { path: path.display().to_string(), reason: e.to_string() })
}

// -- argument surface -----------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "pipeperf",
    version,
    about = "Runtime models, statistics, and simulation for iterative-solver timing traces"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit time distributions to a trace (per-iteration uniforms or one bulk fit)
    Fit(FitArgs),
    /// Pairwise Kolmogorov-Smirnov identity tests of every rank against a reference
    Ks(KsArgs),
    /// Predict total runtime from a trace, a per-iteration fits CSV, or a spec file
    Predict(PredictArgs),
    /// Draw a synthetic trace from a config and evaluate both execution semantics
    Simulate(SimulateArgs),
    /// Full rollup: fill check, fits, KS, models, bounds, and hyper predictions
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Johnsonsu,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Barrier,
    Pipelined,
}

impl Mode {
    fn method(self) -> Method {
        match self {
            Mode::Barrier => Method::Barrier,
            Mode::Pipelined => Method::Pipelined,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    Stationary,
    Nonstationary,
    Hyper,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("target").required(true).multiple(false)))]
struct FitArgs {
    /// Trace CSV path (a `.meta` sidecar must exist alongside it)
    trace: PathBuf,
    /// Per-iteration uniform fits plus hyper-parameters of the a/s series
    #[arg(long, group = "target")]
    per_iteration: bool,
    /// One distribution over all pooled iteration times
    #[arg(long, group = "target")]
    bulk: bool,
    /// Distribution family for --bulk
    #[arg(long, value_enum, default_value_t = Family::Johnsonsu)]
    family: Family,
    /// Histogram bin count for the goodness SSE (default: Freedman-Diaconis)
    #[arg(long)]
    bins: Option<usize>,
    /// Seed for fit restarts
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct KsArgs {
    /// Trace CSV path (a `.meta` sidecar must exist alongside it)
    trace: PathBuf,
    /// Rank every other rank is tested against
    #[arg(long, default_value_t = 0)]
    reference_rank: usize,
    /// Significance level (tabulated: 0.10, 0.05, 0.025, 0.01, 0.005, 0.001)
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Override the critical coefficient c(alpha)
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct PredictArgs {
    /// Trace CSV, `iter,a,s` fits CSV, or key=value spec file
    input: PathBuf,
    /// Execution semantics to price
    #[arg(long, value_enum)]
    mode: Mode,
    /// Runtime model
    #[arg(long, value_enum)]
    model: ModelChoice,
    /// Effective process count entering the order statistic
    /// (default for traces: P / cores_per_node)
    #[arg(long)]
    pe: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo replicates for --model hyper
    #[arg(long, default_value_t = 32)]
    replicates: usize,
    /// Also emit Cramer/Bertsimas bound totals (trace input only)
    #[arg(long)]
    bounds: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// key=value simulation config
    #[arg(long)]
    config: PathBuf,
    /// Write the generated trace (and its sidecar) here
    #[arg(long)]
    emit_trace: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace CSV path (a `.meta` sidecar must exist alongside it)
    trace: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    reference_rank: usize,
    /// Override the critical coefficient c(alpha)
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    replicates: usize,
    /// Effective process count (default: P / cores_per_node)
    #[arg(long)]
    pe: Option<usize>,
    /// Histogram bin count (default: Freedman-Diaconis)
    #[arg(long)]
    bins: Option<usize>,
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Ks(args) => cmd_ks(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Report(args) => cmd_report(args),
    }
}

// -- shared plumbing ---------------------------------------------------------------

/// Ordered key=value output buffer.
struct Out(String);

impl Out {
    fn new() -> Self {
        Out(String::new())
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.0, "{key}={value}").expect("string write");
    }
}

fn artifact_path(input: &Path, suffix: &str) -> PathBuf {
    input.with_extension(suffix)
}

fn write_artifact(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| file_error(path, e))
}

fn pooled_sample(t: &TimingTrace) -> Vec<f64> {
    t.entries().map(|(_, _, v)| v).collect()
}

/// Effective process count: the --pe override, else P / cores_per_node.
fn resolve_n_eff(t: &TimingTrace, pe: Option<usize>) -> Result<usize, CliError> {
    match pe {
        Some(n) if n >= 1 => Ok(n),
        Some(_) => Err(invalid("invalid_pe", "--pe must be at least 1")),
        None => Ok(t.meta().node_count()?),
    }
}

// -- fit ----------------------------------------------------------------------------

fn cmd_fit(args: FitArgs) -> Result<String, CliError> {
    let raw = trace::load_trace(&args.trace)?;
    let t = trace::filter_fill(&raw);
    let mut out = Out::new();
    out.kv("trace", args.trace.display());
    out.kv("method", t.meta().method);
    out.kv("processes", t.processes());
    out.kv("iterations", t.iterations());
    if args.per_iteration {
        let fits = trace::per_iteration_uniform_fits(&t);
        let a_fit = dist::fit_johnson_su(&fits.a, args.seed)?;
        let s_fit = dist::fit_johnson_su(&fits.s, args.seed)?;
        let path = artifact_path(&args.trace, "iterfits.csv");
        write_artifact(&path, &fits.to_csv())?;
        out.kv("iterfits_csv", path.display());
        out.kv("a_fit", &a_fit.spec);
        out.kv("a_log_likelihood", a_fit.log_likelihood);
        out.kv("s_fit", &s_fit.spec);
        out.kv("s_log_likelihood", s_fit.log_likelihood);
    } else {
        let sample = pooled_sample(&t);
        let bins = args.bins.unwrap_or_else(|| dist::freedman_diaconis_bins(&sample));
        let (family, spec, log_likelihood) = match args.family {
            Family::Johnsonsu => {
                let fit = dist::fit_johnson_su(&sample, args.seed)?;
                ("johnsonsu", fit.spec, Some(fit.log_likelihood))
            }
            Family::Uniform => ("uniform", dist::fit_uniform(&sample)?, None),
        };
        let sse = dist::goodness_sse(&spec, &sample, bins)?;
        let hist = dist::histogram_density(&sample, bins)?;
        let mut csv = String::from("bin_left,bin_right,density\n");
        for bin in &hist {
            writeln!(csv, "{},{},{}", bin.left, bin.right, bin.density).expect("string write");
        }
        let path = artifact_path(&args.trace, "hist.csv");
        write_artifact(&path, &csv)?;
        out.kv("family", family);
        out.kv("fit", &spec);
        if let Some(ll) = log_likelihood {
            out.kv("log_likelihood", ll);
        }
        out.kv("sample_size", sample.len());
        out.kv("bins", bins);
        out.kv("sse", sse);
        out.kv("hist_csv", path.display());
    }
    Ok(out.0)
}

// -- ks ------------------------------------------------------------------------------

fn cmd_ks(args: KsArgs) -> Result<String, CliError> {
    let raw = trace::load_trace(&args.trace)?;
    let t = trace::filter_fill(&raw);
    let c = match args.c {
        Some(c) => c,
        None => stats::ks_critical_coefficient(args.alpha)?,
    };
    let rows = stats::pairwise_ks_with_c(&t, args.reference_rank, args.alpha, c)?;
    let mut csv = String::from("rank,d,threshold,reject\n");
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            row.rank, row.result.d, row.result.threshold, row.result.reject
        )
        .expect("string write");
    }
    let path = artifact_path(&args.trace, "ks.csv");
    write_artifact(&path, &csv)?;
    let rejections = rows.iter().filter(|r| r.result.reject).count();
    let mut out = Out::new();
    out.kv("trace", args.trace.display());
    out.kv("reference_rank", args.reference_rank);
    out.kv("alpha", args.alpha);
    out.kv("c", c);
    out.kv("sample_size", t.iterations());
    out.kv("threshold", rows[0].result.threshold);
    out.kv("comparisons", rows.len());
    out.kv("rejections", rejections);
    out.kv("rejection_rate", rejections as f64 / rows.len() as f64);
    out.kv("ks_csv", path.display());
    Ok(out.0)
}

// -- predict -------------------------------------------------------------------------

/// A parsed `predict` input: where the per-iteration time model comes from.
enum PredictInput {
    Trace(TimingTrace),
    Fits(IterationFit),
    Spec { iterations: usize, dist: Option<DistSpec>, hyper: Option<(DistSpec, DistSpec)>, reference_seconds: Option<f64> },
}

/// key=value spec file for `predict`: `K=`, then `dist=` or
/// `a_dist=`/`s_dist=`, optional `reference_seconds=`.
fn parse_predict_spec(text: &str) -> Result<PredictInput, CliError> {
    const KEYS: [&str; 5] = ["K", "dist", "a_dist", "s_dist", "reference_seconds"];
    let bad = |line: usize, reason: String| {
        CliError::Invalid { slug: "spec_file", message: format!("line {line}: {reason}"), code: 3 }
    };
    let mut seen: Vec<(&str, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let entry = raw.trim();
        if entry.is_empty() {
            continue;
        }
        let Some((key, value)) = entry.split_once('=') else {
            return Err(bad(line, format!("expected key=value, found `{entry}`")));
        };
        let Some(&canon) = KEYS.iter().find(|&&k| k == key) else {
            return Err(bad(line, format!("unknown key `{key}`")));
        };
        if seen.iter().any(|(k, _, _)| *k == canon) {
            return Err(bad(line, format!("duplicate key `{key}`")));
        }
        seen.push((canon, value.to_string(), line));
    }
    let lookup = |key: &str| seen.iter().find(|(k, _, _)| *k == key).cloned();
    let (_, k_value, k_line) = lookup("K").ok_or_else(|| {
        CliError::Invalid { slug: "spec_file", message: "missing required key `K`".into(), code: 3 }
    })?;
    let iterations: usize =
        k_value.parse().map_err(|_| bad(k_line, format!("cannot parse `K` from `{k_value}`")))?;
    if iterations == 0 {
        return Err(bad(k_line, "`K` must be at least 1".into()));
    }
    let parse_spec = |key: &str| -> Result<Option<DistSpec>, CliError> {
        match lookup(key) {
            None => Ok(None),
            Some((_, value, line)) => value
                .parse::<DistSpec>()
                .map(Some)
                .map_err(|e| bad(line, format!("bad `{key}`: {e}"))),
        }
    };
    let dist = parse_spec("dist")?;
    let a_dist = parse_spec("a_dist")?;
    let s_dist = parse_spec("s_dist")?;
    let hyper = match (a_dist, s_dist) {
        (Some(a), Some(s)) => Some((a, s)),
        (None, None) => None,
        _ => {
            return Err(CliError::Invalid {
                slug: "spec_file",
                message: "`a_dist` and `s_dist` must be given together".into(),
                code: 3,
            })
        }
    };
    if dist.is_some() && hyper.is_some() {
        return Err(CliError::Invalid {
            slug: "spec_file",
            message: "provide either `dist` or the `a_dist`/`s_dist` pair, not both".into(),
            code: 3,
        });
    }
    if dist.is_none() && hyper.is_none() {
        return Err(CliError::Invalid {
            slug: "spec_file",
            message: "missing `dist` or `a_dist`/`s_dist`".into(),
            code: 3,
        });
    }
    let reference_seconds = match lookup("reference_seconds") {
        None => None,
        Some((_, value, line)) => {
            let v: f64 = value
                .parse()
                .map_err(|_| bad(line, format!("cannot parse `reference_seconds` from `{value}`")))?;
            if !v.is_finite() || v <= 0.0 {
                return Err(bad(line, format!("`reference_seconds` must be positive, got {v}")));
            }
            Some(v)
        }
    };
    Ok(PredictInput::Spec { iterations, dist, hyper, reference_seconds })
}

fn load_predict_input(path: &Path) -> Result<PredictInput, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| file_error(path, e))?;
    let first = text.lines().next().unwrap_or("").trim_end_matches('\r');
    if first == trace::TRACE_HEADER {
        let raw = trace::load_trace(path)?;
        Ok(PredictInput::Trace(trace::filter_fill(&raw)))
    } else if first == "iter,a,s" {
        Ok(PredictInput::Fits(IterationFit::from_csv(&text)?))
    } else {
        parse_predict_spec(&text)
    }
}

/// Fits Johnson S_U hyper-distributions to the a/s series of per-iteration
/// uniform fits — the parametric hyper-model.
fn hyper_from_series(fits: &IterationFit, seed: u64) -> Result<(DistSpec, DistSpec), CliError> {
    let a = dist::fit_johnson_su(&fits.a, seed)?;
    let s = dist::fit_johnson_su(&fits.s, seed)?;
    Ok((a.spec, s.spec))
}

fn cmd_predict(args: PredictArgs) -> Result<String, CliError> {
    let input = load_predict_input(&args.input)?;
    let mode = args.mode.method();
    let mut out = Out::new();
    out.kv("input", args.input.display());
    let kind = match &input {
        PredictInput::Trace(_) => "trace",
        PredictInput::Fits(_) => "fits",
        PredictInput::Spec { .. } => "spec",
    };
    out.kv("input_kind", kind);
    out.kv(
        "model",
        match args.model {
            ModelChoice::Stationary => "stationary",
            ModelChoice::Nonstationary => "nonstationary",
            ModelChoice::Hyper => "hyper",
        },
    );
    out.kv("mode", mode);

    // Effective process count. Pipelined models never consult it, so a
    // placeholder of 1 is fine there.
    let n_eff = match (&input, args.pe) {
        (PredictInput::Trace(t), pe) => resolve_n_eff(t, pe)?,
        (_, Some(n)) if n >= 1 => n,
        (_, Some(_)) => return Err(invalid("invalid_pe", "--pe must be at least 1")),
        (_, None) if mode == Method::Pipelined => 1,
        (_, None) => {
            return Err(invalid(
                "missing_pe",
                "--pe is required for barrier predictions without trace metadata",
            ))
        }
    };

    let iterations = match &input {
        PredictInput::Trace(t) => t.iterations(),
        PredictInput::Fits(f) => f.len(),
        PredictInput::Spec { iterations, .. } => *iterations,
    };
    out.kv("iterations", iterations);
    out.kv("n_eff", n_eff);

    let mut clamped: Option<usize> = None;
    let mut replicate_std: Option<f64> = None;
    let estimate = match args.model {
        ModelChoice::Stationary => match &input {
            PredictInput::Trace(t) => {
                let sample = pooled_sample(t);
                let fit = dist::fit_johnson_su(&sample, args.seed)?;
                out.kv("fit", &fit.spec);
                let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                match mode {
                    Method::Barrier => {
                        // Integrate over the observed data range rather than
                        // the fitted tails.
                        let per = model::expected_max_quadrature_within(&fit.spec, n_eff, lo, hi)?;
                        iterations as f64 * per
                    }
                    Method::Pipelined => iterations as f64 * fit.spec.mean(),
                }
            }
            PredictInput::Fits(f) => {
                let stationary = f.a.windows(2).all(|w| w[0] == w[1])
                    && f.s.windows(2).all(|w| w[0] == w[1]);
                if !stationary {
                    return Err(invalid(
                        "not_stationary",
                        "per-iteration fits differ across iterations; use --model nonstationary",
                    ));
                }
                let spec = DistSpec::uniform(f.a[0], f.s[0])?;
                out.kv("fit", &spec);
                stationary_total(&spec, iterations, n_eff, mode)?
            }
            PredictInput::Spec { dist, .. } => {
                let spec = dist.as_ref().ok_or_else(|| {
                    invalid("model_mismatch", "--model stationary needs a `dist=` spec file")
                })?;
                out.kv("fit", spec);
                stationary_total(spec, iterations, n_eff, mode)?
            }
        },
        ModelChoice::Nonstationary => {
            let specs: Vec<DistSpec> = match &input {
                PredictInput::Trace(t) => trace::per_iteration_uniform_fits(t).specs(),
                PredictInput::Fits(f) => f.specs(),
                PredictInput::Spec { dist, .. } => {
                    let spec = dist.as_ref().ok_or_else(|| {
                        invalid("model_mismatch", "--model nonstationary needs a `dist=` spec file")
                    })?;
                    vec![spec.clone(); iterations]
                }
            };
            match mode {
                Method::Barrier => model::nonstationary_barrier_total(&specs, n_eff)?.seconds,
                Method::Pipelined => model::nonstationary_pipelined_total(&specs)?.seconds,
            }
        }
        ModelChoice::Hyper => {
            let (a_dist, s_dist) = match &input {
                PredictInput::Trace(t) => {
                    hyper_from_series(&trace::per_iteration_uniform_fits(t), args.seed)?
                }
                PredictInput::Fits(f) => hyper_from_series(f, args.seed)?,
                PredictInput::Spec { hyper, .. } => hyper.clone().ok_or_else(|| {
                    invalid("model_mismatch", "--model hyper needs `a_dist=`/`s_dist=` specs")
                })?,
            };
            out.kv("a_dist", &a_dist);
            out.kv("s_dist", &s_dist);
            out.kv("seed", args.seed);
            out.kv("replicates", args.replicates);
            let config = SimConfig {
                iterations,
                processes: n_eff,
                seed: args.seed,
                mode,
                source: SimSource::Hyper { a_dist, s_dist },
            };
            let result = simulate::mc_predict(&config, args.replicates)?;
            clamped = Some(result.clamped_spans);
            if result.replicate_totals.len() >= 2 {
                let mean = result.total_seconds;
                let var = result
                    .replicate_totals
                    .iter()
                    .map(|t| (t - mean) * (t - mean))
                    .sum::<f64>()
                    / result.replicate_totals.len() as f64;
                replicate_std = Some(var.sqrt());
            }
            result.total_seconds
        }
    };
    out.kv("estimate_seconds", estimate);
    if let Some(c) = clamped {
        out.kv("clamped_spans", c);
    }
    if let Some(sd) = replicate_std {
        out.kv("replicate_std", sd);
    }

    if args.bounds {
        let PredictInput::Trace(t) = &input else {
            return Err(invalid("bounds_requires_trace", "--bounds needs a trace input"));
        };
        let (mu, sigma) = stats::sample_moments(&pooled_sample(t))?;
        out.kv("sample_mean", mu);
        out.kv("sample_std", sigma);
        out.kv("cramer_total_seconds", iterations as f64 * model::cramer_bound(mu, sigma, n_eff));
        out.kv(
            "bertsimas_total_seconds",
            iterations as f64 * model::bertsimas_bound(mu, sigma, n_eff),
        );
    }

    match &input {
        PredictInput::Trace(t) => {
            if let Some(measured) = t.meta().solve_seconds {
                out.kv("solve_seconds", measured);
                out.kv("relative_error", (estimate - measured) / measured);
            }
        }
        PredictInput::Spec { reference_seconds: Some(reference), .. } => {
            out.kv("reference_seconds", reference);
            out.kv("relative_deviation", (estimate - reference) / reference);
        }
        _ => {}
    }
    Ok(out.0)
}

fn stationary_total(
    spec: &DistSpec,
    iterations: usize,
    n_eff: usize,
    mode: Method,
) -> Result<f64, CliError> {
    let estimate = match mode {
        Method::Barrier => model::stationary_barrier_total(spec, iterations, n_eff)?,
        Method::Pipelined => model::stationary_pipelined_total(spec, iterations)?,
    };
    Ok(estimate.seconds)
}

// -- simulate -----------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| file_error(&args.config, e))?;
    let (config, meta) = simulate::parse_sim_config(&text)?;
    let (generated, clamped) = match &config.source {
        SimSource::PerIteration(specs) => {
            (simulate::synth_trace(specs, config.processes, config.seed)?, 0)
        }
        SimSource::Hyper { a_dist, s_dist } => simulate::synth_trace_hyper(
            a_dist,
            s_dist,
            config.iterations,
            config.processes,
            config.seed,
        )?,
    };
    let t = generated.with_meta(meta)?;
    let barrier = simulate::eval_barrier(&t);
    let pipeline = simulate::eval_pipeline(&t);
    let nonpositive = t.entries().filter(|&(_, _, v)| v <= 0.0).count();
    let mut out = Out::new();
    out.kv("config", args.config.display());
    out.kv("iterations", t.iterations());
    out.kv("processes", t.processes());
    out.kv("seed", config.seed);
    out.kv("method", t.meta().method);
    out.kv("barrier_seconds", barrier);
    out.kv("pipeline_seconds", pipeline);
    out.kv("nonpositive_entries", nonpositive);
    if matches!(config.source, SimSource::Hyper { .. }) {
        out.kv("clamped_spans", clamped);
    }
    if let Some(path) = &args.emit_trace {
        trace::save_trace(path, &t)?;
        out.kv("trace_csv", path.display());
        out.kv("trace_meta", trace::meta_path(path).display());
    }
    Ok(out.0)
}

// -- report -------------------------------------------------------------------------

/// Fraction of cycles whose removed (fill) iterations are all at least as
/// short, by row mean, as every retained iteration of the cycle.
fn fill_shortest_fraction(t: &TimingTrace) -> Option<f64> {
    let layout = t.meta().cycle;
    if layout.fill == 0 {
        return None;
    }
    let row_mean = |k: usize| {
        let row = t.iteration_slice(k).expect("k < iterations");
        row.iter().sum::<f64>() / row.len() as f64
    };
    let cycle_len = layout.cycle_length();
    let mut cycles = 0_usize;
    let mut consistent = 0_usize;
    let mut start = 0_usize;
    while start < t.iterations() {
        let end = (start + cycle_len).min(t.iterations());
        let mut removed_max = f64::NEG_INFINITY;
        let mut retained_min = f64::INFINITY;
        for k in start..end {
            let mean = row_mean(k);
            if layout.is_fill(k) {
                removed_max = removed_max.max(mean);
            } else {
                retained_min = retained_min.min(mean);
            }
        }
        if removed_max.is_finite() && retained_min.is_finite() {
            cycles += 1;
            if removed_max <= retained_min {
                consistent += 1;
            }
        }
        start = end;
    }
    if cycles == 0 {
        return None;
    }
    Some(consistent as f64 / cycles as f64)
}

fn cmd_report(args: ReportArgs) -> Result<String, CliError> {
    let raw = trace::load_trace(&args.trace)?;
    let t = trace::filter_fill(&raw);
    let meta = raw.meta();
    let n_eff = resolve_n_eff(&raw, args.pe)?;
    let mut out = Out::new();
    out.kv("trace", args.trace.display());
    if let Some(platform) = &meta.platform {
        out.kv("platform", platform);
    }
    out.kv("method", meta.method);
    out.kv("processes", meta.processes);
    out.kv("cores_per_node", meta.cores_per_node);
    out.kv("n_eff", n_eff);
    out.kv("restart", meta.cycle.restart);
    out.kv("fill", meta.cycle.fill);
    out.kv("iterations_raw", raw.iterations());
    out.kv("iterations", t.iterations());

    // Are the discarded fill iterations really the quick ones?
    match fill_shortest_fraction(&raw) {
        None => out.kv("fill_check", "none"),
        Some(fraction) => {
            out.kv("fill_check", if fraction >= 0.9 { "ok" } else { "suspect" });
            out.kv("fill_shortest_fraction", fraction);
        }
    }

    // Bulk fits of the pooled iteration times, both families.
    let sample = pooled_sample(&t);
    let bins = args.bins.unwrap_or_else(|| dist::freedman_diaconis_bins(&sample));
    out.kv("bins", bins);
    let uniform_fit = dist::fit_uniform(&sample)?;
    out.kv("bulk_uniform_fit", &uniform_fit);
    out.kv("bulk_uniform_sse", dist::goodness_sse(&uniform_fit, &sample, bins)?);
    let jsu_fit = dist::fit_johnson_su(&sample, args.seed)?;
    out.kv("bulk_johnsonsu_fit", &jsu_fit.spec);
    out.kv("bulk_johnsonsu_log_likelihood", jsu_fit.log_likelihood);
    out.kv("bulk_johnsonsu_sse", dist::goodness_sse(&jsu_fit.spec, &sample, bins)?);

    // Model totals.
    let iterations = t.iterations();
    let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stationary_barrier = iterations as f64
        * model::expected_max_quadrature_within(&jsu_fit.spec, n_eff, lo, hi)?;
    out.kv("stationary_barrier_seconds", stationary_barrier);
    out.kv("stationary_pipelined_seconds", iterations as f64 * jsu_fit.spec.mean());
    let fits = trace::per_iteration_uniform_fits(&t);
    let specs = fits.specs();
    let nonstationary_barrier = model::nonstationary_barrier_total(&specs, n_eff)?.seconds;
    out.kv("nonstationary_barrier_seconds", nonstationary_barrier);
    out.kv(
        "nonstationary_pipelined_seconds",
        model::nonstationary_pipelined_total(&specs)?.seconds,
    );

    // Distribution-free bound totals from pooled moments.
    let (mu, sigma) = stats::sample_moments(&sample)?;
    out.kv("sample_mean", mu);
    out.kv("sample_std", sigma);
    out.kv("cramer_total_seconds", iterations as f64 * model::cramer_bound(mu, sigma, n_eff));
    out.kv(
        "bertsimas_total_seconds",
        iterations as f64 * model::bertsimas_bound(mu, sigma, n_eff),
    );

    // Rank identity testing.
    let c = match args.c {
        Some(c) => c,
        None => stats::ks_critical_coefficient(args.alpha)?,
    };
    let rows = stats::pairwise_ks_with_c(&t, args.reference_rank, args.alpha, c)?;
    let rejections = rows.iter().filter(|r| r.result.reject).count();
    out.kv("ks_reference_rank", args.reference_rank);
    out.kv("ks_alpha", args.alpha);
    out.kv("ks_c", c);
    out.kv("ks_threshold", rows[0].result.threshold);
    out.kv("ks_comparisons", rows.len());
    out.kv("ks_rejections", rejections);
    out.kv("ks_rejection_rate", rejections as f64 / rows.len() as f64);

    // Within-node variance, averaged over iterations (node 0).
    if meta.node_count().is_ok() {
        let total: f64 = (0..t.iterations())
            .map(|k| stats::node_variance(&t, 0, k).expect("node 0, k in range"))
            .sum();
        out.kv("node0_mean_variance", total / t.iterations() as f64);
    }

    // Hyper-model predictions under both readings of the per-iteration
    // parameter series: fitted Johnson S_U hyper-distributions, and the raw
    // empirical series resampled directly.
    let (a_fit, s_fit) = hyper_from_series(&fits, args.seed)?;
    out.kv("hyper_a_fit", &a_fit);
    out.kv("hyper_s_fit", &s_fit);
    out.kv("hyper_seed", args.seed);
    out.kv("hyper_replicates", args.replicates);
    let mut hyper = |label: &str, a: DistSpec, s: DistSpec| -> Result<f64, CliError> {
        let mut barrier_total = 0.0;
        for (mode, mode_label) in [(Method::Barrier, "barrier"), (Method::Pipelined, "pipelined")]
        {
            let config = SimConfig {
                iterations,
                processes: n_eff,
                seed: args.seed,
                mode,
                source: SimSource::Hyper { a_dist: a.clone(), s_dist: s.clone() },
            };
            let result = simulate::mc_predict(&config, args.replicates)?;
            out.kv(&format!("hyper_{label}_{mode_label}_seconds"), result.total_seconds);
            if mode == Method::Barrier {
                out.kv(&format!("hyper_{label}_clamped_spans"), result.clamped_spans);
                barrier_total = result.total_seconds;
            }
        }
        Ok(barrier_total)
    };
    let parametric_barrier = hyper("parametric", a_fit, s_fit)?;
    let empirical_a = DistSpec::empirical(fits.a.clone())?;
    let empirical_s = DistSpec::empirical(fits.s.clone())?;
    hyper("empirical", empirical_a, empirical_s)?;

    if let Some(measured) = meta.solve_seconds {
        out.kv("solve_seconds", measured);
        out.kv(
            "stationary_barrier_relative_error",
            (stationary_barrier - measured) / measured,
        );
        out.kv(
            "nonstationary_barrier_relative_error",
            (nonstationary_barrier - measured) / measured,
        );
        out.kv(
            "hyper_parametric_barrier_relative_error",
            (parametric_barrier - measured) / measured,
        );
    }
    Ok(out.0)
}
