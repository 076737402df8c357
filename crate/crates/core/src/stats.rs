//! Two-sample identity testing and descriptive statistics over traces:
//! exact Kolmogorov-Smirnov distances, asymptotic rejection thresholds,
//! pairwise rank comparisons, and per-node variance.

use crate::numeric;
use crate::trace::{TimingTrace, TraceError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFiniteSample,
    #[error("significance level {alpha} is not in the critical-value table")]
    UnsupportedAlpha { alpha: f64 },
    #[error("node {node} out of range for a layout with {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("pairwise comparison needs at least 2 ranks, trace has {processes}")]
    NotEnoughRanks { processes: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Outcome of one two-sample Kolmogorov-Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    /// Sup-distance between the two empirical CDFs, in [0, 1].
    pub d: f64,
    pub threshold: f64,
    /// True exactly when `d > threshold`.
    pub reject: bool,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
}

fn check_sample(sample: &[f64]) -> Result<(), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteSample);
    }
    Ok(())
}

/// Exact sup-distance between the empirical CDFs of two samples.
///
/// Merged sweep over the sorted samples: at each distinct value, every tied
/// point from both samples is consumed before the deviation is evaluated,
/// so ties between and within samples are handled exactly.
pub fn ks_statistic(sample1: &[f64], sample2: &[f64]) -> Result<f64, StatsError> {
    check_sample(sample1)?;
    check_sample(sample2)?;
    let x = numeric::sorted_copy(sample1);
    let y = numeric::sorted_copy(sample2);
    let n = x.len() as f64;
    let m = y.len() as f64;
    let (mut i, mut j) = (0_usize, 0_usize);
    let mut d = 0.0_f64;
    while i < x.len() || j < y.len() {
        let v = match (x.get(i), y.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!("loop guard"),
        };
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Significance levels with tabulated critical coefficients.
pub const SUPPORTED_ALPHAS: [f64; 6] = [0.10, 0.05, 0.025, 0.01, 0.005, 0.001];

/// Critical coefficient c(alpha) = sqrt(-ln(alpha/2)/2) from the standard
/// asymptotic table (c(0.05) = 1.3581...). Only tabulated levels are
/// accepted; anything else is an error rather than an extrapolation.
pub fn ks_critical_coefficient(alpha: f64) -> Result<f64, StatsError> {
    if SUPPORTED_ALPHAS.iter().any(|&a| (a - alpha).abs() <= 1e-12) {
        Ok((-(alpha / 2.0).ln() / 2.0).sqrt())
    } else {
        Err(StatsError::UnsupportedAlpha { alpha })
    }
}

/// Rejection threshold c(alpha) * sqrt((n+m)/(nm)) for sample sizes n, m.
pub fn ks_threshold(n: usize, m: usize, alpha: f64) -> Result<f64, StatsError> {
    ks_threshold_with_c(n, m, ks_critical_coefficient(alpha)?)
}

/// Threshold with an explicit critical coefficient, for callers that want a
/// value outside the standard table.
pub fn ks_threshold_with_c(n: usize, m: usize, c: f64) -> Result<f64, StatsError> {
    if n == 0 || m == 0 {
        return Err(StatsError::EmptySample);
    }
    Ok(c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt())
}

/// Full two-sample test: statistic, threshold, and decision.
pub fn ks_test(sample1: &[f64], sample2: &[f64], alpha: f64) -> Result<KsResult, StatsError> {
    ks_test_with_c(sample1, sample2, alpha, ks_critical_coefficient(alpha)?)
}

/// Two-sample test with an explicit critical coefficient. `alpha` is echoed
/// in the result for reporting; the decision uses `c`.
pub fn ks_test_with_c(
    sample1: &[f64],
    sample2: &[f64],
    alpha: f64,
    c: f64,
) -> Result<KsResult, StatsError> {
    let d = ks_statistic(sample1, sample2)?;
    let (n, m) = (sample1.len(), sample2.len());
    let threshold = ks_threshold_with_c(n, m, c)?;
    Ok(KsResult { d, threshold, reject: d > threshold, n, m, alpha })
}

/// KS outcome of one non-reference rank against the reference rank.
#[derive(Clone, Debug, PartialEq)]
pub struct RankKs {
    pub rank: usize,
    pub result: KsResult,
}

/// Tests every rank's iteration-time sample against the reference rank's,
/// in parallel across ranks with a deterministic (rank-ordered) result.
pub fn pairwise_ks(
    trace: &TimingTrace,
    reference_rank: usize,
    alpha: f64,
) -> Result<Vec<RankKs>, StatsError> {
    pairwise_ks_with_c(trace, reference_rank, alpha, ks_critical_coefficient(alpha)?)
}

pub fn pairwise_ks_with_c(
    trace: &TimingTrace,
    reference_rank: usize,
    alpha: f64,
    c: f64,
) -> Result<Vec<RankKs>, StatsError> {
    let p = trace.processes();
    if p < 2 {
        return Err(StatsError::NotEnoughRanks { processes: p });
    }
    let reference = trace.rank_series(reference_rank)?;
    let candidates: Vec<usize> = (0..p).filter(|&r| r != reference_rank).collect();
    let workers = std::thread::available_parallelism().map(|w| w.get()).unwrap_or(1);
    let chunk = candidates.len().div_ceil(workers).max(1);
    let chunk_results: Vec<Result<Vec<RankKs>, StatsError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = candidates
            .chunks(chunk)
            .map(|ranks| {
                let reference = &reference;
                scope.spawn(move || {
                    ranks
                        .iter()
                        .map(|&rank| {
                            let series = trace.rank_series(rank)?;
                            let result = ks_test_with_c(&series, reference, alpha, c)?;
                            Ok(RankKs { rank, result })
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(candidates.len());
    for chunk in chunk_results {
        rows.extend(chunk?);
    }
    Ok(rows)
}

/// Fraction of non-reference ranks whose sample rejects against the
/// reference rank's sample.
pub fn pairwise_rejection_rate(
    trace: &TimingTrace,
    reference_rank: usize,
    alpha: f64,
) -> Result<f64, StatsError> {
    let rows = pairwise_ks(trace, reference_rank, alpha)?;
    Ok(rows.iter().filter(|r| r.result.reject).count() as f64 / rows.len() as f64)
}

/// Population variance of iteration `k`'s times over the ranks of one node
/// (ranks `node*cores_per_node .. (node+1)*cores_per_node`).
pub fn node_variance(trace: &TimingTrace, node: usize, k: usize) -> Result<f64, StatsError> {
    let nodes = trace.meta().node_count()?;
    if node >= nodes {
        return Err(StatsError::NodeOutOfRange { node, nodes });
    }
    let row = trace.iteration_slice(k)?;
    let cores = trace.meta().cores_per_node;
    let slice = &row[node * cores..(node + 1) * cores];
    Ok(numeric::population_variance(slice))
}

/// Mean and population standard deviation of a sample.
pub fn sample_moments(sample: &[f64]) -> Result<(f64, f64), StatsError> {
    check_sample(sample)?;
    Ok((numeric::mean(sample), numeric::population_variance(sample).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistSpec;
    use crate::rng::RandomStream;
    use crate::trace::{CycleLayout, Method, TraceMeta};

    // -- statistic ----------------------------------------------------------

    #[test]
    fn identical_samples_have_zero_distance() {
        let s = [0.4, 1.0, 2.5, 2.5, 9.0];
        assert_eq!(ks_statistic(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_samples_have_unit_distance() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
    }

    #[test]
    fn interleaved_pair_has_distance_one_half() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.5, 2.5]).unwrap(), 0.5);
    }

    #[test]
    fn statistic_is_symmetric() {
        let mut rng = RandomStream::seeded(80);
        for _ in 0..20 {
            let a: Vec<f64> = (0..37).map(|_| rng.next_f64()).collect();
            let b: Vec<f64> = (0..53).map(|_| rng.next_f64()).collect();
            assert_eq!(ks_statistic(&a, &b).unwrap(), ks_statistic(&b, &a).unwrap());
        }
    }

    #[test]
    fn statistic_is_invariant_under_increasing_transforms() {
        let mut rng = RandomStream::seeded(81);
        for _ in 0..20 {
            let a: Vec<f64> = (0..40).map(|_| rng.next_f64() * 4.0 - 2.0).collect();
            let b: Vec<f64> = (0..25).map(|_| rng.next_f64() * 4.0 - 2.0).collect();
            let d = ks_statistic(&a, &b).unwrap();
            let cube = |v: &f64| v * v * v;
            let ta: Vec<f64> = a.iter().map(cube).collect();
            let tb: Vec<f64> = b.iter().map(cube).collect();
            assert_eq!(d, ks_statistic(&ta, &tb).unwrap());
        }
    }

    /// O(n*m) reference: evaluate both empirical CDFs at every sample point.
    fn brute_force_d(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b.iter())
            .map(|&t| (cdf(a, t) - cdf(b, t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn merged_sweep_matches_brute_force_with_heavy_ties() {
        let mut rng = RandomStream::seeded(82);
        for case in 0..200 {
            let n = 3 + rng.next_index(30);
            let m = 3 + rng.next_index(30);
            // Integer grid forces ties within and across samples.
            let a: Vec<f64> = (0..n).map(|_| rng.next_index(8) as f64).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.next_index(8) as f64).collect();
            let fast = ks_statistic(&a, &b).unwrap();
            let slow = brute_force_d(&a, &b);
            assert!((fast - slow).abs() < 1e-15, "case {case}: {fast} vs {slow}");
        }
    }

    #[test]
    fn duplicating_a_shared_point_moves_d_by_at_most_one_over_min_size() {
        let mut rng = RandomStream::seeded(83);
        for _ in 0..50 {
            let n = 5 + rng.next_index(20);
            let m = 5 + rng.next_index(20);
            let mut a: Vec<f64> = (0..n).map(|_| rng.next_index(6) as f64).collect();
            let mut b: Vec<f64> = (0..m).map(|_| rng.next_index(6) as f64).collect();
            let shared = a[rng.next_index(a.len())];
            b.push(shared);
            let before = ks_statistic(&a, &b).unwrap();
            a.push(shared);
            b.push(shared);
            let after = ks_statistic(&a, &b).unwrap();
            let budget = 1.0 / (a.len().min(b.len()) as f64) + 1e-12;
            assert!((after - before).abs() <= budget, "{before} -> {after}");
        }
    }

    #[test]
    fn empty_and_non_finite_samples_are_rejected() {
        assert_eq!(ks_statistic(&[], &[1.0]), Err(StatsError::EmptySample));
        assert_eq!(ks_statistic(&[1.0], &[]), Err(StatsError::EmptySample));
        assert_eq!(ks_statistic(&[f64::NAN], &[1.0]), Err(StatsError::NonFiniteSample));
    }

    // -- thresholds -----------------------------------------------------------

    #[test]
    fn critical_coefficients_match_the_asymptotic_table() {
        let table = [
            (0.10, 1.2238734153404083),
            (0.05, 1.3581015157406195),
            (0.025, 1.4802071873007983),
            (0.01, 1.6276236307187293),
            (0.005, 1.7308183826022854),
            (0.001, 1.9494746035204051),
        ];
        for (alpha, want) in table {
            let got = ks_critical_coefficient(alpha).unwrap();
            assert!((got - want).abs() < 1e-15, "alpha={alpha}: {got}");
        }
    }

    #[test]
    fn thresholds_match_the_formula() {
        let cases = [
            (5000, 5000, 0.027162030314812392),
            (5334, 5334, 0.026297879198522278),
            (4, 4, 0.96032279131992082),
        ];
        for (n, m, want) in cases {
            let got = ks_threshold(n, m, 0.05).unwrap();
            assert!((got - want).abs() < 1e-15, "n={n}: {got}");
        }
    }

    #[test]
    fn threshold_shrinks_with_size_and_grows_with_confidence() {
        let mut prev = f64::INFINITY;
        for n in [10, 100, 1000, 10000] {
            let t = ks_threshold(n, n, 0.05).unwrap();
            assert!(t < prev);
            prev = t;
        }
        let mut prev = 0.0;
        for alpha in [0.10, 0.05, 0.025, 0.01, 0.005, 0.001] {
            let t = ks_threshold(500, 500, alpha).unwrap();
            assert!(t > prev, "alpha={alpha}");
            prev = t;
        }
    }

    #[test]
    fn off_table_alpha_is_rejected() {
        assert_eq!(
            ks_critical_coefficient(0.5),
            Err(StatsError::UnsupportedAlpha { alpha: 0.5 })
        );
        assert!(ks_threshold(10, 10, 0.04).is_err());
    }

    // -- full test -------------------------------------------------------------

    #[test]
    fn identical_samples_never_reject() {
        let s: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_test(&s, &s, 0.05).unwrap();
        assert!(!r.reject);
        assert_eq!(r.d, 0.0);
        assert_eq!((r.n, r.m, r.alpha), (100, 100, 0.05));
    }

    #[test]
    fn widely_separated_large_samples_reject() {
        let a: Vec<f64> = (0..5000).map(|i| i as f64 / 5000.0).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
        let r = ks_test(&a, &b, 0.05).unwrap();
        assert!(r.reject);
        assert_eq!(r.d, 1.0);
    }

    #[test]
    fn decision_is_exactly_d_greater_than_threshold() {
        let mut rng = RandomStream::seeded(84);
        for _ in 0..50 {
            let a: Vec<f64> = (0..60).map(|_| rng.next_f64()).collect();
            let b: Vec<f64> = (0..60).map(|_| rng.next_f64() + 0.1).collect();
            let r = ks_test(&a, &b, 0.05).unwrap();
            assert_eq!(r.reject, r.d > r.threshold);
        }
    }

    #[test]
    fn explicit_coefficient_overrides_the_table() {
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..50).map(|i| i as f64 + 3.0).collect();
        let strict = ks_test_with_c(&a, &b, 0.05, 0.01).unwrap();
        let lax = ks_test_with_c(&a, &b, 0.05, 100.0).unwrap();
        assert_eq!(strict.d, lax.d);
        assert!(strict.reject);
        assert!(!lax.reject);
    }

    #[test]
    fn same_distribution_rejection_rate_is_near_alpha() {
        // Quick null-calibration check; a fuller version runs in acceptance.
        let spec = DistSpec::uniform(0.0, 1.0).unwrap();
        let trials = 400;
        let mut rejections = 0;
        for trial in 0..trials {
            let mut rng = RandomStream::split(85, trial);
            let a = spec.sample(&mut rng, 500);
            let b = spec.sample(&mut rng, 500);
            if ks_test(&a, &b, 0.05).unwrap().reject {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / trials as f64;
        assert!((0.02..=0.09).contains(&rate), "rate {rate}");
    }

    // -- trace-level analyses -----------------------------------------------

    fn trace_meta(processes: usize, cores_per_node: usize) -> TraceMeta {
        TraceMeta {
            processes,
            cores_per_node,
            method: Method::Barrier,
            cycle: CycleLayout::new(30, 0).unwrap(),
            platform: None,
            solve_seconds: None,
        }
    }

    /// Builds a trace whose entry (k, p) is produced by `f`.
    fn trace_from_fn(
        iterations: usize,
        processes: usize,
        cores_per_node: usize,
        f: impl Fn(usize, usize) -> f64,
    ) -> TimingTrace {
        let times: Vec<f64> = (0..iterations * processes)
            .map(|i| f(i / processes, i % processes))
            .collect();
        TimingTrace::new(trace_meta(processes, cores_per_node), times).unwrap()
    }

    #[test]
    fn identical_ranks_never_reject_pairwise() {
        let t = trace_from_fn(50, 6, 1, |k, _| 1.0 + k as f64 * 1e-3);
        assert_eq!(pairwise_rejection_rate(&t, 0, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn shifted_half_rejects_and_unshifted_half_does_not() {
        // All ranks share the reference's per-iteration noise (so unshifted
        // pairs have d = 0); the upper half is then offset far beyond the
        // threshold scale and must always reject.
        let p = 128;
        let mut rng = RandomStream::seeded(86);
        let noise: Vec<f64> = (0..200).map(|_| rng.next_f64() * 1e-3).collect();
        let t = trace_from_fn(200, p, 1, |k, rank| {
            noise[k] + if rank >= p / 2 { 1000.0 } else { 0.0 }
        });
        let rate = pairwise_rejection_rate(&t, 0, 0.05).unwrap();
        let expected = (p / 2) as f64 / (p - 1) as f64;
        assert!((rate - expected).abs() < 1e-12, "rate {rate}");
        assert!((rate - 0.5).abs() < 0.01);
    }

    #[test]
    fn two_disjoint_ranks_always_reject() {
        let t = trace_from_fn(40, 2, 1, |k, p| 1.0 + k as f64 * 1e-4 + p as f64 * 50.0);
        assert_eq!(pairwise_rejection_rate(&t, 0, 0.05).unwrap(), 1.0);
    }

    #[test]
    fn pairwise_results_are_rank_ordered_and_deterministic() {
        let t = trace_from_fn(30, 9, 1, |k, p| 1.0 + (k * 7 + p * 3) as f64 * 1e-3);
        let once = pairwise_ks(&t, 4, 0.05).unwrap();
        let again = pairwise_ks(&t, 4, 0.05).unwrap();
        assert_eq!(once, again);
        let ranks: Vec<usize> = once.iter().map(|r| r.rank).collect();
        assert_eq!(ranks, vec![0, 1, 2, 3, 5, 6, 7, 8]);
    }

    #[test]
    fn pairwise_preconditions_are_checked() {
        let single = trace_from_fn(10, 1, 1, |_, _| 1.0);
        assert_eq!(
            pairwise_rejection_rate(&single, 0, 0.05),
            Err(StatsError::NotEnoughRanks { processes: 1 })
        );
        let t = trace_from_fn(10, 3, 1, |_, _| 1.0);
        assert!(matches!(
            pairwise_rejection_rate(&t, 9, 0.05),
            Err(StatsError::Trace(TraceError::RankOutOfRange { rank: 9, .. }))
        ));
    }

    #[test]
    fn constant_node_has_zero_variance() {
        let t = trace_from_fn(5, 8, 4, |k, _| 2.0 + k as f64);
        assert_eq!(node_variance(&t, 0, 3).unwrap(), 0.0);
        assert_eq!(node_variance(&t, 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn two_point_node_variance_by_hand() {
        // Node 0 holds {1, 3}: population variance 1.
        let t = trace_from_fn(1, 2, 2, |_, p| 1.0 + 2.0 * p as f64);
        assert_eq!(node_variance(&t, 0, 0).unwrap(), 1.0);
    }

    #[test]
    fn lockstep_nodes_have_zero_within_and_positive_across_variance() {
        // Every rank on a node shares its node's time; nodes differ.
        let t = trace_from_fn(4, 12, 4, |k, p| 1.0 + k as f64 * 0.1 + (p / 4) as f64);
        for node in 0..3 {
            assert_eq!(node_variance(&t, node, 2).unwrap(), 0.0, "node {node}");
        }
        let row = t.iteration_slice(2).unwrap();
        assert!(numeric::population_variance(row) > 0.1);
    }

    #[test]
    fn node_analysis_preconditions_are_checked() {
        let t = trace_from_fn(4, 12, 4, |_, _| 1.0);
        assert_eq!(node_variance(&t, 3, 0), Err(StatsError::NodeOutOfRange { node: 3, nodes: 3 }));
        assert!(matches!(
            node_variance(&t, 0, 9),
            Err(StatsError::Trace(TraceError::IterationOutOfRange { .. }))
        ));
        let bad = trace_from_fn(4, 10, 4, |_, _| 1.0);
        assert!(matches!(
            node_variance(&bad, 0, 0),
            Err(StatsError::Trace(TraceError::IndivisibleLayout { .. }))
        ));
    }

    #[test]
    fn moments_of_a_two_point_sample() {
        let (mu, sigma) = sample_moments(&[1.0, 3.0]).unwrap();
        assert_eq!((mu, sigma), (2.0, 1.0));
        assert_eq!(sample_moments(&[]), Err(StatsError::EmptySample));
    }
}
