//! End-to-end acceptance suite. Each test covers one numbered criterion and
//! prints a single `acceptance NN <name>: PASS|FAIL (...)` line directly to
//! the process stdout (bypassing libtest capture) so the verdicts are visible
//! in plain `cargo test` output. Criteria with wall-clock budgets measure and
//! enforce them.

use pipeperf::dist::{self, DistSpec};
use pipeperf::model;
use pipeperf::rng::RandomStream;
use pipeperf::simulate::{self, SimConfig, SimSource};
use pipeperf::stats;
use pipeperf::trace::{self, CycleLayout, Method, TimingTrace, TraceMeta};
use std::io::Write as _;
use std::time::Instant;

/// Prints the verdict line (uncaptured) and fails the test if any check failed.
fn verdict(id: u32, name: &str, failures: &[String], detail: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut line = format!("acceptance {id:02} {name}: {status}");
    if !detail.is_empty() {
        line.push_str(&format!(" ({detail})"));
    }
    for f in failures {
        line.push_str(&format!(" [{f}]"));
    }
    {
        let mut out = std::io::stdout().lock();
        writeln!(out, "{line}").ok();
        out.flush().ok();
    }
    assert!(failures.is_empty(), "acceptance {id:02} {name}: {failures:?}");
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        failures.push(msg());
    }
}

fn budget(failures: &mut Vec<String>, started: Instant, limit_s: f64) -> f64 {
    let elapsed = started.elapsed().as_secs_f64();
    check(failures, elapsed < limit_s, || {
        format!("runtime {elapsed:.2}s exceeds {limit_s}s budget")
    });
    elapsed
}

fn jsu(a: f64, b: f64, loc: f64, scale: f64) -> DistSpec {
    DistSpec::johnson_su(a, b, loc, scale).unwrap()
}

fn uni(a: f64, s: f64) -> DistSpec {
    DistSpec::uniform(a, s).unwrap()
}

// -- 1: closed-form order statistics ------------------------------------------

#[test]
fn c01_unit_uniform_expected_max_matches_n_over_n_plus_1() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let spec = uni(0.0, 1.0);
    let mut worst = 0.0_f64;
    for n in [2_usize, 64, 128, 8192] {
        let exact = n as f64 / (n as f64 + 1.0);
        // Both the dispatching closed form and the independent quadrature
        // route must land on n/(n+1).
        let closed = model::expected_max(&spec, n).unwrap();
        let quad = model::expected_max_quadrature(&spec, n).unwrap();
        for (route, value) in [("closed", closed), ("quadrature", quad)] {
            let err = (value - exact).abs();
            worst = worst.max(err);
            check(&mut failures, err <= 1e-8, || {
                format!("n={n} {route}: |{value} - {exact}| = {err:.3e} > 1e-8")
            });
        }
    }
    let elapsed = budget(&mut failures, started, 1.0);
    verdict(
        1,
        "unit-uniform expected max equals n/(n+1)",
        &failures,
        &format!("max |err| = {worst:.3e}, {elapsed:.2}s"),
    );
}

// -- 2: stationary oracle equivalence -----------------------------------------

fn mean_barrier_over_replicates(spec: &DistSpec, k: usize, p: usize, reps: usize) -> f64 {
    let specs = vec![spec.clone(); k];
    let totals: Vec<f64> = (0..reps)
        .map(|r| {
            let t = simulate::synth_trace(&specs, p, 1000 + r as u64).unwrap();
            simulate::eval_barrier(&t)
        })
        .collect();
    totals.iter().sum::<f64>() / reps as f64
}

#[test]
fn c02_stationary_model_matches_simulated_barrier_mean() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let (k, p, reps) = (500, 64, 200);
    let cases = [("uniform", uni(1.0, 0.5)), ("johnsonsu", jsu(-0.5, 2.0, 1.0e-3, 2.0e-4))];
    let mut detail = String::new();
    for (name, spec) in &cases {
        let predicted = model::stationary_barrier_total(spec, k, p).unwrap().seconds;
        let simulated = mean_barrier_over_replicates(spec, k, p, reps);
        let rel = (simulated - predicted).abs() / predicted.abs();
        if !detail.is_empty() {
            detail.push_str(", ");
        }
        detail.push_str(&format!("{name} rel err = {rel:.2e}"));
        check(&mut failures, rel < 0.01, || {
            format!("{name}: simulated {simulated} vs predicted {predicted}, rel {rel:.3e} >= 1%")
        });
    }
    let elapsed = budget(&mut failures, started, 60.0);
    detail.push_str(&format!(", {elapsed:.2}s"));
    verdict(2, "stationary barrier total matches simulation mean", &failures, &detail);
}

// -- 3: non-stationary oracle equivalence --------------------------------------

/// Per-iteration uniforms whose minimum ramps linearly from `a0` to `3*a0`.
fn ramped_specs(a0: f64, s: f64, k: usize) -> Vec<DistSpec> {
    (0..k)
        .map(|i| {
            let frac = if k > 1 { i as f64 / (k - 1) as f64 } else { 0.0 };
            uni(a0 * (1.0 + 2.0 * frac), s)
        })
        .collect()
}

#[test]
fn c03_nonstationary_models_match_simulation_under_drift() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let (a0, s, p) = (1.0e-3, 4.0e-4, 64);

    // Barrier side: K=500, 200 replicates.
    let specs = ramped_specs(a0, s, 500);
    let predicted = model::nonstationary_barrier_total(&specs, p).unwrap().seconds;
    let reps = 200;
    let mean_barrier = (0..reps)
        .map(|r| {
            let t = simulate::synth_trace(&specs, p, 2000 + r as u64).unwrap();
            simulate::eval_barrier(&t)
        })
        .sum::<f64>()
        / reps as f64;
    let rel_barrier = (mean_barrier - predicted).abs() / predicted;
    check(&mut failures, rel_barrier < 0.01, || {
        format!("barrier: simulated {mean_barrier} vs predicted {predicted}, rel {rel_barrier:.3e} >= 1%")
    });

    // Pipelined side: K=5000, 50 replicates; the mean-sum model is a lower
    // bound that the slowest-rank total approaches from above.
    let specs_long = ramped_specs(a0, s, 5000);
    let mean_sum = model::nonstationary_pipelined_total(&specs_long).unwrap().seconds;
    let reps_pipe = 50;
    let mean_pipeline = (0..reps_pipe)
        .map(|r| {
            let t = simulate::synth_trace(&specs_long, p, 3000 + r as u64).unwrap();
            simulate::eval_pipeline(&t)
        })
        .sum::<f64>()
        / reps_pipe as f64;
    let rel_pipeline = (mean_pipeline - mean_sum) / mean_sum;
    check(&mut failures, mean_pipeline >= mean_sum, || {
        format!("pipelined mean {mean_pipeline} fell below the mean-sum lower bound {mean_sum}")
    });
    check(&mut failures, rel_pipeline < 0.02, || {
        format!("pipelined: simulated {mean_pipeline} vs mean-sum {mean_sum}, rel {rel_pipeline:.3e} >= 2%")
    });

    let elapsed = budget(&mut failures, started, 60.0);
    verdict(
        3,
        "non-stationary totals match simulation under a ramped minimum",
        &failures,
        &format!(
            "barrier rel err = {rel_barrier:.2e}, pipelined excess = {rel_pipeline:.2e}, {elapsed:.2}s"
        ),
    );
}

// -- 4: pathwise ordering -------------------------------------------------------

#[test]
fn c04_pipeline_total_never_exceeds_barrier_total() {
    let mut failures = Vec::new();
    let mut rng = RandomStream::seeded(40);
    let mut violations = 0_usize;
    for case in 0..1000 {
        let k = 1 + rng.next_index(20);
        let p = 1 + rng.next_index(16);
        let specs: Vec<DistSpec> = (0..k)
            .map(|_| {
                if rng.next_index(2) == 0 {
                    uni(rng.next_f64() * 2.0 - 0.5, rng.next_f64())
                } else {
                    jsu(rng.next_f64() - 0.5, 0.8 + 2.0 * rng.next_f64(), rng.next_f64(), 0.3)
                }
            })
            .collect();
        let t = simulate::synth_trace(&specs, p, 4000 + case).unwrap();
        let barrier = simulate::eval_barrier(&t);
        let pipeline = simulate::eval_pipeline(&t);
        let slack = 1e-12 * barrier.abs().max(1.0);
        if pipeline > barrier + slack {
            violations += 1;
            if violations <= 3 {
                failures.push(format!(
                    "case {case} (K={k}, P={p}): pipeline {pipeline} > barrier {barrier}"
                ));
            }
        }
    }
    check(&mut failures, violations == 0, || format!("{violations} violations out of 1000"));
    verdict(
        4,
        "pipelined total <= barrier total on every trace",
        &failures,
        "1000 random traces, 0 violations expected",
    );
}

// -- 5: bound validity and ordering ---------------------------------------------

#[test]
fn c05_moment_bounds_dominate_the_empirical_expected_max() {
    let mut failures = Vec::new();
    let mut rng = RandomStream::seeded(50);
    let mut violations = 0_usize;
    for case in 0..100 {
        let spec = if case % 2 == 0 {
            uni(rng.next_f64() * 2.0, 0.05 + rng.next_f64())
        } else {
            jsu(rng.next_f64() - 0.5, 0.8 + 2.0 * rng.next_f64(), rng.next_f64(), 0.2)
        };
        let n = 2 + rng.next_index(255);
        let draws = spec.sample(&mut rng, 2000);
        // Exact expected max of n re-draws from the pooled empirical
        // distribution; the moment bounds hold for it with the same sample
        // moments, so every violation is an implementation bug.
        let pooled = DistSpec::empirical(draws.clone()).unwrap();
        let emax = model::expected_max(&pooled, n).unwrap();
        let (mu, sigma) = stats::sample_moments(&draws).unwrap();
        let cramer = model::cramer_bound(mu, sigma, n);
        let bertsimas = model::bertsimas_bound(mu, sigma, n);
        let slack = 1e-12 * mu.abs().max(1.0);
        let ok = emax <= cramer + slack && cramer <= bertsimas + slack;
        if !ok {
            violations += 1;
            if violations <= 3 {
                failures.push(format!(
                    "case {case} (n={n}): emax {emax}, cramer {cramer}, bertsimas {bertsimas}"
                ));
            }
        }
    }
    check(&mut failures, violations == 0, || format!("{violations} violations out of 100"));
    verdict(
        5,
        "empirical expected max <= Cramer bound <= Bertsimas bound",
        &failures,
        "100 random (distribution, n) pairs, 0 violations expected",
    );
}

// -- 6: KS null calibration -------------------------------------------------------

#[test]
fn c06_ks_false_positive_rate_is_near_alpha_under_the_null() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let (n, trials, alpha) = (500_usize, 1000_usize, 0.05);
    let mut rejections = 0_usize;
    for trial in 0..trials {
        let mut rng = RandomStream::split(60, trial as u64);
        let s1: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let s2: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        if stats::ks_test(&s1, &s2, alpha).unwrap().reject {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    check(&mut failures, (0.03..=0.07).contains(&rate), || {
        format!("rejection rate {rate} outside [0.03, 0.07]")
    });
    let elapsed = budget(&mut failures, started, 30.0);
    verdict(
        6,
        "same-distribution KS rejection rate stays near alpha",
        &failures,
        &format!("rate = {rate} over {trials} trials at alpha={alpha}, {elapsed:.2}s"),
    );
}

// -- 7: KS hand-computable case ----------------------------------------------------

#[test]
fn c07_ks_statistic_on_the_interleaved_pair_is_exactly_half() {
    let mut failures = Vec::new();
    let d = stats::ks_statistic(&[1.0, 2.0], &[1.5, 2.5]).unwrap();
    check(&mut failures, d == 0.5, || format!("D = {d}, expected exactly 0.5"));
    verdict(7, "KS statistic of {1,2} vs {1.5,2.5} is exactly 0.5", &failures, &format!("D = {d}"));
}

// -- 8: Johnson S_U fit recovery ----------------------------------------------------

#[test]
fn c08_johnson_su_fit_recovers_generating_parameters() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let truth = jsu(-0.6, 3.3, 4e-4, 1e-5);
    let draws = truth.sample(&mut RandomStream::seeded(22), 50_000);
    let fit = dist::fit_johnson_su(&draws, 0).unwrap();
    let DistSpec::JohnsonSu { a, b, loc, scale } = fit.spec else {
        panic!("fit returned a non-JohnsonSu spec");
    };
    let loc_rel = (loc - 4e-4).abs() / 4e-4;
    let scale_rel = (scale - 1e-5).abs() / 1e-5;
    let a_abs = (a + 0.6).abs();
    let b_abs = (b - 3.3).abs();
    check(&mut failures, loc_rel < 0.10, || format!("loc {loc}: rel err {loc_rel:.3} >= 10%"));
    check(&mut failures, scale_rel < 0.25, || {
        format!("scale {scale}: rel err {scale_rel:.3} >= 25%")
    });
    check(&mut failures, a_abs < 0.3, || format!("a {a}: abs err {a_abs:.3} >= 0.3"));
    check(&mut failures, b_abs < 0.3, || format!("b {b}: abs err {b_abs:.3} >= 0.3"));
    let elapsed = budget(&mut failures, started, 30.0);
    verdict(
        8,
        "Johnson S_U fit recovers its generating parameters",
        &failures,
        &format!(
            "loc rel {loc_rel:.3}, scale rel {scale_rel:.3}, a abs {a_abs:.3}, b abs {b_abs:.3}, {elapsed:.2}s"
        ),
    );
}

// -- 9: degenerate Monte Carlo identity ----------------------------------------------

#[test]
fn c09_point_mass_hyper_model_reduces_to_the_closed_forms() {
    let mut failures = Vec::new();
    let (a0, s0, k, p) = (2.0e-3, 4.0e-4, 5000_usize, 128_usize);
    let cases = [
        (Method::Barrier, k as f64 * (a0 + s0 * p as f64 / (p as f64 + 1.0))),
        (Method::Pipelined, k as f64 * (a0 + s0 / 2.0)),
    ];
    let mut detail = String::new();
    for (mode, exact) in cases {
        let config = SimConfig {
            iterations: k,
            processes: p,
            seed: 9,
            mode,
            source: SimSource::Hyper { a_dist: uni(a0, 0.0), s_dist: uni(s0, 0.0) },
        };
        let result = simulate::mc_predict(&config, 8).unwrap();
        let rel = (result.total_seconds - exact).abs() / exact;
        if !detail.is_empty() {
            detail.push_str(", ");
        }
        detail.push_str(&format!("{mode} rel err = {rel:.2e}"));
        check(&mut failures, rel <= 1e-9, || {
            format!("{mode}: {} vs exact {exact}, rel {rel:.3e} > 1e-9", result.total_seconds)
        });
        check(&mut failures, result.clamped_spans == 0, || {
            format!("{mode}: unexpected clamped spans ({})", result.clamped_spans)
        });
    }
    verdict(9, "point-mass hyper model equals the closed-form totals", &failures, &detail);
}

// -- 10: reference-case hyper prediction through the CLI ------------------------------

#[test]
fn c10_cli_hyper_prediction_reports_deviation_from_reference_runtime() {
    let mut failures = Vec::new();
    let dir = std::env::temp_dir().join(format!("pipeperf-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec_path = dir.join("reference-case.spec");
    std::fs::write(
        &spec_path,
        "K=5000\n\
         a_dist=johnsonsu;a=6.74e-1;b=2.09;loc=2.22e-2;scale=2.24e-24\n\
         s_dist=johnsonsu;a=6.69e-1;b=2.10;loc=1.71e-3;scale=9.23e-26\n\
         reference_seconds=3.14\n",
    )
    .unwrap();

    let output = std::process::Command::new(env!("CARGO_BIN_EXE_pipeperf"))
        .args([
            "predict",
            spec_path.to_str().unwrap(),
            "--mode",
            "barrier",
            "--model",
            "hyper",
            "--pe",
            "128",
            "--replicates",
            "32",
        ])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    check(&mut failures, output.status.success(), || {
        format!("exit {:?}, stderr: {}", output.status.code(), String::from_utf8_lossy(&output.stderr))
    });
    let grab = |key: &str| -> Option<f64> {
        stdout
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .and_then(|v| v.parse().ok())
    };
    let estimate = grab("estimate_seconds");
    let deviation = grab("relative_deviation");
    check(&mut failures, estimate.is_some_and(f64::is_finite), || {
        format!("missing or non-finite estimate_seconds in output:\n{stdout}")
    });
    check(&mut failures, deviation.is_some_and(f64::is_finite), || {
        format!("missing or non-finite relative_deviation in output:\n{stdout}")
    });
    std::fs::remove_dir_all(&dir).ok();
    // The deviation itself is reported, not asserted: the published
    // hyper-parameters' scale convention is ambiguous (see the ledgered open
    // question), so only completion and emission are binding.
    verdict(
        10,
        "CLI hyper prediction completes and reports its deviation",
        &failures,
        &format!(
            "estimate_seconds = {:?}, relative_deviation = {:?} [reported, not asserted]",
            estimate, deviation
        ),
    );
}

// -- 11: pipeline fill accounting -------------------------------------------------------

#[test]
fn c11_fill_removal_keeps_5000_of_5334_pipelined_iterations() {
    let mut failures = Vec::new();
    let (k, p) = (5334_usize, 4_usize);
    let meta = TraceMeta {
        processes: p,
        cores_per_node: 1,
        method: Method::Pipelined,
        cycle: CycleLayout { restart: 30, fill: 2 },
        platform: None,
        solve_seconds: None,
    };
    let t = TimingTrace::new(meta, vec![1.0e-3; k * p]).unwrap();
    let filtered = trace::filter_fill(&t);
    check(&mut failures, filtered.iterations() == 5000, || {
        format!("retained {} iterations, expected 5000", filtered.iterations())
    });
    check(&mut failures, filtered.meta().cycle.fill == 0, || {
        format!("filtered trace still declares fill={}", filtered.meta().cycle.fill)
    });
    verdict(
        11,
        "fill removal retains 5000 of 5334 pipelined iterations",
        &failures,
        &format!("{k} -> {} iterations with restart=30, fill=2", filtered.iterations()),
    );
}
