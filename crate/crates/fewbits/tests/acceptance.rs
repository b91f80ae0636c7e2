//! End-to-end acceptance suite: every protocol's budget discipline,
//! distributional correctness against independent oracles, and the
//! empirical scaling exponents against the predicted rates. One pass/fail
//! line per criterion (run with `--nocapture` to see them).

use rand::Rng;

use fewbits::harness::report::{csv_string, CsvRow};
use fewbits::harness::{estimate_risk, fit_log_log, scaling_slope, Sweep, SweepParam};
use fewbits::{
    budget_audit, classify_regime, lp_loss, run_protocol, sample, Budget, InstanceFamily,
    InstanceSpec, ProtocolConfig, ProtocolKind, SharedRandomness, TwoPointSide,
};

fn verdict(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:2} ({name}): {} | {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

/// A Bernoulli(q) truth as a two-symbol distribution with p(0) = q.
fn bernoulli(q: f64) -> InstanceFamily {
    InstanceFamily::TwoPoint {
        epsilon: 1.0 - 2.0 * q,
        side: TwoPointSide::Second,
    }
}

#[test]
fn criterion_01_budget_audit_across_protocols() {
    let matrix: Vec<ProtocolConfig> = vec![
        ProtocolConfig::new(33, 16, 4, 3, 2.0, ProtocolKind::Ar),
        ProtocolConfig::new(256, 64, 2, 2, 2.0, ProtocolKind::Ar),
        ProtocolConfig::new(64, 16, 8, 3, 2.0, ProtocolKind::Asr),
        ProtocolConfig::new(65, 4, 7, 3, 2.0, ProtocolKind::Asr),
        ProtocolConfig::new(512, 2, 100, 2, 2.0, ProtocolKind::Asr),
        ProtocolConfig::new(65, 4, 7, 3, 1.0, ProtocolKind::AsrUniform),
        ProtocolConfig::new(512, 2, 100, 2, 1.0, ProtocolKind::AsrUniform),
        ProtocolConfig::new(100, 64, 16, 8, 3.0, ProtocolKind::CompressRefine),
        ProtocolConfig::new(31, 32, 8, 6, 3.0, ProtocolKind::CompressRefine),
        ProtocolConfig::new(64, 32, 32, 5, 1.5, ProtocolKind::ThresholdLe2),
        ProtocolConfig::new(64, 1024, 8, 8, 3.0, ProtocolKind::ThresholdGt2)
            .with_const_scale(1.0 / 2000.0),
        ProtocolConfig::new(128, 1, 8, 3, 2.0, ProtocolKind::Hash),
        ProtocolConfig::new(7, 1, 3, 1, 2.0, ProtocolKind::Hash),
        ProtocolConfig::new(100, 16, 2, 1, 2.0, ProtocolKind::OneBit),
        ProtocolConfig::new(101, 16, 2, 4, 2.0, ProtocolKind::OneBit),
        ProtocolConfig::new(10, 4, 4, 7, 2.0, ProtocolKind::PlugIn),
        ProtocolConfig::new(9, 2, 5, 2, 2.0, ProtocolKind::ConstantUniform),
    ];
    let mut runs = 0usize;
    let mut violations = 0usize;
    for (ci, cfg) in matrix.iter().enumerate() {
        let families = [
            InstanceFamily::Uniform,
            InstanceFamily::Zipf { alpha: 1.0 },
            InstanceFamily::Sparse { s: 1 },
        ];
        for (fi, family) in families.into_iter().enumerate() {
            let truth = fewbits::make_instance(family, cfg.k, 0).unwrap();
            for trial in 0..3u64 {
                let shared = SharedRandomness::new(1000 + (ci * 10 + fi) as u64)
                    .descend("trial", trial);
                let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
                let out = run_protocol(cfg, &samples, &shared).unwrap();
                let audit = budget_audit(&out.transcript, cfg);
                runs += 1;
                violations += audit.violations.len();
                assert!(
                    audit.pass,
                    "{} m={} violations: {:?}",
                    cfg.protocol, cfg.m, audit.violations
                );
                assert_eq!(out.transcript.total_bits(), cfg.m * cfg.l);
            }
        }
    }
    verdict(
        1,
        "budget audit",
        violations == 0,
        &format!("{runs} runs across {} configs, {violations} violations", matrix.len()),
    );
}

#[test]
fn criterion_02_hash_unbiasedness() {
    let k = 8;
    let cfg = ProtocolConfig::new(8, 1, k, 3, 2.0, ProtocolKind::Hash);
    let truth = fewbits::make_instance(InstanceFamily::Zipf { alpha: 1.0 }, k, 0).unwrap();
    let trials: usize = 100_000;
    let root = SharedRandomness::new(20_260_811);
    let raws: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let shared = root.descend("trial", t as u64);
                let samples = sample(&truth, cfg.m, 1, &mut shared.stream("samples"));
                run_protocol(&cfg, &samples, &shared).unwrap().raw
            })
            .collect()
    };
    let mut worst_z = 0.0f64;
    for w in 0..k {
        let mean = raws.iter().map(|r| r[w]).sum::<f64>() / trials as f64;
        let var = raws
            .iter()
            .map(|r| (r[w] - mean) * (r[w] - mean))
            .sum::<f64>()
            / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        let z = (mean - truth.probs()[w]).abs() / se;
        worst_z = worst_z.max(z);
    }
    verdict(
        2,
        "hash unbiasedness",
        worst_z <= 3.0,
        &format!("{trials} trials, worst per-symbol |mean - p| = {worst_z:.2} standard errors"),
    );
}

#[test]
fn criterion_03_hash_rate_exponents() {
    // Slope against m at fixed l.
    let base = ProtocolConfig::new(256, 1, 8, 3, 2.0, ProtocolKind::Hash);
    let m_sweep = Sweep::Parameter {
        param: SweepParam::M,
        values: vec![256, 512, 1024, 2048, 4096],
    };
    let fit_m =
        scaling_slope(&base, InstanceFamily::Sparse { s: 1 }, &m_sweep, 400, 42).unwrap();

    // Slope against 2^l at fixed m, on an instance where the k/(m 2^l)
    // term dominates throughout.
    let base_l = ProtocolConfig::new(4096, 1, 8, 3, 2.0, ProtocolKind::Hash);
    let l_sweep = Sweep::BucketCount {
        l_values: vec![1, 2, 3, 4, 5],
    };
    let fit_l =
        scaling_slope(&base_l, InstanceFamily::Sparse { s: 1 }, &l_sweep, 400, 42).unwrap();

    let m_ok = (fit_m.slope + 1.0).abs() <= 0.15;
    let l_ok = (fit_l.slope + 1.0).abs() <= 0.25;
    verdict(
        3,
        "hash rate exponents",
        m_ok && l_ok,
        &format!(
            "slope vs m = {:.3} (want -1 +/- 0.15), slope vs 2^l = {:.3} (want -1 +/- 0.25)",
            fit_m.slope, fit_l.slope
        ),
    );
}

#[test]
fn criterion_04_exact_plugin_oracle() {
    // Exact risk of the histogram over T Bernoulli(q) samples, by direct
    // enumeration of the binomial outcomes.
    fn exact_risk(total: usize, q: f64) -> f64 {
        let tf = total as f64;
        let mut pmf = (1.0f64 - q).powi(total as i32);
        let mut risk = 0.0;
        for x in 0..=total {
            let xf = x as f64;
            let e0 = xf / tf - q;
            let e1 = (tf - xf) / tf - (1.0 - q);
            risk += pmf * (e0 * e0 + e1 * e1);
            if x < total {
                pmf *= (total - x) as f64 / (x + 1) as f64 * (q / (1.0 - q));
            }
        }
        risk
    }

    let trials = 10_000;
    let mut worst_z = 0.0f64;
    let mut checked = 0;
    for (qi, &q) in [0.1, 0.3, 0.5].iter().enumerate() {
        for total in 1..=12usize {
            let cfg = ProtocolConfig::new(1, total, 2, total, 2.0, ProtocolKind::PlugIn);
            let inst = InstanceSpec::new(bernoulli(q), 2, 0);
            let seed = 7000 + (qi * 16 + total) as u64;
            let report = estimate_risk(&cfg, &inst, trials, seed).unwrap();
            let exact = exact_risk(total, q);
            let z = (report.mean_loss - exact).abs() / report.std_error;
            worst_z = worst_z.max(z);
            checked += 1;
        }
    }
    verdict(
        4,
        "exact plug-in oracle",
        worst_z <= 3.0,
        &format!("{checked} (samples, q) cells at {trials} trials, worst deviation {worst_z:.2} SE"),
    );
}

fn reduction_bound_holds(
    p: f64,
    truth_block: &[f64],
    est_block: &[f64],
    truth_cond: &[Vec<f64>],
    est_cond: &[Vec<f64>],
) -> bool {
    let t = truth_block.len();
    let mut lhs = 0.0;
    let mut block_term = 0.0;
    let mut cond_term = 0.0;
    for s in 0..t {
        block_term += (est_block[s] - truth_block[s]).abs().powf(p);
        let mut cond_loss = 0.0;
        for (e, tr) in est_cond[s].iter().zip(&truth_cond[s]) {
            cond_loss += (e - tr).abs().powf(p);
            lhs += (est_block[s] * e - truth_block[s] * tr).abs().powf(p);
        }
        cond_term += (truth_block[s] * est_block[s]).powf(p / 2.0) * cond_loss;
    }
    lhs <= 2f64.powf(p - 1.0) * (block_term + cond_term) + 1e-9
}

fn tv_reduction_bound_holds(
    truth_block: &[f64],
    est_block: &[f64],
    truth_cond: &[Vec<f64>],
    est_cond: &[Vec<f64>],
) -> bool {
    let t = truth_block.len();
    let mut lhs = 0.0;
    let mut block_term = 0.0;
    let mut cond_term = 0.0;
    for s in 0..t {
        block_term += (est_block[s] - truth_block[s]).abs();
        let mut cond_l1 = 0.0;
        for (e, tr) in est_cond[s].iter().zip(&truth_cond[s]) {
            cond_l1 += (e - tr).abs();
            lhs += (est_block[s] * e - truth_block[s] * tr).abs();
        }
        cond_term += truth_block[s] * cond_l1;
    }
    // TV is half the l1 norm on both sides; the factor cancels.
    lhs <= block_term + cond_term + 1e-9
}

#[test]
fn criterion_05_per_realization_reduction_inequality() {
    // Synthetic tuples.
    let mut stream = SharedRandomness::new(55).stream("tuples");
    let rand_dist = |len: usize, stream: &mut fewbits::Stream| {
        let raw: Vec<f64> = (0..len).map(|_| stream.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect::<Vec<f64>>()
    };
    let mut tuple_checks = 0usize;
    for _ in 0..10_000 {
        let t = stream.random_range(1..6usize);
        let sizes: Vec<usize> = (0..t).map(|_| stream.random_range(1..5usize)).collect();
        let truth_block = rand_dist(t, &mut stream);
        let est_block: Vec<f64> = (0..t).map(|_| stream.random::<f64>()).collect();
        let truth_cond: Vec<Vec<f64>> =
            sizes.iter().map(|&s| rand_dist(s, &mut stream)).collect();
        let est_cond: Vec<Vec<f64>> =
            sizes.iter().map(|&s| rand_dist(s, &mut stream)).collect();
        for p in [2.0, 3.0, 4.0] {
            assert!(
                reduction_bound_holds(p, &truth_block, &est_block, &truth_cond, &est_cond),
                "synthetic tuple violated the bound at p = {p}"
            );
            tuple_checks += 1;
        }
        assert!(
            tv_reduction_bound_holds(&truth_block, &est_block, &truth_cond, &est_cond),
            "synthetic tuple violated the TV bound"
        );
        tuple_checks += 1;
    }

    // Live runs: every recorded refinement level of real executions.
    let cfg = ProtocolConfig::new(256, 8, 60, 3, 2.0, ProtocolKind::Asr);
    let truth = fewbits::make_instance(InstanceFamily::Zipf { alpha: 1.0 }, 60, 0).unwrap();
    let mut live_checks = 0usize;
    for trial in 0..1000u64 {
        let shared = SharedRandomness::new(56).descend("trial", trial);
        let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
        let (_, trace) = fewbits::asr::run_asr_traced(&cfg, &samples, &shared, false).unwrap();
        assert!(!trace.is_empty());
        for step in &trace {
            // Push the ground truth onto this level and its blocks.
            let mut level_truth = vec![0.0; step.level_k];
            for (w, &lv) in step.to_level.iter().enumerate() {
                level_truth[lv as usize] += truth.probs()[w];
            }
            let truth_block = step.partition.push_forward(&level_truth);
            let truth_cond: Vec<Vec<f64>> = (0..step.partition.t())
                .map(|s| {
                    let start = step.partition.start(s);
                    let size = step.partition.size(s);
                    if truth_block[s] > 0.0 {
                        level_truth[start..start + size]
                            .iter()
                            .map(|&x| x / truth_block[s])
                            .collect()
                    } else {
                        vec![1.0 / size as f64; size]
                    }
                })
                .collect();
            for p in [2.0, 3.0, 4.0] {
                assert!(
                    reduction_bound_holds(
                        p,
                        &truth_block,
                        &step.block_estimate,
                        &truth_cond,
                        &step.conditionals,
                    ),
                    "live run violated the bound at p = {p}"
                );
                live_checks += 1;
            }
            assert!(
                tv_reduction_bound_holds(
                    &truth_block,
                    &step.block_estimate,
                    &truth_cond,
                    &step.conditionals,
                ),
                "live run violated the TV bound"
            );
            live_checks += 1;
        }
    }
    verdict(
        5,
        "per-realization reduction inequality",
        true,
        &format!("{tuple_checks} synthetic checks and {live_checks} live checks, no violation"),
    );
}

#[test]
fn criterion_06_one_bit_mse_scaling() {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &m_prime in &[250usize, 500, 1000] {
        for &n in &[32usize, 128, 512] {
            let cfg = ProtocolConfig::new(m_prime, n, 2, 1, 2.0, ProtocolKind::OneBit);
            let inst = InstanceSpec::new(bernoulli(0.3), 2, 0);
            let report = estimate_risk(&cfg, &inst, 200, 7).unwrap();
            points.push(((m_prime * n) as f64, report.mean_loss));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (slope, stderr) = fit_log_log(&xs, &ys).unwrap();
    verdict(
        6,
        "one-bit MSE scaling",
        (slope + 1.0).abs() <= 0.2,
        &format!("log MSE vs log(m'n) slope = {slope:.3} (stderr {stderr:.3}), want -1 +/- 0.2"),
    );
}

#[test]
fn criterion_07_ar_risk_scaling() {
    let base =
        ProtocolConfig::new(512, 256, 4, 4, 2.0, ProtocolKind::Ar).with_const_scale(1e-6);
    let sweep = Sweep::Parameter {
        param: SweepParam::M,
        values: vec![512, 1024, 2048, 4096, 8192],
    };
    let fit = scaling_slope(&base, InstanceFamily::Uniform, &sweep, 400, 42).unwrap();
    verdict(
        7,
        "refinement risk scaling",
        (fit.slope + 1.0).abs() <= 0.25,
        &format!(
            "slope vs m = {:.3} (stderr {:.3}) in regime {}, want -1 +/- 0.25",
            fit.slope, fit.slope_stderr, fit.regime
        ),
    );
}

#[test]
fn criterion_08_thresholding_scaling() {
    // k tracks 8 * m * l with l = ceil(log2 k) recomputed per point; the
    // abscissa is the total budget ml.
    let base = ProtocolConfig::new(64, 32, 8, 3, 2.0, ProtocolKind::ThresholdLe2);
    let sweep = Sweep::CoupledBudget {
        m_values: vec![64, 128, 256, 512, 1024],
        k_per_ml: 8.0,
    };
    let fit = scaling_slope(&base, InstanceFamily::Uniform, &sweep, 400, 42).unwrap();
    verdict(
        8,
        "thresholding risk scaling",
        (fit.slope + 1.0).abs() <= 0.3,
        &format!(
            "slope vs ml = {:.3} (stderr {:.3}) in regime {}, want -1 +/- 0.3",
            fit.slope, fit.slope_stderr, fit.regime
        ),
    );
}

#[test]
fn criterion_09_rate_elbow() {
    let below_small = classify_regime(1000, 100, 8, Budget::Infinite, 1.5);
    let below_large = classify_regime(1000, 100, 16, Budget::Infinite, 1.5);
    let above_small = classify_regime(1000, 100, 8, Budget::Infinite, 3.0);
    let above_large = classify_regime(1000, 100, 16, Budget::Infinite, 3.0);
    let moves_below = below_large.upper_rate != below_small.upper_rate;
    let flat_above = above_large.upper_rate == above_small.upper_rate;
    verdict(
        9,
        "rate elbow at p = 2",
        moves_below && flat_above,
        &format!(
            "p=1.5: rate {} -> {} when k doubles; p=3: {} -> {}",
            below_small.upper_rate,
            below_large.upper_rate,
            above_small.upper_rate,
            above_large.upper_rate
        ),
    );
}

#[test]
fn criterion_10_determinism_across_worker_counts() {
    let base = ProtocolConfig::new(256, 1, 8, 3, 2.0, ProtocolKind::Hash);
    let sweep = Sweep::Parameter {
        param: SweepParam::M,
        values: vec![256, 512, 1024, 2048, 4096],
    };
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let fit =
                    scaling_slope(&base, InstanceFamily::Zipf { alpha: 1.0 }, &sweep, 50, 9)
                        .unwrap();
                let rows: Vec<CsvRow> = fit
                    .xs
                    .iter()
                    .zip(&fit.reports)
                    .map(|(&x, report)| {
                        let cfg = report.config;
                        let pred = classify_regime(
                            cfg.m as u64,
                            cfg.n as u64,
                            cfg.k as u64,
                            Budget::Bits(cfg.l as u64),
                            cfg.p,
                        );
                        CsvRow {
                            param_value: x,
                            mean_loss: report.mean_loss,
                            std_error: report.std_error,
                            predicted_rate: pred.upper_rate,
                            regime: pred.regime.to_string(),
                        }
                    })
                    .collect();
                csv_string(&rows)
            })
    };
    let single = run_with(1);
    let quad = run_with(4);
    verdict(
        10,
        "determinism across worker counts",
        single == quad,
        &format!("{} CSV bytes identical across 1 and 4 workers", single.len()),
    );
}

// The estimate a clipped decoder reports never beats the information
// floor by more than the documented slack: mean + 3 SE stays above a tenth
// of the reference lower bound on the adversarial pair.
#[test]
fn lower_bound_floor_smoke() {
    let cases: Vec<ProtocolConfig> = vec![
        ProtocolConfig::new(128, 16, 4, 2, 2.0, ProtocolKind::Ar),
        ProtocolConfig::new(128, 4, 7, 3, 2.0, ProtocolKind::Asr),
        ProtocolConfig::new(128, 4, 7, 3, 1.0, ProtocolKind::AsrUniform),
        ProtocolConfig::new(90, 32, 8, 6, 3.0, ProtocolKind::CompressRefine),
        ProtocolConfig::new(64, 16, 16, 4, 1.5, ProtocolKind::ThresholdLe2),
        ProtocolConfig::new(64, 512, 8, 8, 3.0, ProtocolKind::ThresholdGt2)
            .with_const_scale(1.0 / 2000.0),
        ProtocolConfig::new(256, 1, 8, 3, 2.0, ProtocolKind::Hash),
        ProtocolConfig::new(200, 32, 2, 1, 2.0, ProtocolKind::OneBit),
        ProtocolConfig::new(32, 8, 4, 4, 2.0, ProtocolKind::PlugIn),
    ];
    for cfg in cases {
        let eps = 1.0 / (100.0 * (cfg.m * cfg.n) as f64).sqrt();
        let floor = fewbits::lower_bound(
            cfg.m as u64,
            cfg.n as u64,
            cfg.k as u64,
            Budget::Bits(cfg.l as u64),
            cfg.p,
        );
        for side in [TwoPointSide::First, TwoPointSide::Second] {
            let inst = InstanceSpec::new(
                InstanceFamily::TwoPoint { epsilon: eps, side },
                cfg.k,
                0,
            );
            let report = estimate_risk(&cfg, &inst, 200, 13).unwrap();
            assert!(
                report.mean_loss + 3.0 * report.std_error >= floor / 10.0,
                "{} at {}: mean {} + 3se {} below floor/10 = {}",
                cfg.protocol,
                report.instance,
                report.mean_loss,
                report.std_error,
                floor / 10.0
            );
        }
    }
}

// Risk on the clipped output never exceeds risk on the raw output.
#[test]
fn clipping_never_hurts_loss() {
    let cfg = ProtocolConfig::new(64, 1, 8, 2, 2.0, ProtocolKind::Hash);
    let truth = fewbits::make_instance(InstanceFamily::Sparse { s: 1 }, 8, 0).unwrap();
    for trial in 0..200u64 {
        let shared = SharedRandomness::new(70).descend("trial", trial);
        let samples = sample(&truth, cfg.m, 1, &mut shared.stream("samples"));
        let out = run_protocol(&cfg, &samples, &shared).unwrap();
        let raw_loss = lp_loss(&out.raw, &truth, 2.0).unwrap();
        let clipped_loss = lp_loss(&out.clipped, &truth, 2.0).unwrap();
        assert!(clipped_loss <= raw_loss + 1e-12);
    }
}
