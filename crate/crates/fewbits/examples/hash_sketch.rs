//! Random-hashing protocol for single-sample encoders.
//!
//! Each encoder hashes its one sample into `2^l` buckets using shared
//! randomness and sends the bucket index; the decoder counts bucket matches
//! per symbol and rescales so random collisions cancel. This demonstrates
//! the encode/decode path, checks the raw estimator's unbiasedness, and
//! compares the measured risk with the predicted rate.
//!
//! ```bash
//! cargo run --release --example hash_sketch
//! ```

use fewbits::harness::estimate_risk;
use fewbits::hashing::{hash_encode, HashFamily};
use fewbits::{
    classify_regime, make_instance, run_protocol, sample, Budget, InstanceFamily, InstanceSpec,
    ProtocolConfig, ProtocolKind, SharedRandomness,
};

fn main() {
    let cfg = ProtocolConfig::new(2048, 1, 8, 3, 2.0, ProtocolKind::Hash).with_seed(7);
    let truth = make_instance(InstanceFamily::Zipf { alpha: 1.0 }, cfg.k, 0).unwrap();

    // One concrete run, spelled out.
    let shared = SharedRandomness::new(cfg.seed);
    let family = HashFamily::generate(&shared, cfg.m, cfg.k, cfg.l).unwrap();
    let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
    let first = samples.row(0)[0];
    println!(
        "encoder 0 saw symbol {first}, hashes it to bucket {} -> message {:?}",
        family.bucket(0, first),
        hash_encode(&family, 0, first).bits()
    );
    let out = run_protocol(&cfg, &samples, &shared).unwrap();
    println!("one run with m = {}, l = {}:", cfg.m, cfg.l);
    println!("  truth:   {:?}", rounded(truth.probs()));
    println!("  raw:     {:?}", rounded(&out.raw));
    println!("  clipped: {:?}", rounded(&out.clipped));

    // Unbiasedness of the raw estimator over repeated runs.
    let trials = 2000;
    let mut means = vec![0.0; cfg.k];
    for t in 0..trials {
        let shared = SharedRandomness::new(cfg.seed).descend("trial", t);
        let samples = sample(&truth, cfg.m, 1, &mut shared.stream("samples"));
        let out = run_protocol(&cfg, &samples, &shared).unwrap();
        for (m, r) in means.iter_mut().zip(&out.raw) {
            *m += r / trials as f64;
        }
    }
    println!("raw estimator mean over {trials} runs: {:?}", rounded(&means));

    // Risk against the predicted rate.
    let instance = InstanceSpec::new(InstanceFamily::Zipf { alpha: 1.0 }, cfg.k, 0);
    let report = estimate_risk(&cfg, &instance, 400, 11).unwrap();
    let pred = classify_regime(
        cfg.m as u64,
        1,
        cfg.k as u64,
        Budget::Bits(cfg.l as u64),
        cfg.p,
    );
    println!(
        "risk on {}: {:.3e} +/- {:.1e} | predicted rate ~ {:.3e} ({})",
        report.instance,
        report.mean_loss,
        report.std_error,
        pred.upper_rate,
        pred.regime
    );
}

fn rounded(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
