//! Sample compression and thresholding: when messages can spell out whole
//! samples, ship them, find the heavy symbols, and either refine or zero
//! the rest.
//!
//! ```bash
//! cargo run --release --example compress_and_threshold
//! ```

use fewbits::compress::{
    build_support, project_samples, run_compress_refine, run_threshold, threshold_support_budget,
    transmit_samples, ThresholdVariant,
};
use fewbits::{
    bits_for, lp_loss, make_instance, sample, InstanceFamily, ProtocolConfig, ProtocolKind,
    SharedRandomness,
};

fn main() {
    // Verbatim transmission: l = 8 bits carry two samples of a k = 16
    // alphabet per message.
    let k = 16;
    let l = 8;
    println!(
        "k = {k} needs {} bits per sample; l = {l} carries {} samples per message",
        bits_for(k),
        l / bits_for(k)
    );
    let truth = make_instance(InstanceFamily::Zipf { alpha: 1.5 }, k, 0).unwrap();
    let shared = SharedRandomness::new(21);
    let samples = sample(&truth, 120, 64, &mut shared.stream("samples"));
    let (rough, _) = transmit_samples(&samples.rows()[..40], l, k).unwrap();

    // Support selection and projection shrink the alphabet.
    let support = build_support(&rough, 2.0 / 64.0).unwrap();
    println!(
        "symbols above 2/n: {:?} (projected alphabet size {})",
        support.members(),
        support.projected_k()
    );
    let projected = project_samples(&samples, &support);
    println!(
        "first row before {:?} / after {:?}",
        &samples.row(0)[..8],
        &projected.row(0)[..8]
    );

    // The full compress-then-refine protocol.
    let cfg = ProtocolConfig::new(120, 64, k, l, 3.0, ProtocolKind::CompressRefine).with_seed(21);
    let out = run_compress_refine(&cfg, &samples, &shared).unwrap();
    println!(
        "compress+refine: loss {:.3e} with {} messages x {} bits",
        lp_loss(&out.clipped, &truth, cfg.p).unwrap(),
        out.transcript.len(),
        cfg.l
    );

    // Thresholding under a tight total budget: off-support symbols are
    // estimated as exactly zero.
    let k = 256;
    let cfg = ProtocolConfig::new(24, 32, k, 8, 1.5, ProtocolKind::ThresholdLe2).with_seed(22);
    let truth = make_instance(InstanceFamily::Sparse { s: 2 }, k, 0).unwrap();
    let shared = SharedRandomness::new(cfg.seed);
    let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
    let out = run_threshold(&cfg, &samples, ThresholdVariant::PLe2, &shared).unwrap();
    let nonzero: Vec<usize> = out
        .clipped
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(w, _)| w)
        .collect();
    println!(
        "threshold at 2/(ml) = {:.4} over k = {k}: nonzero entries {nonzero:?}, loss {:.3e}",
        2.0 / (cfg.m * cfg.l) as f64,
        lp_loss(&out.clipped, &truth, cfg.p).unwrap()
    );

    // The refining variant sizes its support from the budget.
    let cfg = ProtocolConfig::new(64, 1024, 8, 8, 3.0, ProtocolKind::ThresholdGt2)
        .with_seed(23)
        .with_const_scale(1.0 / 2000.0);
    println!(
        "refinable support budget k' = {:.2}",
        threshold_support_budget(&cfg).unwrap()
    );
    let truth = make_instance(InstanceFamily::Zipf { alpha: 2.0 }, cfg.k, 0).unwrap();
    let shared = SharedRandomness::new(cfg.seed);
    let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
    let out = run_threshold(&cfg, &samples, ThresholdVariant::PGt2, &shared).unwrap();
    println!(
        "threshold+refine: estimate {:?}",
        out.clipped
            .iter()
            .map(|x| (x * 1e3).round() / 1e3)
            .collect::<Vec<_>>()
    );
}
