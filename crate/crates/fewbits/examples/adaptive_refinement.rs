//! Two-pass refinement: spend half the budget uniformly, then re-allocate
//! the rest in proportion to what the rough pass saw.
//!
//! ```bash
//! cargo run --release --example adaptive_refinement
//! ```

use fewbits::ar::{allocate_rough, refine_counts, run_ar};
use fewbits::harness::budget_audit;
use fewbits::{
    lp_loss, make_instance, sample, InstanceFamily, ProtocolConfig, ProtocolKind,
    SharedRandomness,
};

fn main() {
    let cfg = ProtocolConfig::new(512, 128, 4, 4, 2.0, ProtocolKind::Ar).with_seed(3);
    let truth = make_instance(InstanceFamily::Zipf { alpha: 2.0 }, cfg.k, 0).unwrap();
    println!("truth: {:?}", truth.probs());

    // The rough pass spreads slots uniformly: every symbol gets the same
    // number of one-bit users.
    let plan = allocate_rough(cfg.m.div_ceil(2), cfg.k, cfg.l).unwrap();
    println!(
        "rough pass: {} replicas per symbol across {} encoders x {} slots",
        plan.replica_counts()[0],
        plan.encoders(),
        plan.slots_per_encoder()
    );

    // The refinement pass sizes each symbol's pool by the rough estimate.
    let rough_demo = [0.65, 0.25, 0.07, 0.03];
    let counts = refine_counts(&rough_demo, cfg.m, cfg.l, cfg.k);
    println!("rough estimate {rough_demo:?} -> refinement encoder counts {counts:?}");

    // A full run: budget audited, loss reported.
    let shared = SharedRandomness::new(cfg.seed);
    let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
    let out = run_ar(&cfg, &samples, &shared).unwrap();
    let audit = budget_audit(&out.transcript, &cfg);
    println!(
        "one run: estimate {:?}",
        out.clipped
            .iter()
            .map(|x| (x * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    println!(
        "budget: {} messages x {} bits, audit {}",
        out.transcript.len(),
        cfg.l,
        if audit.pass { "pass" } else { "FAIL" }
    );
    println!(
        "squared loss: {:.3e}",
        lp_loss(&out.clipped, &truth, cfg.p).unwrap()
    );
}
