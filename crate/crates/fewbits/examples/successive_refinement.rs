//! Successive refinement over block partitions, with the case dispatch and
//! the reduction chain made visible.
//!
//! Depending on how the alphabet size compares with the per-encoder sample
//! count and the addressable range of one message, the protocol estimates
//! directly, partitions once, or walks a whole chain of shrinking
//! alphabets.
//!
//! ```bash
//! cargo run --release --example successive_refinement
//! ```

use fewbits::asr::{block_partition, reduction_chain, run_asr_traced};
use fewbits::{
    lp_loss, make_instance, sample, InstanceFamily, ProtocolConfig, ProtocolKind,
    SharedRandomness,
};

fn main() {
    // The partition primitive: blocks small enough for one frame.
    let part = block_partition(7, 2).unwrap();
    println!(
        "k = 7 split by 2-bit frames: {} blocks of sizes {:?}",
        part.t(),
        (0..part.t()).map(|s| part.size(s)).collect::<Vec<_>>()
    );

    // The alphabet chain for a deep reduction.
    let chain = reduction_chain(100, 2, 2).unwrap();
    println!("k = 100, n = 2, l = 2 reduces through {chain:?}");

    // Three regimes of the same protocol.
    for (k, n, l, label) in [
        (8usize, 16usize, 3usize, "direct (k <= n)"),
        (60, 16, 3, "one partition level"),
        (100, 2, 2, "deep reduction"),
    ] {
        let m = 512;
        let cfg = ProtocolConfig::new(m, n, k, l, 2.0, ProtocolKind::Asr).with_seed(9);
        let truth = make_instance(InstanceFamily::Zipf { alpha: 1.0 }, k, 0).unwrap();
        let shared = SharedRandomness::new(cfg.seed);
        let samples = sample(&truth, m, n, &mut shared.stream("samples"));
        let (out, trace) = run_asr_traced(&cfg, &samples, &shared, false).unwrap();
        let loss = lp_loss(&out.clipped, &truth, 2.0).unwrap();
        let levels: Vec<usize> = trace.iter().map(|s| s.level_k).collect();
        println!(
            "k = {k:3}, n = {n:2}, l = {l}: {label}; refined levels {levels:?}; \
             {} messages x {l} bits; squared loss {loss:.3e}",
            out.transcript.len()
        );
    }

    // The uniform-allocation variant needs no feedback at all: frame
    // shares are 1/t rather than the estimated block masses.
    let cfg = ProtocolConfig::new(512, 16, 60, 3, 1.0, ProtocolKind::AsrUniform).with_seed(9);
    let truth = make_instance(InstanceFamily::Zipf { alpha: 1.0 }, 60, 0).unwrap();
    let shared = SharedRandomness::new(cfg.seed);
    let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
    let (out, _) = run_asr_traced(&cfg, &samples, &shared, true).unwrap();
    println!(
        "non-interactive uniform allocation, k = 60: total-variation loss {:.4}",
        lp_loss(&out.clipped, &truth, 1.0).unwrap() / 2.0
    );
}
