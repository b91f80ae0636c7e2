//! Predicted minimax rates across parameter regimes, and the elbow at
//! p = 2.
//!
//! ```bash
//! cargo run --release --example rate_table
//! ```

use fewbits::{classify_regime, lower_bound, Budget};

fn main() {
    println!(
        "{:>8} {:>6} {:>6} {:>4} {:>4} | {:<12} {:>12} {:>12} {:>12}",
        "m", "n", "k", "l", "p", "regime", "upper", "lower", "ref-lb"
    );
    let points: Vec<(u64, u64, u64, Budget, f64)> = vec![
        (10_000, 100, 10, Budget::Bits(4), 2.0),
        (10_000, 100, 10, Budget::Infinite, 2.0),
        (4_096, 64, 256, Budget::Bits(4), 2.0),
        (4_096, 64, 256, Budget::Bits(4), 3.0),
        (4, 1_000, 4_000, Budget::Bits(12), 2.0),
        (1 << 20, 2, 4_096, Budget::Bits(3), 1.5),
        (1 << 20, 2, 4_096, Budget::Bits(3), 4.0),
        (10_000, 1, 10, Budget::Bits(3), 1.0),
        (4_096, 1_024, 4_096, Budget::Bits(1), 2.0),
    ];
    for (m, n, k, l, p) in points {
        let pred = classify_regime(m, n, k, l, p);
        let lb = lower_bound(m, n, k, l, p);
        println!(
            "{m:>8} {n:>6} {k:>6} {l:>4} {p:>4} | {:<12} {:>12.3e} {:>12.3e} {:>12.3e}",
            pred.regime.label(),
            pred.upper_rate,
            pred.lower_rate,
            lb
        );
    }

    // The elbow: below p = 2 the unconstrained rate carries the dimension,
    // above it does not.
    println!("\nunconstrained rate as k doubles (m = n = 1000):");
    for p in [1.0, 1.5, 2.0, 2.5, 3.0] {
        let r8 = classify_regime(1000, 1000, 8, Budget::Infinite, p).upper_rate;
        let r16 = classify_regime(1000, 1000, 16, Budget::Infinite, p).upper_rate;
        println!("  p = {p:3}: k=8 -> {r8:.3e}, k=16 -> {r16:.3e}, ratio {:.3}", r16 / r8);
    }
}
