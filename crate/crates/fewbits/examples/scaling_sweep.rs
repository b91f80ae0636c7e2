//! Empirical scaling exponents: sweep one parameter, fit the log-log slope
//! of the Monte Carlo risk, and write a plot-ready CSV.
//!
//! ```bash
//! cargo run --release --example scaling_sweep [out.csv]
//! ```

use fewbits::harness::report::{csv_string, CsvRow};
use fewbits::harness::{scaling_slope, Sweep, SweepParam};
use fewbits::{classify_regime, Budget, InstanceFamily, ProtocolConfig, ProtocolKind};

fn main() {
    let base = ProtocolConfig::new(256, 1, 8, 3, 2.0, ProtocolKind::Hash).with_seed(42);
    let sweep = Sweep::Parameter {
        param: SweepParam::M,
        values: vec![256, 512, 1024, 2048, 4096],
    };
    let fit = scaling_slope(&base, InstanceFamily::Sparse { s: 1 }, &sweep, 200, 42).unwrap();
    println!(
        "risk of {} vs {} in regime {}: slope {:.3} +/- {:.3} (predicted -1)",
        base.protocol, fit.param, fit.regime, fit.slope, fit.slope_stderr
    );

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
    let csv = csv_string(&rows);
    match std::env::args().nth(1) {
        Some(path) => {
            std::fs::write(&path, &csv).unwrap();
            println!("wrote {path}");
        }
        None => print!("{csv}"),
    }

    // A second axis: the bucket count 2^l at fixed m.
    let base = ProtocolConfig::new(4096, 1, 8, 3, 2.0, ProtocolKind::Hash).with_seed(43);
    let sweep = Sweep::BucketCount {
        l_values: vec![1, 2, 3, 4, 5],
    };
    let fit = scaling_slope(&base, InstanceFamily::Sparse { s: 1 }, &sweep, 200, 43).unwrap();
    println!(
        "risk vs 2^l at m = {}: slope {:.3} +/- {:.3} (predicted -1)",
        base.m, fit.slope, fit.slope_stderr
    );
}
