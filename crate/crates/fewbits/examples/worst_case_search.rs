//! Worst-case risk over a family of benchmark instances, including the
//! nearly-indistinguishable two-point pair.
//!
//! ```bash
//! cargo run --release --example worst_case_search
//! ```

use fewbits::harness::{default_worst_case_family, estimate_risk, worst_case_risk};
use fewbits::{ProtocolConfig, ProtocolKind};

fn main() {
    let cfg = ProtocolConfig::new(512, 1, 8, 3, 2.0, ProtocolKind::Hash).with_seed(17);
    let family = default_worst_case_family(cfg.k, cfg.m, cfg.n);
    println!("family of {} instances:", family.len());
    for spec in &family {
        let report = estimate_risk(&cfg, spec, 300, 17).unwrap();
        println!(
            "  {:<28} mean loss {:.4e} +/- {:.1e}",
            report.instance, report.mean_loss, report.std_error
        );
    }
    let (worst, report) = worst_case_risk(&cfg, &family, 300, 17).unwrap();
    println!(
        "worst case: {worst} with mean loss {:.4e} (budget audit {})",
        report.mean_loss,
        if report.budget_ok { "pass" } else { "FAIL" }
    );
}
