//! Distributed estimation of discrete distributions under per-encoder bit
//! budgets.
//!
//! `m` encoders each hold `n` i.i.d. samples from an unknown distribution
//! over `k` symbols and may send exactly `l` bits apiece, in sequence, to a
//! decoder that reconstructs the distribution under an `lp` loss. This
//! crate implements a family of protocols for that problem (budget
//! reallocation, successive refinement over block partitions, sample
//! compression, thresholding, and random hashing) together with a Monte
//! Carlo harness that measures their risk, audits every transmitted bit,
//! and fits empirical scaling exponents against the predicted rates.
//!
//! Start with the runnable examples (`cargo run --release --example
//! hash_sketch`, etc.); the `fewbits` binary exposes the same experiments
//! as subcommands.

pub mod ar;
pub mod asr;
pub mod compress;
pub mod config;
pub mod dist;
pub mod error;
pub mod harness;
pub mod hashing;
pub mod message;
pub mod onebit;
pub mod protocol;
pub mod randomness;
pub mod rates;
pub mod sampling;

pub use config::{bits_for, ProtocolConfig, ProtocolKind};
pub use dist::{
    clip_to_unit, lp_loss, make_instance, make_two_point, Distribution, InstanceFamily,
    InstanceSpec, SubDistribution, TwoPointSide,
};
pub use error::{Error, Result};
pub use harness::{
    budget_audit, default_worst_case_family, estimate_risk, fit_log_log, scaling_slope,
    worst_case_risk, AuditReport, RiskReport, ScalingFit, Sweep, SweepParam,
};
pub use message::{BitMessage, Transcript};
pub use protocol::{run_protocol, ProtocolOutput};
pub use randomness::{SharedRandomness, Stream};
pub use rates::{classify_regime, lower_bound, Budget, Regime, RegimePrediction};
pub use sampling::{sample, SampleMatrix};
