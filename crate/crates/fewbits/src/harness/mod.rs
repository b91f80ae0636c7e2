//! Monte Carlo risk evaluation, worst-case search, scaling-exponent fits
//! and budget audits.
//!
//! Trials are independent work items: every trial derives its own labeled
//! randomness from `(seed, trial index)` up front, so results are identical
//! whatever the worker count, and losses are aggregated with compensated
//! summation in trial order.

pub mod cli;
pub mod report;
pub mod runfile;

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{bits_for, ProtocolConfig};
use crate::dist::{lp_loss, neumaier_sum, InstanceFamily, InstanceSpec, TwoPointSide};
use crate::error::{Error, Result};
use crate::message::Transcript;
use crate::protocol::run_protocol;
use crate::randomness::SharedRandomness;
use crate::rates::{classify_regime, Budget, Regime};
use crate::sampling::sample;

/// Monte Carlo estimate of a protocol's risk on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    pub config: ProtocolConfig,
    pub instance: String,
    pub trials: usize,
    pub mean_loss: f64,
    /// Sample standard deviation divided by sqrt(trials).
    pub std_error: f64,
    /// True iff every trial's transcript passed the budget audit.
    pub budget_ok: bool,
}

/// Mean and standard error of the clipped-estimate loss over independent
/// trials, with a per-trial budget audit.
pub fn estimate_risk(
    cfg: &ProtocolConfig,
    instance: &InstanceSpec,
    trials: usize,
    seed: u64,
) -> Result<RiskReport> {
    cfg.validate()?;
    if trials < 2 {
        return Err(Error::InvalidParameter(
            "risk estimation needs at least 2 trials".into(),
        ));
    }
    if instance.k != cfg.k {
        return Err(Error::DimensionMismatch {
            got: instance.k,
            want: cfg.k,
        });
    }
    let truth = instance.realize()?;
    let root = SharedRandomness::new(seed);
    let outcomes: Vec<Result<(f64, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let shared = root.descend("trial", t as u64);
            let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
            let out = run_protocol(cfg, &samples, &shared)?;
            let audit = budget_audit(&out.transcript, cfg);
            let loss = lp_loss(&out.clipped, &truth, cfg.p)?;
            Ok((loss, audit.pass))
        })
        .collect();

    let mut losses = Vec::with_capacity(trials);
    let mut budget_ok = true;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok((loss, ok)) => {
                losses.push(loss);
                budget_ok &= ok;
            }
            Err(e) => {
                return Err(Error::TrialFailed {
                    trial: t,
                    source: Box::new(e),
                })
            }
        }
    }
    let mean = neumaier_sum(losses.iter().copied()) / trials as f64;
    let var = neumaier_sum(losses.iter().map(|&l| (l - mean) * (l - mean)))
        / (trials - 1) as f64;
    Ok(RiskReport {
        config: *cfg,
        instance: instance.to_string(),
        trials,
        mean_loss: mean,
        std_error: (var.max(0.0) / trials as f64).sqrt(),
        budget_ok,
    })
}

/// Evaluate every instance of the family and return the one with the
/// largest mean loss. Ties keep the earliest entry.
pub fn worst_case_risk(
    cfg: &ProtocolConfig,
    family: &[InstanceSpec],
    trials: usize,
    seed: u64,
) -> Result<(InstanceSpec, RiskReport)> {
    if family.is_empty() {
        return Err(Error::InvalidParameter(
            "worst-case search needs a non-empty family".into(),
        ));
    }
    let mut best: Option<(InstanceSpec, RiskReport)> = None;
    for spec in family {
        let report = estimate_risk(cfg, spec, trials, seed)?;
        let better = best
            .as_ref()
            .is_none_or(|(_, b)| report.mean_loss > b.mean_loss);
        if better {
            best = Some((*spec, report));
        }
    }
    Ok(best.unwrap())
}

/// The benchmark family a worst-case search runs over when none is given:
/// uniform, Zipf(1), point mass, sqrt(k)-sparse, two Dirichlet draws, and
/// the two-point pair at `eps = (100 m n)^{-1/2}`.
pub fn default_worst_case_family(k: usize, m: usize, n: usize) -> Vec<InstanceSpec> {
    let mut family = vec![
        InstanceSpec::new(InstanceFamily::Uniform, k, 0),
        InstanceSpec::new(InstanceFamily::Zipf { alpha: 1.0 }, k, 0),
        InstanceSpec::new(InstanceFamily::Sparse { s: 1 }, k, 0),
    ];
    let s = (k as f64).sqrt().ceil() as usize;
    if s > 1 && s <= k {
        family.push(InstanceSpec::new(InstanceFamily::Sparse { s }, k, 0));
    }
    family.push(InstanceSpec::new(InstanceFamily::Dirichlet, k, 1));
    family.push(InstanceSpec::new(InstanceFamily::Dirichlet, k, 2));
    if k >= 2 {
        let eps = 1.0 / (100.0 * m as f64 * n as f64).sqrt();
        for side in [TwoPointSide::First, TwoPointSide::Second] {
            family.push(InstanceSpec::new(
                InstanceFamily::TwoPoint { epsilon: eps, side },
                k,
                0,
            ));
        }
    }
    family
}

/// Which configuration field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    M,
    N,
    K,
    L,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::M => "m",
            SweepParam::N => "n",
            SweepParam::K => "k",
            SweepParam::L => "l",
        })
    }
}

/// A grid for a scaling fit.
#[derive(Debug, Clone)]
pub enum Sweep {
    /// Vary one field; the abscissa is its value.
    Parameter { param: SweepParam, values: Vec<usize> },
    /// Vary `l`; the abscissa is the bucket count `2^l`.
    BucketCount { l_values: Vec<usize> },
    /// Vary `m` with `k = round(k_per_ml * m * l)` and `l = ceil(log2 k)`
    /// recomputed per point; the abscissa is the total budget `m * l`.
    CoupledBudget { m_values: Vec<usize>, k_per_ml: f64 },
}

impl Sweep {
    fn param_name(&self) -> String {
        match self {
            Sweep::Parameter { param, .. } => param.to_string(),
            Sweep::BucketCount { .. } => "2^l".into(),
            Sweep::CoupledBudget { .. } => "ml".into(),
        }
    }

    /// Expand into `(abscissa, config)` points.
    fn points(&self, base: &ProtocolConfig) -> Result<Vec<(f64, ProtocolConfig)>> {
        let mut points = Vec::new();
        match self {
            Sweep::Parameter { param, values } => {
                for &v in values {
                    let mut cfg = *base;
                    match param {
                        SweepParam::M => cfg.m = v,
                        SweepParam::N => cfg.n = v,
                        SweepParam::K => cfg.k = v,
                        SweepParam::L => cfg.l = v,
                    }
                    points.push((v as f64, cfg));
                }
            }
            Sweep::BucketCount { l_values } => {
                for &l in l_values {
                    let mut cfg = *base;
                    cfg.l = l;
                    points.push(((1u64 << l) as f64, cfg));
                }
            }
            Sweep::CoupledBudget { m_values, k_per_ml } => {
                for &m in m_values {
                    let (k, l) = couple_budget(m, *k_per_ml)?;
                    let mut cfg = *base;
                    cfg.m = m;
                    cfg.k = k;
                    cfg.l = l;
                    points.push(((m * l) as f64, cfg));
                }
            }
        }
        Ok(points)
    }
}

/// Solve `l = ceil(log2 k)` with `k = round(k_per_ml * m * l)`.
fn couple_budget(m: usize, k_per_ml: f64) -> Result<(usize, usize)> {
    for l in 1..=62 {
        let k = (k_per_ml * (m * l) as f64).round() as usize;
        if k >= 2 && bits_for(k) == l {
            return Ok((k, l));
        }
    }
    Err(Error::InvalidSweep(format!(
        "no (k, l) fixpoint for m = {m}, k/ml = {k_per_ml}"
    )))
}

/// A scaling fit: per-point risks and the ordinary least squares slope of
/// log mean loss against the log abscissa.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub param: String,
    pub xs: Vec<f64>,
    pub reports: Vec<RiskReport>,
    pub regime: Regime,
    pub slope: f64,
    pub slope_stderr: f64,
}

/// Run the sweep and fit the log-log slope.
///
/// The grid must be strictly increasing, span at least a factor of 16, hold
/// at least 4 points, and stay inside a single predicted regime; crossings
/// are an error listing the offending points.
pub fn scaling_slope(
    base: &ProtocolConfig,
    family: InstanceFamily,
    sweep: &Sweep,
    trials: usize,
    seed: u64,
) -> Result<ScalingFit> {
    let points = sweep.points(base)?;
    if points.len() < 4 {
        return Err(Error::InvalidSweep(format!(
            "grid has {} points, need at least 4",
            points.len()
        )));
    }
    for pair in points.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(Error::InvalidSweep(
                "grid values must be strictly increasing".into(),
            ));
        }
    }
    let span = points.last().unwrap().0 / points[0].0;
    if span < 16.0 - 1e-9 {
        return Err(Error::InvalidSweep(format!(
            "grid spans only {span:.2}x, need at least 16x"
        )));
    }

    let regimes: Vec<Regime> = points
        .iter()
        .map(|(_, cfg)| {
            classify_regime(
                cfg.m as u64,
                cfg.n as u64,
                cfg.k as u64,
                Budget::Bits(cfg.l as u64),
                cfg.p,
            )
            .regime
        })
        .collect();
    if regimes.windows(2).any(|w| w[0] != w[1]) {
        let listing: Vec<String> = points
            .iter()
            .zip(&regimes)
            .map(|((x, _), r)| format!("{x}: {r}"))
            .collect();
        return Err(Error::RegimeCrossing(listing.join(", ")));
    }

    let mut xs = Vec::with_capacity(points.len());
    let mut reports = Vec::with_capacity(points.len());
    for (x, cfg) in &points {
        let instance = InstanceSpec::new(family, cfg.k, seed);
        reports.push(estimate_risk(cfg, &instance, trials, seed)?);
        xs.push(*x);
    }
    let ys: Vec<f64> = reports.iter().map(|r| r.mean_loss).collect();
    let (slope, slope_stderr) = fit_log_log(&xs, &ys)?;
    Ok(ScalingFit {
        param: sweep.param_name(),
        xs,
        reports,
        regime: regimes[0],
        slope,
        slope_stderr,
    })
}

/// Ordinary least squares of `ln y` on `ln x`: the slope and its standard
/// error.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidSweep(
            "log-log fit needs at least 3 matched points".into(),
        ));
    }
    if let Some(&y) = ys.iter().find(|&&y| y.is_nan() || y <= 0.0) {
        return Err(Error::InvalidSweep(format!(
            "log-log fit needs positive losses, got {y}"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|&x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// One budget defect found in a transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    WrongMessageCount { got: usize, want: usize },
    WrongLength { encoder: usize, got: usize, want: usize },
    LedgerMismatch { encoder: usize, ledger: usize, actual: usize },
    OutOfOrder { position: usize, encoder: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongMessageCount { got, want } if got < want => {
                write!(f, "missing encoder messages: got {got} of {want}")
            }
            Violation::WrongMessageCount { got, want } => {
                write!(f, "extra encoder messages: got {got}, expected {want}")
            }
            Violation::WrongLength { encoder, got, want } => {
                write!(f, "encoder {encoder} sent {got} bits instead of {want}")
            }
            Violation::LedgerMismatch { encoder, ledger, actual } => {
                write!(
                    f,
                    "ledger records {ledger} bits for encoder {encoder}, message has {actual}"
                )
            }
            Violation::OutOfOrder { position, encoder } => {
                write!(f, "position {position} was produced by encoder {encoder}")
            }
        }
    }
}

/// Result of auditing one transcript against its configuration.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub pass: bool,
    pub total_bits: usize,
    pub violations: Vec<Violation>,
}

/// Check a transcript: exactly `m` messages, each of exactly `l` bits, with
/// the ledger agreeing and production order `0..m`. Failures are data, not
/// errors.
pub fn budget_audit(transcript: &Transcript, cfg: &ProtocolConfig) -> AuditReport {
    let mut violations = Vec::new();
    if transcript.len() != cfg.m {
        violations.push(Violation::WrongMessageCount {
            got: transcript.len(),
            want: cfg.m,
        });
    }
    for (i, msg) in transcript.messages().iter().enumerate() {
        if msg.len() != cfg.l {
            violations.push(Violation::WrongLength {
                encoder: i,
                got: msg.len(),
                want: cfg.l,
            });
        }
        let ledger = transcript.ledger().get(i).copied().unwrap_or(0);
        if ledger != msg.len() {
            violations.push(Violation::LedgerMismatch {
                encoder: i,
                ledger,
                actual: msg.len(),
            });
        }
    }
    let order = transcript.production_order();
    if order.len() != transcript.len() {
        violations.push(Violation::WrongMessageCount {
            got: order.len(),
            want: transcript.len(),
        });
    }
    for (position, &encoder) in order.iter().enumerate() {
        if encoder != position {
            violations.push(Violation::OutOfOrder { position, encoder });
        }
    }
    AuditReport {
        pass: violations.is_empty(),
        total_bits: transcript.total_bits(),
        violations,
    }
}
