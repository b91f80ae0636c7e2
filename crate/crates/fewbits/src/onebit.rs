//! One-bit estimation of a Bernoulli parameter.
//!
//! `m'` users each hold `n` Bernoulli(q) samples, summarized as a success
//! count, and each sends a single bit. The decoder recovers `q` in two
//! stages: a bisection localization driven by majority votes, then a
//! threshold-bit frequency inverted through the binomial tail. The leading
//! error term scales like `q / (m' n)` in squared loss.

use rand::Rng;

use crate::config::bits_for;
use crate::dist::neumaier_sum;
use crate::error::{Error, Result};
use crate::randomness::Stream;

/// One invocation's inputs: per-user success counts out of `n` trials.
#[derive(Debug)]
pub struct OneBitTask {
    n: usize,
    counts: Vec<u32>,
    stream: Stream,
}

impl OneBitTask {
    pub fn new(n: usize, counts: Vec<u32>, stream: Stream) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "one-bit task needs n >= 1 samples per user".into(),
            ));
        }
        if let Some(&c) = counts.iter().find(|&&c| c as usize > n) {
            return Err(Error::InvalidParameter(format!(
                "success count {c} exceeds n = {n}"
            )));
        }
        Ok(Self { n, counts, stream })
    }

    pub fn m_prime(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// The estimate together with the bit each user sent.
#[derive(Debug, Clone)]
pub struct OneBitRun {
    pub estimate: f64,
    pub bits: Vec<bool>,
}

/// `P[Bin(n, q) >= theta]`, computed outward from the mode so that neither
/// tail underflows before its terms stop mattering.
pub fn binomial_tail(n: usize, theta: usize, q: f64) -> f64 {
    if theta == 0 {
        return 1.0;
    }
    if theta > n {
        return 0.0;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let nf = n as f64;
    let mode = (((nf + 1.0) * q).floor()).min(nf) as usize;
    let ln_pmf_mode = ln_choose(n, mode)
        + mode as f64 * q.ln()
        + (nf - mode as f64) * (-q).ln_1p();
    let pmf_mode = ln_pmf_mode.exp();
    let ratio = q / (1.0 - q);
    // Terms are collected walking away from the mode, then summed smallest
    // first.
    let mut terms = Vec::new();
    if theta <= mode {
        let mut pmf = pmf_mode;
        let mut x = mode;
        while x > 0 {
            pmf *= x as f64 / ((nf - x as f64 + 1.0) * ratio);
            x -= 1;
            if x < theta {
                terms.push(pmf);
                if pmf < 1e-22 {
                    break;
                }
            }
        }
        terms.reverse();
        (1.0 - neumaier_sum(terms)).clamp(0.0, 1.0)
    } else {
        let mut pmf = pmf_mode;
        let mut x = mode;
        while x < n {
            pmf *= (nf - x as f64) / (x as f64 + 1.0) * ratio;
            x += 1;
            if x >= theta {
                terms.push(pmf);
                if pmf < 1e-22 {
                    break;
                }
            }
        }
        terms.reverse();
        neumaier_sum(terms).clamp(0.0, 1.0)
    }
}

/// Solve `P[Bin(n, q) >= theta] = target` for `q` by bisection.
///
/// The tail is strictly increasing in `q` for `1 <= theta <= n`; targets
/// outside `[0, 1]` are clamped to the nearest attainable endpoint. For
/// `theta = 0` the tail is constantly 1 and the smallest solution, 0, is
/// returned.
pub fn invert_binomial_tail(n: usize, theta: usize, target: f64) -> Result<f64> {
    if theta > n {
        return Err(Error::ThetaOutOfRange { theta, n });
    }
    if target.is_nan() {
        return Err(Error::NanEntry(0));
    }
    let target = target.clamp(0.0, 1.0);
    if theta == 0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if binomial_tail(n, theta, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Run the one-bit protocol on a task, returning the estimate and the bit
/// each user sent. Exactly `m'` bits are produced.
pub fn run_onebit(mut task: OneBitTask) -> Result<OneBitRun> {
    let m_prime = task.counts.len();
    if m_prime == 0 {
        return Err(Error::EmptyTask);
    }
    let n = task.n;
    let nf = n as f64;
    let groups = bits_for(n);
    let group_size = if groups > 0 { m_prime / (2 * groups) } else { 0 };
    let localized = groups * group_size;

    let mut bits = Vec::with_capacity(m_prime);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if group_size > 0 {
        let width_floor = (4.0 / nf).min(1.0);
        for b in 0..groups {
            let mid = 0.5 * (lo + hi);
            let theta = ((nf * mid).round().clamp(1.0, nf)) as u32;
            let group = &task.counts[b * group_size..(b + 1) * group_size];
            let ones = group.iter().filter(|&&c| c >= theta).count();
            bits.extend(group.iter().map(|&c| c >= theta));
            // Halve toward the majority side: the new window is the voted
            // half, widened back to 4/n around its center once halving
            // would undershoot that floor, so the walk keeps moving.
            let go_up = match (2 * ones).cmp(&group_size) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => task.stream.random::<bool>(),
            };
            let center = if go_up {
                0.25 * lo + 0.75 * hi
            } else {
                0.75 * lo + 0.25 * hi
            };
            let new_width = ((hi - lo) / 2.0).max(width_floor);
            lo = center - new_width / 2.0;
            hi = center + new_width / 2.0;
            if lo < 0.0 {
                hi -= lo;
                lo = 0.0;
            } else if hi > 1.0 {
                lo -= hi - 1.0;
                hi = 1.0;
            }
        }
    }

    let theta = ((nf * lo).ceil().max(1.0).min(nf)) as usize;
    let refiners = &task.counts[localized..];
    let ones = refiners.iter().filter(|&&c| c as usize >= theta).count();
    bits.extend(refiners.iter().map(|&c| c as usize >= theta));
    debug_assert_eq!(bits.len(), m_prime);

    let m_ref = refiners.len();
    let estimate = if ones == 0 && lo < 1.0 / nf {
        0.0
    } else if ones == m_ref {
        // A saturated bit pattern says only that the parameter sits at or
        // above the attainable range of this threshold; trust the
        // localization instead of inverting a tail pinned at 1.
        if hi > 1.0 - 1.0 / nf {
            1.0
        } else {
            hi
        }
    } else {
        invert_binomial_tail(n, theta, ones as f64 / m_ref as f64)?
    };
    Ok(OneBitRun { estimate, bits })
}

/// The estimate alone; see [`run_onebit`] for the per-user bits.
pub fn onebit_estimate(task: OneBitTask) -> Result<f64> {
    run_onebit(task).map(|r| r.estimate)
}

fn ln_choose(n: usize, x: usize) -> f64 {
    ln_factorial(n) - ln_factorial(x) - ln_factorial(n - x)
}

fn ln_factorial(x: usize) -> f64 {
    if x < 2 {
        return 0.0;
    }
    if x <= 30 {
        return (2..=x).map(|i| (i as f64).ln()).sum();
    }
    // Stirling series for ln Gamma(x + 1).
    let z = (x + 1) as f64;
    let half_ln_two_pi = 0.918_938_533_204_672_7;
    (z - 0.5) * z.ln() - z + half_ln_two_pi + 1.0 / (12.0 * z) - 1.0 / (360.0 * z.powi(3))
        + 1.0 / (1260.0 * z.powi(5))
        - 1.0 / (1680.0 * z.powi(7))
}
