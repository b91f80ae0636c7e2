//! Probability vectors over a finite alphabet, the losses that score their
//! estimates, and the benchmark instance families.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::randomness::SharedRandomness;

const SUM_TOL: f64 = 1e-9;

/// A normalized probability mass over `k` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates that every entry lies in `[0, 1]` and the total is 1 within
    /// `1e-9`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_entries(&probs)?;
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, at: usize) -> Result<Self> {
        if at >= k {
            return Err(Error::InvalidParameter(format!(
                "point mass position {at} out of range for k = {k}"
            )));
        }
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A sub-probability mass: entries in `[0, 1]` summing to at most 1.
///
/// This is the decoder's permitted output space; estimators that can leave it
/// (negative rescaling, independent per-symbol inversions) report a raw
/// vector and a clipped companion instead.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDistribution {
    probs: Vec<f64>,
}

impl SubDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_entries(&probs)?;
        let total = neumaier_sum(probs.iter().copied());
        if total > 1.0 + SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "sub-probability mass sums to {total} > 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

fn validate_entries(probs: &[f64]) -> Result<()> {
    for (i, &p) in probs.iter().enumerate() {
        if p.is_nan() {
            return Err(Error::NanEntry(i));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "entry {i} = {p} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Compensated (Neumaier) summation; order-independent up to f64 rounding of
/// the compensation term, used everywhere losses are aggregated.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `sum_w |estimate(w) - truth(w)|^p`, the loss every experiment reports.
///
/// The estimate is an arbitrary finite vector so that both raw and clipped
/// decoder outputs can be scored.
pub fn lp_loss(estimate: &[f64], truth: &Distribution, p: f64) -> Result<f64> {
    if p < 1.0 || p.is_nan() {
        return Err(Error::InvalidLossOrder(p));
    }
    if estimate.len() != truth.k() {
        return Err(Error::DimensionMismatch {
            got: estimate.len(),
            want: truth.k(),
        });
    }
    let mut terms = Vec::with_capacity(estimate.len());
    for (i, (&e, &t)) in estimate.iter().zip(truth.probs()).enumerate() {
        if e.is_nan() {
            return Err(Error::NanEntry(i));
        }
        terms.push((e - t).abs().powf(p));
    }
    Ok(neumaier_sum(terms))
}

/// Clip every entry to `[0, 1]`.
///
/// Clipping never increases the coordinatewise distance to any point of
/// `[0, 1]`, so scoring the clipped vector never hurts.
pub fn clip_to_unit(estimate: &[f64]) -> Result<Vec<f64>> {
    estimate
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if x.is_nan() {
                Err(Error::NanEntry(i))
            } else {
                Ok(x.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// Which of the two nearly-indistinguishable two-point instances to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoPointSide {
    First,
    Second,
}

/// The adversarial pair `((1 +/- eps)/2, (1 -/+ eps)/2, 0, ..., 0)`.
pub fn make_two_point(epsilon: f64, k: usize, side: TwoPointSide) -> Result<Distribution> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "two-point instance needs k >= 2, got {k}"
        )));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "two-point epsilon {epsilon} outside [0, 1]"
        )));
    }
    let hi = (1.0 + epsilon) / 2.0;
    let lo = (1.0 - epsilon) / 2.0;
    let mut probs = vec![0.0; k];
    match side {
        TwoPointSide::First => {
            probs[0] = hi;
            probs[1] = lo;
        }
        TwoPointSide::Second => {
            probs[0] = lo;
            probs[1] = hi;
        }
    }
    Ok(Distribution { probs })
}

/// Benchmark instance families for risk experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InstanceFamily {
    Uniform,
    /// Weights `1/i^alpha`, normalized.
    Zipf { alpha: f64 },
    /// Mass `1/s` on each of the first `s` symbols.
    Sparse { s: usize },
    /// One draw from the flat Dirichlet on the simplex.
    Dirichlet,
    TwoPoint { epsilon: f64, side: TwoPointSide },
}

/// Deterministic instance generator: the same `(family, k, seed)` always
/// yields the same distribution.
pub fn make_instance(family: InstanceFamily, k: usize, seed: u64) -> Result<Distribution> {
    if k == 0 {
        return Err(Error::InvalidParameter("alphabet size k must be >= 1".into()));
    }
    match family {
        InstanceFamily::Uniform => Ok(Distribution::uniform(k)),
        InstanceFamily::Zipf { alpha } => {
            if !alpha.is_finite() || alpha < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "zipf exponent {alpha} must be finite and >= 0"
                )));
            }
            let weights: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-alpha)).collect();
            let total = neumaier_sum(weights.iter().copied());
            Ok(Distribution {
                probs: weights.into_iter().map(|w| w / total).collect(),
            })
        }
        InstanceFamily::Sparse { s } => {
            if s == 0 || s > k {
                return Err(Error::InvalidParameter(format!(
                    "sparse support {s} outside [1, {k}]"
                )));
            }
            let mut probs = vec![0.0; k];
            for p in probs.iter_mut().take(s) {
                *p = 1.0 / s as f64;
            }
            Ok(Distribution { probs })
        }
        InstanceFamily::Dirichlet => {
            use rand::Rng;
            let mut stream = SharedRandomness::new(seed).stream("instance/dirichlet");
            // Gamma(1) draws normalized; -ln(1-U) avoids ln(0).
            let gammas: Vec<f64> = (0..k)
                .map(|_| -(-stream.random::<f64>()).ln_1p())
                .collect();
            let total = neumaier_sum(gammas.iter().copied());
            if total <= 0.0 {
                return Ok(Distribution::uniform(k));
            }
            let probs = gammas.into_iter().map(|g| (g / total).min(1.0)).collect();
            Ok(Distribution { probs })
        }
        InstanceFamily::TwoPoint { epsilon, side } => make_two_point(epsilon, k, side),
    }
}

/// A reproducible instance descriptor: family, alphabet size and the seed
/// used by stochastic families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: InstanceFamily,
    pub k: usize,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(family: InstanceFamily, k: usize, seed: u64) -> Self {
        Self { family, k, seed }
    }

    pub fn realize(&self) -> Result<Distribution> {
        make_instance(self.family, self.k, self.seed)
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            InstanceFamily::Uniform => write!(f, "uniform(k={})", self.k),
            InstanceFamily::Zipf { alpha } => write!(f, "zipf({alpha})(k={})", self.k),
            InstanceFamily::Sparse { s } => write!(f, "sparse({s})(k={})", self.k),
            InstanceFamily::Dirichlet => write!(f, "dirichlet(k={},seed={})", self.k, self.seed),
            InstanceFamily::TwoPoint { epsilon, side } => {
                let s = match side {
                    TwoPointSide::First => 1,
                    TwoPointSide::Second => 2,
                };
                write!(f, "two-point({epsilon},{s})(k={})", self.k)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn lp_loss_matches_hand_arithmetic() {
        let truth = dist(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let loss = lp_loss(&[1.0, 0.0, 0.0], &truth, 1.0).unwrap();
        assert!((loss - 4.0 / 3.0).abs() < 1e-12);

        let truth2 = dist(&[0.5, 0.5]);
        let loss2 = lp_loss(&[0.75, 0.25], &truth2, 2.0).unwrap();
        assert!((loss2 - 0.125).abs() < 1e-12);
    }

    #[test]
    fn lp_loss_zero_iff_equal() {
        let truth = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(lp_loss(truth.probs(), &truth, 3.0).unwrap(), 0.0);
        assert!(lp_loss(&[0.2, 0.3, 0.5 + 1e-6], &truth, 3.0).unwrap() > 0.0);
    }

    #[test]
    fn lp_loss_rejects_bad_input() {
        let truth = dist(&[0.5, 0.5]);
        assert!(matches!(
            lp_loss(&[1.0], &truth, 2.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            lp_loss(&[0.5, 0.5], &truth, 0.5),
            Err(Error::InvalidLossOrder(_))
        ));
        assert!(matches!(
            lp_loss(&[f64::NAN, 0.5], &truth, 2.0),
            Err(Error::NanEntry(0))
        ));
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_to_unit(&[-0.2, 0.5]).unwrap(), vec![0.0, 0.5]);
        assert_eq!(clip_to_unit(&[1.3, 0.1]).unwrap(), vec![1.0, 0.1]);
        assert_eq!(clip_to_unit(&[0.4, 0.6]).unwrap(), vec![0.4, 0.6]);
        assert!(clip_to_unit(&[f64::NAN]).is_err());
    }

    #[test]
    fn two_point_examples() {
        let d = make_two_point(0.2, 3, TwoPointSide::First).unwrap();
        assert_eq!(d.probs(), &[0.6, 0.4, 0.0]);
        let d2 = make_two_point(0.0, 2, TwoPointSide::First).unwrap();
        assert_eq!(d2.probs(), &[0.5, 0.5]);
        let d3 = make_two_point(0.2, 3, TwoPointSide::Second).unwrap();
        assert_eq!(d3.probs(), &[0.4, 0.6, 0.0]);
        assert!(make_two_point(0.2, 1, TwoPointSide::First).is_err());
    }

    #[test]
    fn instance_families() {
        let u = make_instance(InstanceFamily::Uniform, 4, 0).unwrap();
        assert_eq!(u.probs(), &[0.25, 0.25, 0.25, 0.25]);

        let s = make_instance(InstanceFamily::Sparse { s: 1 }, 5, 0).unwrap();
        assert_eq!(s.probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);

        let z = make_instance(InstanceFamily::Zipf { alpha: 1.0 }, 3, 0).unwrap();
        let want = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
        for (g, w) in z.probs().iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn instances_are_valid_and_deterministic() {
        for family in [
            InstanceFamily::Uniform,
            InstanceFamily::Zipf { alpha: 1.0 },
            InstanceFamily::Sparse { s: 3 },
            InstanceFamily::Dirichlet,
            InstanceFamily::TwoPoint {
                epsilon: 0.1,
                side: TwoPointSide::First,
            },
        ] {
            let a = make_instance(family, 8, 11).unwrap();
            let b = make_instance(family, 8, 11).unwrap();
            assert_eq!(a.probs(), b.probs());
            // Re-validating through the constructor checks the invariants.
            Distribution::new(a.probs().to_vec()).unwrap();
        }
    }

    #[test]
    fn sub_distribution_accepts_deficit_rejects_excess() {
        SubDistribution::new(vec![0.2, 0.3]).unwrap();
        assert!(SubDistribution::new(vec![0.8, 0.7]).is_err());
        assert!(SubDistribution::new(vec![-0.1, 0.5]).is_err());
    }
}
