//! Predicted minimax rates: regime classification and reference lower-bound
//! curves, constants dropped and logarithmic factors noted rather than
//! multiplied in. All logarithms are base 2.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Per-encoder bit budget, possibly unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    Bits(u64),
    Infinite,
}

impl Budget {
    fn bits(self) -> Option<u64> {
        match self {
            Budget::Bits(l) => Some(l),
            Budget::Infinite => None,
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Bits(l) => write!(f, "{l}"),
            Budget::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "inf" || s == "infinite" {
            return Ok(Budget::Infinite);
        }
        s.parse::<u64>()
            .map(Budget::Bits)
            .map_err(|_| Error::InvalidParameter(format!("bad budget '{s}'")))
    }
}

/// Parameter regime labels. Boundaries follow the simplified predicates
/// (`ml` against `k` or `n`), not the proof-side regularity conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Central,
    HighN,
    MediumN,
    TightBudget,
    LowN,
    SingleSample,
    Uncovered,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Central => "central",
            Regime::HighN => "high-n",
            Regime::MediumN => "medium-n",
            Regime::TightBudget => "tight-budget",
            Regime::LowN => "low-n",
            Regime::SingleSample => "n-equals-1",
            Regime::Uncovered => "uncovered",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A classified parameter point with its predicted rates, constants
/// dropped. Where upper and lower bounds do not match, both are reported
/// and the notes say so; no single rate is synthesized.
#[derive(Debug, Clone, Serialize)]
pub struct RegimePrediction {
    pub regime: Regime,
    pub upper_rate: f64,
    pub lower_rate: f64,
    pub notes: String,
}

/// The dimension-free or dimension-carrying unconstrained rate, depending
/// on which side of p = 2 the loss sits.
fn central_rate(m: f64, n: f64, k: f64, p: f64) -> f64 {
    if p <= 2.0 {
        k.powf(1.0 - p / 2.0) / (m * n).powf(p / 2.0)
    } else {
        1.0 / (m * n).powf(p / 2.0)
    }
}

/// Classify `(m, n, k, l, p)` into its parameter regime and report the
/// predicted rate, constants dropped.
pub fn classify_regime(m: u64, n: u64, k: u64, l: Budget, p: f64) -> RegimePrediction {
    let (mf, nf, kf) = (m as f64, n as f64, k as f64);
    let central = central_rate(mf, nf, kf, p);

    let Some(l_bits) = l.bits() else {
        return RegimePrediction {
            regime: Regime::Central,
            upper_rate: central,
            lower_rate: central,
            notes: "unconstrained budget".into(),
        };
    };
    let lf = l_bits as f64;
    let two_l = 2f64.powf(lf);
    let ml = mf * lf;

    if n == 1 {
        let rate = (kf / (mf * two_l).powf(p / 2.0)).max(central_rate(mf, 1.0, kf, p));
        let mut notes = String::from("single-sample hashing rate");
        let exponent = (p / 2.0).max(1.0);
        if two_l.powf(exponent) >= kf || mf * two_l < kf * kf {
            notes.push_str("; matching lower bound needs (2^l)^(p/2 v 1) < k and m 2^l >= k^2");
        }
        return RegimePrediction {
            regime: Regime::SingleSample,
            upper_rate: rate,
            lower_rate: rate,
            notes,
        };
    }

    let tight = if p <= 2.0 {
        ml < kf
    } else {
        (k <= n && ml < kf) || (k > n && ml < nf)
    };
    if tight {
        let rate = (1.0 / ml.powf(p - 1.0)).max(central);
        return RegimePrediction {
            regime: Regime::TightBudget,
            upper_rate: rate,
            lower_rate: rate,
            notes: "thresholding regime; log factors dropped".into(),
        };
    }

    if n >= k && ml >= kf {
        let rate = (kf / (mf * nf * lf).powf(p / 2.0)).max(central);
        return RegimePrediction {
            regime: Regime::HighN,
            upper_rate: rate,
            lower_rate: rate,
            notes: "refinement regime".into(),
        };
    }

    let medium = if p <= 2.0 {
        kf / two_l <= nf && n < k && ml >= kf
    } else {
        kf / two_l.powf(p / 2.0) <= nf && n < k && ml >= nf
    };
    if medium {
        let rate = if p <= 2.0 {
            (kf.powf(1.0 - p / 2.0) / ml.powf(p / 2.0)).max(central)
        } else {
            (1.0 / (ml.powf(p / 2.0) * nf.powf(p / 2.0 - 1.0))).max(central)
        };
        return RegimePrediction {
            regime: Regime::MediumN,
            upper_rate: rate,
            lower_rate: rate,
            notes: "successive-refinement regime; log factors dropped".into(),
        };
    }

    let low = if p <= 2.0 {
        nf < kf / two_l && mf * nf * two_l >= kf * kf
    } else {
        nf < kf / two_l.powf(p / 2.0) && mf * nf * two_l >= kf * kf
    };
    if low {
        let matched = kf / (mf * nf * two_l).powf(p / 2.0);
        if p <= 2.0 {
            return RegimePrediction {
                regime: Regime::LowN,
                upper_rate: matched,
                lower_rate: matched,
                notes: "deep-reduction regime".into(),
            };
        }
        return RegimePrediction {
            regime: Regime::LowN,
            upper_rate: (kf / (mf * nf * two_l)).powf(p / 2.0),
            lower_rate: matched,
            notes: "bounds do not match for p > 2 in this regime; both reported".into(),
        };
    }

    RegimePrediction {
        regime: Regime::Uncovered,
        upper_rate: f64::NAN,
        lower_rate: f64::NAN,
        notes: "no classified regime covers this point".into(),
    }
}

/// The largest applicable reference lower bound at a parameter point,
/// constants dropped.
pub fn lower_bound(m: u64, n: u64, k: u64, l: Budget, p: f64) -> f64 {
    let (mf, nf, kf) = (m as f64, n as f64, k as f64);
    let mut best = central_rate(mf, nf, kf, p);

    let Some(l_bits) = l.bits() else {
        return best;
    };
    let lf = l_bits as f64;
    let two_l = 2f64.powf(lf);
    let ml = mf * lf;
    let log_k = kf.log2().max(1.0);
    let log_n = nf.log2().max(1.0);

    // Extremely tight budgets force a dimension-free floor.
    if 2.0 * ml < kf {
        best = best.max(1.0 / ml.powf(p - 1.0));
    }

    if p <= 2.0 {
        if nf >= kf * log_k && mf > (kf / lf).powf(2.0) {
            best = best.max(kf / (mf * nf * lf).powf(p / 2.0));
        }
        if kf / two_l <= nf && nf < kf * log_k && mf > (kf / lf).powf(2.0) {
            best = best.max(kf.powf(1.0 - p / 2.0) / (ml * log_k).powf(p / 2.0));
        }
        if nf < kf / two_l && mf * nf * two_l > kf * kf {
            best = best.max(kf / (mf * nf * two_l).powf(p / 2.0));
        }
    } else {
        if nf >= kf * log_k && mf > (kf / lf).powf(2.0) {
            best = best.max(kf / (mf * nf * lf).powf(p / 2.0));
        }
        if kf / two_l.powf(p / 2.0) <= nf
            && nf < kf * log_k
            && mf > ((nf / log_n) / lf).powf(2.0)
        {
            best = best.max(1.0 / (ml.powf(p / 2.0) * nf.powf(p / 2.0 - 1.0) * log_n));
        }
        if nf < kf / two_l.powf(p / 2.0) && mf * nf * two_l > kf * kf {
            best = best.max(kf / (mf * nf * two_l).powf(p / 2.0));
        }
    }
    best
}
