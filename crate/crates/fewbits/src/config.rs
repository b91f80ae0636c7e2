//! Run configuration shared by every protocol and the experiment harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which estimation protocol a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    /// Rough uniform pass, then budget reallocation toward heavy symbols.
    Ar,
    /// Block partitioning with recursive refinement and frame allocation.
    Asr,
    /// The non-interactive variant of `Asr` with uniform frame allocation.
    AsrUniform,
    /// Raw-sample transmission, support selection, then `Ar` on the
    /// projected alphabet.
    CompressRefine,
    /// Thresholding with a plug-in second stage.
    ThresholdLe2,
    /// Thresholding with a refinement second stage on the projected alphabet.
    ThresholdGt2,
    /// Per-encoder random hashing for single-sample encoders.
    Hash,
    /// The binary one-bit subroutine run as a k = 2 protocol.
    OneBit,
    /// Plug-in histogram over verbatim transmitted samples.
    PlugIn,
    /// Baseline that ignores the samples and outputs the uniform vector.
    ConstantUniform,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 10] = [
        ProtocolKind::Ar,
        ProtocolKind::Asr,
        ProtocolKind::AsrUniform,
        ProtocolKind::CompressRefine,
        ProtocolKind::ThresholdLe2,
        ProtocolKind::ThresholdGt2,
        ProtocolKind::Hash,
        ProtocolKind::OneBit,
        ProtocolKind::PlugIn,
        ProtocolKind::ConstantUniform,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Ar => "ar",
            ProtocolKind::Asr => "asr",
            ProtocolKind::AsrUniform => "asr-uniform",
            ProtocolKind::CompressRefine => "compress",
            ProtocolKind::ThresholdLe2 => "threshold-le2",
            ProtocolKind::ThresholdGt2 => "threshold-gt2",
            ProtocolKind::Hash => "hash",
            ProtocolKind::OneBit => "one-bit",
            ProtocolKind::PlugIn => "plugin",
            ProtocolKind::ConstantUniform => "constant-uniform",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown protocol '{s}'")))
    }
}

/// Problem and protocol parameters for one run.
///
/// `const_scale` multiplies the regularity constants used in feasibility
/// checks and budget formulas, so experiments can run at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Number of encoders.
    pub m: usize,
    /// Samples held by each encoder.
    pub n: usize,
    /// Alphabet size.
    pub k: usize,
    /// Bits per encoder message.
    pub l: usize,
    /// Loss order.
    pub p: f64,
    pub seed: u64,
    pub const_scale: f64,
    pub protocol: ProtocolKind,
}

impl ProtocolConfig {
    pub fn new(m: usize, n: usize, k: usize, l: usize, p: f64, protocol: ProtocolKind) -> Self {
        Self {
            m,
            n,
            k,
            l,
            p,
            seed: 0,
            const_scale: 1.0,
            protocol,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_const_scale(mut self, const_scale: f64) -> Self {
        self.const_scale = const_scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return Err(Error::InvalidParameter(
                "m, n and k must all be >= 1".into(),
            ));
        }
        if self.l == 0 {
            return Err(Error::ZeroWidth);
        }
        if self.l >= 63 {
            return Err(Error::InvalidParameter(format!(
                "message width l = {} exceeds the supported 62 bits",
                self.l
            )));
        }
        if self.p.is_nan() || self.p < 1.0 {
            return Err(Error::InvalidLossOrder(self.p));
        }
        if self.const_scale.is_nan() || self.const_scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "const_scale must be positive, got {}",
                self.const_scale
            )));
        }
        Ok(())
    }
}

impl ProtocolConfig {
    /// Warn when the budget sits below `factor * const_scale * dim *
    /// log2(mn) * log2(n)`, the regularity margin the error analysis
    /// assumes. Runs proceed regardless.
    pub(crate) fn warn_below_regularity(&self, factor: f64, dim: usize, effective_l: usize) {
        let needed = factor
            * self.const_scale
            * dim as f64
            * ((self.m * self.n) as f64).log2()
            * (self.n as f64).log2().max(1.0);
        let budget = (self.m * effective_l) as f64;
        if budget < needed {
            log::warn!(
                "{} budget m*(l cap) = {budget} below the recommended {needed:.0} \
                 (factor {factor}, dimension {dim}, const_scale {})",
                self.protocol,
                self.const_scale
            );
        }
    }
}

/// Bits needed to index `k` symbols: `ceil(log2 k)`.
pub fn bits_for(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}
