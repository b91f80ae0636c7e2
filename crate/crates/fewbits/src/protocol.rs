//! The common protocol surface: every protocol consumes a sample matrix and
//! shared randomness and yields an estimate plus a fully budgeted
//! transcript.

use crate::ar;
use crate::asr;
use crate::compress::{self, ThresholdVariant};
use crate::config::{ProtocolConfig, ProtocolKind};
use crate::dist::clip_to_unit;
use crate::error::{Error, Result};
use crate::hashing;
use crate::message::{BitMessage, Transcript};
use crate::onebit::{run_onebit, OneBitTask};
use crate::randomness::SharedRandomness;
use crate::sampling::SampleMatrix;

/// A protocol run's decoder output in both forms, plus the message record.
///
/// `raw` is whatever the decoder computed (possibly outside `[0, 1]`);
/// `clipped` is its coordinatewise projection onto `[0, 1]` and is what risk
/// reports score. Unbiasedness checks read `raw`.
#[derive(Debug, Clone)]
pub struct ProtocolOutput {
    pub raw: Vec<f64>,
    pub clipped: Vec<f64>,
    pub transcript: Transcript,
}

impl ProtocolOutput {
    pub fn new(raw: Vec<f64>, transcript: Transcript) -> Result<Self> {
        let clipped = clip_to_unit(&raw)?;
        Ok(Self {
            raw,
            clipped,
            transcript,
        })
    }
}

/// Execute the protocol selected by `cfg.protocol`.
pub fn run_protocol(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
) -> Result<ProtocolOutput> {
    match cfg.protocol {
        ProtocolKind::Ar => ar::run_ar(cfg, samples, shared),
        ProtocolKind::Asr => asr::run_asr(cfg, samples, shared),
        ProtocolKind::AsrUniform => asr::run_asr_uniform(cfg, samples, shared),
        ProtocolKind::CompressRefine => compress::run_compress_refine(cfg, samples, shared),
        ProtocolKind::ThresholdLe2 => {
            compress::run_threshold(cfg, samples, ThresholdVariant::PLe2, shared)
        }
        ProtocolKind::ThresholdGt2 => {
            compress::run_threshold(cfg, samples, ThresholdVariant::PGt2, shared)
        }
        ProtocolKind::Hash => hashing::run_hash(cfg, samples, shared),
        ProtocolKind::OneBit => run_one_bit_protocol(cfg, samples, shared),
        ProtocolKind::PlugIn => compress::run_plugin(cfg, samples),
        ProtocolKind::ConstantUniform => run_constant_uniform(cfg, samples),
    }
}

/// The binary one-bit subroutine exposed as a k = 2 protocol: each encoder
/// is one user and spends exactly one of its bits.
fn run_one_bit_protocol(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
) -> Result<ProtocolOutput> {
    cfg.validate()?;
    if cfg.k != 2 {
        return Err(Error::InvalidParameter(format!(
            "one-bit protocol estimates a binary distribution, got k = {}",
            cfg.k
        )));
    }
    if samples.m() != cfg.m || samples.n() != cfg.n || samples.k() != 2 {
        return Err(Error::InvalidParameter(
            "sample matrix disagrees with the config dimensions".into(),
        ));
    }
    let counts: Vec<u32> = (0..cfg.m)
        .map(|i| samples.row(i).iter().filter(|&&w| w == 0).count() as u32)
        .collect();
    let task = OneBitTask::new(cfg.n, counts, shared.stream("one-bit"))?;
    let run = run_onebit(task)?;
    let mut builder = Transcript::builder(cfg.m, cfg.l);
    for (i, &bit) in run.bits.iter().enumerate() {
        let mut msg = BitMessage::zeros(cfg.l);
        msg.set(0, bit);
        builder.push(i, msg)?;
    }
    ProtocolOutput::new(
        vec![run.estimate, 1.0 - run.estimate],
        builder.finish()?,
    )
}

/// Baseline that ignores the data: useful as a null for scaling fits.
fn run_constant_uniform(cfg: &ProtocolConfig, samples: &SampleMatrix) -> Result<ProtocolOutput> {
    cfg.validate()?;
    if samples.m() != cfg.m {
        return Err(Error::InvalidParameter(
            "sample matrix disagrees with the config dimensions".into(),
        ));
    }
    let messages = (0..cfg.m).map(|_| BitMessage::zeros(cfg.l)).collect();
    ProtocolOutput::new(
        vec![1.0 / cfg.k as f64; cfg.k],
        Transcript::from_messages(messages),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::sampling::sample;

    #[test]
    fn one_bit_protocol_consumes_one_bit_per_encoder() {
        let cfg = ProtocolConfig::new(500, 50, 2, 1, 2.0, ProtocolKind::OneBit);
        let truth = Distribution::new(vec![0.3, 0.7]).unwrap();
        let shared = SharedRandomness::new(11);
        let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
        let out = run_protocol(&cfg, &samples, &shared).unwrap();
        assert_eq!(out.transcript.len(), 500);
        assert!(out.transcript.ledger().iter().all(|&b| b == 1));
        assert!((out.raw[0] + out.raw[1] - 1.0).abs() < 1e-12);
        assert!((out.raw[0] - 0.3).abs() < 0.1);
    }

    #[test]
    fn constant_uniform_ignores_samples() {
        let cfg = ProtocolConfig::new(4, 3, 5, 2, 2.0, ProtocolKind::ConstantUniform);
        let truth = Distribution::point_mass(5, 1).unwrap();
        let shared = SharedRandomness::new(12);
        let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
        let out = run_protocol(&cfg, &samples, &shared).unwrap();
        assert_eq!(out.raw, vec![0.2; 5]);
        assert_eq!(out.transcript.total_bits(), 8);
    }
}
