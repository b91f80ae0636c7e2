//! Verbatim sample transmission, support selection, and the thresholding
//! protocols built on them.
//!
//! When a message can spell out whole samples (`l >= ceil(log2 k)` bits),
//! the cheapest estimator is a histogram over transmitted samples. The
//! refinement protocols here use that histogram to pick a small support set,
//! project the remaining encoders' samples onto it, and either refine the
//! surviving symbols or zero out everything else.

use crate::ar;
use crate::asr;
use crate::config::{bits_for, ProtocolConfig};
use crate::error::{Error, Result};
use crate::message::{BitMessage, Transcript};
use crate::protocol::ProtocolOutput;
use crate::randomness::SharedRandomness;
use crate::sampling::SampleMatrix;

/// Symbols whose rough estimate cleared a threshold, in ascending order,
/// plus the reserved index standing in for "everything else".
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    members: Vec<usize>,
    threshold: f64,
    full_k: usize,
}

impl SupportSet {
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The projected index reserved for out-of-support symbols.
    pub fn sentinel(&self) -> usize {
        self.members.len()
    }

    /// Alphabet size after projection: `|W'| + 1`.
    pub fn projected_k(&self) -> usize {
        self.members.len() + 1
    }

    /// Position of `w` inside the support, if it is a member.
    pub fn rank(&self, w: usize) -> Option<usize> {
        self.members.binary_search(&w).ok()
    }
}

/// Select every symbol whose rough estimate strictly exceeds `threshold`.
pub fn build_support(rough: &[f64], threshold: f64) -> Result<SupportSet> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "support threshold must be positive, got {threshold}"
        )));
    }
    let members = rough
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p > threshold)
        .map(|(w, _)| w)
        .collect();
    Ok(SupportSet {
        members,
        threshold,
        full_k: rough.len(),
    })
}

/// Map samples onto the support: members keep their rank, everything else
/// becomes the sentinel.
pub fn project_samples(samples: &SampleMatrix, support: &SupportSet) -> SampleMatrix {
    let sentinel = support.sentinel() as u32;
    samples.map_symbols(support.projected_k(), |w| {
        support
            .rank(w as usize)
            .map_or(sentinel, |rank| rank as u32)
    })
}

/// Pack each row's first `n0 = floor(l / ceil(log2 k))` samples verbatim
/// into its message and decode the histogram over everything received.
pub fn transmit_samples(
    rows: &[Vec<u32>],
    l: usize,
    k: usize,
) -> Result<(Vec<f64>, Vec<BitMessage>)> {
    if k == 1 {
        // Nothing to learn; no frame bits are needed to name the symbol.
        return Ok((vec![1.0], rows.iter().map(|_| BitMessage::zeros(l)).collect()));
    }
    let bits = bits_for(k);
    let n0 = l / bits;
    if n0 == 0 {
        return Err(Error::FrameTooNarrow { l, bits });
    }
    let mut histogram = vec![0usize; k];
    let mut received = 0usize;
    let messages = rows
        .iter()
        .map(|row| {
            let mut msg = BitMessage::zeros(l);
            for (j, &w) in row.iter().take(n0).enumerate() {
                msg.write_field(j * bits, bits, u64::from(w));
                histogram[w as usize] += 1;
                received += 1;
            }
            msg
        })
        .collect();
    let estimate = if received == 0 {
        vec![0.0; k]
    } else {
        histogram
            .into_iter()
            .map(|c| c as f64 / received as f64)
            .collect()
    };
    Ok((estimate, messages))
}

/// Plug-in protocol: every encoder transmits samples, the decoder keeps the
/// histogram.
pub fn run_plugin(cfg: &ProtocolConfig, samples: &SampleMatrix) -> Result<ProtocolOutput> {
    cfg.validate()?;
    check_dims(cfg, samples)?;
    let (estimate, messages) = transmit_samples(samples.rows(), cfg.l, cfg.k)?;
    let mut builder = Transcript::builder(cfg.m, cfg.l);
    builder.push_block(0, messages)?;
    ProtocolOutput::new(estimate, builder.finish()?)
}

/// Sample transmission, support selection at `2/n`, and refinement of the
/// support through the two-pass protocol on the projected alphabet. Off the
/// support the second plug-in estimate stands.
pub fn run_compress_refine(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
) -> Result<ProtocolOutput> {
    cfg.validate()?;
    check_dims(cfg, samples)?;
    let third = cfg.m / 3;
    if third == 0 {
        return Err(Error::InvalidParameter(
            "compress protocol needs at least 3 encoders".into(),
        ));
    }
    let rows = samples.rows();
    let (rough, msgs1) = transmit_samples(&rows[..third], cfg.l, cfg.k)?;
    let support = build_support(&rough, 2.0 / cfg.n as f64)?;
    let (plugin, msgs2) = transmit_samples(&rows[third..2 * third], cfg.l, cfg.k)?;

    let mut builder = Transcript::builder(cfg.m, cfg.l);
    builder.push_block(0, msgs1)?;
    builder.push_block(third, msgs2)?;

    let tail = 2 * third;
    let estimate = if support.is_empty() {
        for e in tail..cfg.m {
            builder.push(e, BitMessage::zeros(cfg.l))?;
        }
        plugin
    } else {
        let projected = project_samples(samples, &support);
        let mut stream = shared.stream("compress/refine");
        let (refined, msgs3) = ar::ar_core(
            &projected.rows()[tail..],
            cfg.n,
            support.projected_k(),
            cfg.l,
            cfg.l,
            &mut stream,
        )?;
        builder.push_block(tail, msgs3)?;
        (0..cfg.k)
            .map(|w| match support.rank(w) {
                Some(rank) => refined[rank],
                None => plugin[w],
            })
            .collect()
    };
    ProtocolOutput::new(estimate, builder.finish()?)
}

/// Which second stage the thresholding protocol runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdVariant {
    /// Threshold at `2/(ml)`; survivors keep the plug-in estimate.
    PLe2,
    /// Threshold at `2/k'`; survivors are refined on the projected alphabet.
    PGt2,
}

/// Thresholding protocol: symbols below the cut are estimated as exactly 0.
pub fn run_threshold(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    variant: ThresholdVariant,
    shared: &SharedRandomness,
) -> Result<ProtocolOutput> {
    cfg.validate()?;
    check_dims(cfg, samples)?;
    let half = cfg.m / 2;
    if half == 0 {
        return Err(Error::InvalidParameter(
            "threshold protocol needs at least 2 encoders".into(),
        ));
    }
    let rows = samples.rows();
    let (rough, msgs1) = transmit_samples(&rows[..half], cfg.l, cfg.k)?;
    let mut builder = Transcript::builder(cfg.m, cfg.l);
    builder.push_block(0, msgs1)?;

    let estimate = match variant {
        ThresholdVariant::PLe2 => {
            let threshold = 2.0 / (cfg.m * cfg.l) as f64;
            let support = build_support(&rough, threshold)?;
            let (plugin, msgs2) = transmit_samples(&rows[half..], cfg.l, cfg.k)?;
            builder.push_block(half, msgs2)?;
            (0..cfg.k)
                .map(|w| if support.rank(w).is_some() { plugin[w] } else { 0.0 })
                .collect()
        }
        ThresholdVariant::PGt2 => {
            let kprime = threshold_support_budget(cfg)?;
            let support = build_support(&rough, 2.0 / kprime)?;
            if support.is_empty() {
                for e in half..cfg.m {
                    builder.push(e, BitMessage::zeros(cfg.l))?;
                }
                vec![0.0; cfg.k]
            } else {
                let projected = project_samples(samples, &support);
                let mut stream = shared.stream("threshold/refine");
                let (refined, msgs2) = asr::asr_on_rows(
                    &projected.rows()[half..],
                    cfg.n,
                    support.projected_k(),
                    cfg.l,
                    false,
                    &mut stream,
                )?;
                builder.push_block(half, msgs2)?;
                (0..cfg.k)
                    .map(|w| support.rank(w).map_or(0.0, |rank| refined[rank]))
                    .collect()
            }
        }
    };
    ProtocolOutput::new(estimate, builder.finish()?)
}

/// `k' = ml / (2000 * const_scale * log2(mn) * log2(n))`, the refinable
/// support size the budget can carry.
pub fn threshold_support_budget(cfg: &ProtocolConfig) -> Result<f64> {
    let log_mn = ((cfg.m * cfg.n) as f64).log2();
    let log_n = (cfg.n as f64).log2();
    let denom = 2000.0 * cfg.const_scale * log_mn * log_n;
    let kprime = (cfg.m * cfg.l) as f64 / denom;
    if !kprime.is_finite() || kprime < 1.0 {
        return Err(Error::ThresholdBudgetTooTight { kprime });
    }
    Ok(kprime)
}

fn check_dims(cfg: &ProtocolConfig, samples: &SampleMatrix) -> Result<()> {
    if samples.m() != cfg.m || samples.n() != cfg.n || samples.k() != cfg.k {
        return Err(Error::InvalidParameter(
            "sample matrix disagrees with the config dimensions".into(),
        ));
    }
    Ok(())
}
