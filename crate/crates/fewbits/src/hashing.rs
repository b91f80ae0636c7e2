//! Non-interactive estimation from single-sample encoders via random
//! hashing.
//!
//! Encoder `i` draws a table `h_i : [0, k) -> [0, 2^l)` of i.i.d. uniform
//! buckets from shared randomness and sends `B_i = h_i(W_i)`. The decoder
//! regenerates every table, counts bucket matches per symbol, and rescales
//! the match fraction so random collisions cancel in expectation:
//! `P[h_i(w) = B_i] = p(w) + (1 - p(w)) / 2^l`.

use rand::Rng;

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::message::{BitMessage, Transcript};
use crate::protocol::ProtocolOutput;
use crate::randomness::SharedRandomness;
use crate::sampling::SampleMatrix;

/// Per-encoder hash tables reproducible from the shared seed.
#[derive(Debug, Clone)]
pub struct HashFamily {
    tables: Vec<Vec<u64>>,
    l: usize,
}

impl HashFamily {
    /// Draw `m` tables of `k` uniform buckets from streams labeled
    /// `("hash", i)`.
    pub fn generate(shared: &SharedRandomness, m: usize, k: usize, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::ZeroWidth);
        }
        if l >= 63 {
            return Err(Error::InvalidParameter(format!(
                "hash width l = {l} exceeds the supported 62 bits"
            )));
        }
        let buckets = 1u64 << l;
        let tables = (0..m)
            .map(|i| {
                let mut stream = shared.indexed("hash", i as u64);
                (0..k).map(|_| stream.random_range(0..buckets)).collect()
            })
            .collect();
        Ok(Self { tables, l })
    }

    pub fn m(&self) -> usize {
        self.tables.len()
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Bucket of symbol `w` under encoder `i`'s table.
    pub fn bucket(&self, i: usize, w: u32) -> u64 {
        self.tables[i][w as usize]
    }
}

/// Encoder `i`'s message: the `l`-bit bucket index of its single sample.
pub fn hash_encode(family: &HashFamily, i: usize, sample: u32) -> BitMessage {
    BitMessage::from_value(family.bucket(i, sample), family.l)
}

/// Rescaled match-count decoder. The raw output can be negative; callers
/// clip before reporting risk.
pub fn hash_estimate(
    transcript: &Transcript,
    family: &HashFamily,
    k: usize,
    l: usize,
    m: usize,
) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(Error::ZeroWidth);
    }
    if transcript.len() != m || family.m() != m {
        return Err(Error::DimensionMismatch {
            got: transcript.len(),
            want: m,
        });
    }
    let buckets = (1u64 << l) as f64;
    let gain = buckets / (buckets - 1.0);
    let offset = 1.0 / (buckets - 1.0);
    let received: Vec<u64> = transcript.messages().iter().map(BitMessage::value).collect();
    Ok((0..k)
        .map(|w| {
            let matches = (0..m)
                .filter(|&i| family.bucket(i, w as u32) == received[i])
                .count();
            gain * (matches as f64 / m as f64) - offset
        })
        .collect())
}

/// The full non-interactive protocol for single-sample encoders.
pub fn run_hash(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
) -> Result<ProtocolOutput> {
    cfg.validate()?;
    if cfg.n != 1 {
        return Err(Error::NeedsSingleSample(cfg.n));
    }
    if samples.m() != cfg.m || samples.n() != 1 || samples.k() != cfg.k {
        return Err(Error::InvalidParameter(
            "sample matrix disagrees with the config dimensions".into(),
        ));
    }
    let family = HashFamily::generate(shared, cfg.m, cfg.k, cfg.l)?;
    let mut builder = Transcript::builder(cfg.m, cfg.l);
    for i in 0..cfg.m {
        builder.push(i, hash_encode(&family, i, samples.row(i)[0]))?;
    }
    let transcript = builder.finish()?;
    let raw = hash_estimate(&transcript, &family, cfg.k, cfg.l, cfg.m)?;
    ProtocolOutput::new(raw, transcript)
}
