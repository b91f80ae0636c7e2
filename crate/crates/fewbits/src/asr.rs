//! Divide-and-conquer estimation over a block partition.
//!
//! When the alphabet is too large for a message to address directly, the
//! symbols are grouped into blocks small enough that one `l0`-bit frame can
//! name any in-block symbol (or "empty"). The block distribution is
//! estimated first, recursively, since it is a smaller instance of the same
//! problem. Frames are then allocated to blocks in proportion to the
//! estimated block masses to pin down the conditional distribution within
//! each block.

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::message::{BitMessage, Transcript};
use crate::protocol::ProtocolOutput;
use crate::randomness::{SharedRandomness, Stream};
use crate::sampling::SampleMatrix;

/// A division of `[0, k)` into `t` contiguous blocks of at most
/// `2^{l0} - 1` symbols, so one `l0`-bit frame can carry "empty" (0) or an
/// in-block index (1..).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    k: usize,
    l0: usize,
    block_size: usize,
    t: usize,
}

/// Contiguous blocks of `2^{l0} - 1` symbols, the last possibly smaller.
pub fn block_partition(k: usize, l0: usize) -> Result<BlockPartition> {
    if k == 0 {
        return Err(Error::InvalidParameter("alphabet size k must be >= 1".into()));
    }
    if l0 == 0 || l0 >= 63 {
        return Err(Error::InvalidParameter(format!(
            "frame width l0 = {l0} outside [1, 62]"
        )));
    }
    let block_size = (1usize << l0) - 1;
    Ok(BlockPartition {
        k,
        l0,
        block_size,
        t: k.div_ceil(block_size),
    })
}

impl BlockPartition {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l0(&self) -> usize {
        self.l0
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn block_of(&self, w: u32) -> u32 {
        w / self.block_size as u32
    }

    pub fn start(&self, s: usize) -> usize {
        s * self.block_size
    }

    pub fn size(&self, s: usize) -> usize {
        (self.k - self.start(s)).min(self.block_size)
    }

    /// Index of `w` inside its block.
    pub fn offset_within(&self, w: u32) -> u32 {
        w % self.block_size as u32
    }

    /// Push a distribution over `[0, k)` forward onto the blocks.
    pub fn push_forward(&self, probs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.t];
        for (w, &p) in probs.iter().enumerate() {
            out[self.block_of(w as u32) as usize] += p;
        }
        out
    }
}

/// Frame quotas and their placement on encoders for one subroutine call.
#[derive(Debug, Clone)]
pub struct FramePlan {
    n0: usize,
    quotas: Vec<usize>,
    per_encoder: Vec<Vec<usize>>,
    block_frames: Vec<Vec<(usize, usize)>>,
}

impl FramePlan {
    /// Frames per encoder message.
    pub fn n0(&self) -> usize {
        self.n0
    }

    /// `N_s`: frames allocated to each block.
    pub fn quotas(&self) -> &[usize] {
        &self.quotas
    }

    /// Block id carried by each occupied frame slot of an encoder.
    pub fn encoder_slots(&self, e: usize) -> &[usize] {
        &self.per_encoder[e]
    }

    /// The `(encoder, frame-slot)` pairs serving block `s`, in decode order.
    pub fn frames_of(&self, s: usize) -> &[(usize, usize)] {
        &self.block_frames[s]
    }
}

/// Allocate `N_s = floor(m' * n0 * r(s))` frames to each block, walking the
/// encoders round-robin with a rolling cursor. The walk keeps per-encoder
/// loads within one of each other, which bounds them by `n0`, and gives
/// every encoder at most `ceil(n0 * r(s))` frames for block `s`.
pub fn plan_frames(m_prime: usize, n0: usize, r: &[f64]) -> FramePlan {
    let t = r.len();
    let mut quotas = vec![0usize; t];
    let mut per_encoder = vec![Vec::new(); m_prime];
    let mut block_frames = vec![Vec::new(); t];
    if m_prime == 0 {
        return FramePlan {
            n0,
            quotas,
            per_encoder,
            block_frames,
        };
    }
    let mut cursor = 0usize;
    for s in 0..t {
        let quota = ((m_prime * n0) as f64 * r[s]).floor() as usize;
        quotas[s] = quota;
        for j in 0..quota {
            let e = (cursor + j) % m_prime;
            let slot = per_encoder[e].len();
            per_encoder[e].push(s);
            block_frames[s].push((e, slot));
        }
        cursor = (cursor + quota) % m_prime;
    }
    FramePlan {
        n0,
        quotas,
        per_encoder,
        block_frames,
    }
}

/// Output of one subroutine call: the combined estimate, the participating
/// encoders' messages, and the per-block conditional estimates.
#[derive(Debug, Clone)]
pub struct SubroutineRun {
    pub estimate: Vec<f64>,
    pub messages: Vec<BitMessage>,
    pub conditionals: Vec<Vec<f64>>,
}

/// One refinement step: given an estimate of the block distribution, spend
/// the encoders' frames on in-block samples and return the combined
/// per-symbol estimate.
///
/// With `uniform_alloc` the frame shares are `1/t` instead of the block
/// estimate, which removes the only use of feedback and makes the step
/// non-interactive.
pub fn asr_sub(
    rows: &[Vec<u32>],
    n: usize,
    partition: &BlockPartition,
    block_estimate: &[f64],
    l: usize,
    l0: usize,
    uniform_alloc: bool,
) -> Result<SubroutineRun> {
    if l0 > l {
        return Err(Error::FrameWiderThanMessage { l0, l });
    }
    if l0 != partition.l0() {
        return Err(Error::InvalidParameter(format!(
            "frame width {l0} disagrees with the partition's {}",
            partition.l0()
        )));
    }
    let t = partition.t();
    if block_estimate.len() != t {
        return Err(Error::BlockCountMismatch {
            got: block_estimate.len(),
            want: t,
        });
    }
    let m_prime = rows.len();
    let r: Vec<f64> = if uniform_alloc {
        vec![1.0 / t as f64; t]
    } else {
        let total: f64 = block_estimate.iter().map(|&b| b.max(0.0)).sum();
        let scale = if total > 1.0 { 1.0 / total } else { 1.0 };
        block_estimate.iter().map(|&b| b.max(0.0) * scale).collect()
    };
    let n0 = (l / l0).min(n);
    let plan = plan_frames(m_prime, n0, &r);

    // Encode: each of an encoder's frames for block s addresses one of
    // ceil(n0 * r(s)) equal contiguous parts of its sample row and carries
    // the first in-block sample of that part, or 0 if the part has none.
    let mut messages = vec![BitMessage::zeros(l); m_prime];
    for (e, row) in rows.iter().enumerate() {
        let mut prev_block = usize::MAX;
        let mut part = 0usize;
        for (slot, &s) in plan.encoder_slots(e).iter().enumerate() {
            part = if s == prev_block { part + 1 } else { 0 };
            prev_block = s;
            let cap = (n0 as f64 * r[s]).ceil() as usize;
            debug_assert!(part < cap.max(1));
            let part_len = n.checked_div(cap).unwrap_or(0);
            let mut value = 0u64;
            if part_len > 0 {
                for &w in &row[part * part_len..(part + 1) * part_len] {
                    if partition.block_of(w) as usize == s {
                        value = u64::from(partition.offset_within(w)) + 1;
                        break;
                    }
                }
            }
            messages[e].write_field(slot * l0, l0, value);
        }
    }

    // Decode each block's frames into a conditional estimate, falling back
    // to uniform over the block when every frame came back empty.
    let mut conditionals = Vec::with_capacity(t);
    let mut estimate = vec![0.0; partition.k()];
    for s in 0..t {
        let size = partition.size(s);
        let mut counts = vec![0usize; size];
        let mut nonempty = 0usize;
        for &(e, slot) in plan.frames_of(s) {
            let v = messages[e].read_field(slot * l0, l0);
            if v > 0 {
                debug_assert!((v as usize) <= size);
                counts[v as usize - 1] += 1;
                nonempty += 1;
            }
        }
        let conditional: Vec<f64> = if nonempty > 0 {
            counts
                .iter()
                .map(|&c| c as f64 / nonempty as f64)
                .collect()
        } else {
            vec![1.0 / size as f64; size]
        };
        for (j, &c) in conditional.iter().enumerate() {
            estimate[partition.start(s) + j] = block_estimate[s] * c;
        }
        conditionals.push(conditional);
    }
    Ok(SubroutineRun {
        estimate,
        messages,
        conditionals,
    })
}

/// One recorded refinement level of a traced run, with the map from the
/// original alphabet onto this level's, so ground truth can be pushed
/// forward when scoring a run.
#[derive(Debug, Clone)]
pub struct ReductionStep {
    pub level_k: usize,
    pub to_level: Vec<u32>,
    pub partition: BlockPartition,
    pub block_estimate: Vec<f64>,
    pub conditionals: Vec<Vec<f64>>,
    pub combined: Vec<f64>,
}

/// The alphabet-size chain `k_1 = k`, `k_{u+1} = ceil(k_u / (2^l - 1))`,
/// stopped at the first value at most `n * (2^l - 1)`.
pub fn reduction_chain(k: usize, n: usize, l: usize) -> Result<Vec<usize>> {
    if l < 2 {
        return Err(Error::InvalidParameter(
            "reduction needs l >= 2 to shrink the alphabet".into(),
        ));
    }
    let block = (1usize << l) - 1;
    let mut chain = vec![k];
    while *chain.last().unwrap() > n * block {
        chain.push(chain.last().unwrap().div_ceil(block));
    }
    Ok(chain)
}

fn smallest_frame_width(k: usize, n: usize) -> usize {
    // Smallest l0 with (2^{l0} - 1) * n >= k.
    let mut l0 = 1;
    while ((1usize << l0) - 1).saturating_mul(n) < k {
        l0 += 1;
    }
    l0
}

fn map_rows(rows: &[Vec<u32>], partition: &BlockPartition) -> Vec<Vec<u32>> {
    rows.iter()
        .map(|row| row.iter().map(|&w| partition.block_of(w)).collect())
        .collect()
}

/// Recursive protocol body. `ancestry` maps the original alphabet onto the
/// current one so traced steps can be scored against ground truth.
#[allow(clippy::too_many_arguments)]
fn asr_core(
    rows: &[Vec<u32>],
    n: usize,
    k: usize,
    l: usize,
    uniform_alloc: bool,
    stream: &mut Stream,
    ancestry: &[u32],
    trace: &mut Vec<ReductionStep>,
) -> Result<(Vec<f64>, Vec<BitMessage>)> {
    if k <= n {
        // Small alphabet: the rough pass alone already spends the budget
        // well; cap the usable slots at k.
        let l_eff = l.min(k);
        return crate::ar::rough_pass(rows, n, k, l, l_eff, stream);
    }

    let m = rows.len();
    let budget_cap = ((1usize << l.min(62)) - 1).saturating_mul(n);
    if k <= budget_cap {
        // One partition level: estimate the block distribution on the
        // first half, then refine within blocks on the second half.
        let l0 = smallest_frame_width(k, n);
        debug_assert!(l0 <= l);
        let partition = block_partition(k, l0)?;
        let t = partition.t();
        debug_assert!(t <= n);
        let h1 = m.div_ceil(2);
        let block_rows = map_rows(&rows[..h1], &partition);
        let block_ancestry: Vec<u32> = ancestry.iter().map(|&w| partition.block_of(w)).collect();
        let (block_est, mut messages) = asr_core(
            &block_rows,
            n,
            t,
            l,
            uniform_alloc,
            stream,
            &block_ancestry,
            trace,
        )?;
        let sub = asr_sub(&rows[h1..], n, &partition, &block_est, l, l0, uniform_alloc)?;
        trace.push(ReductionStep {
            level_k: k,
            to_level: ancestry.to_vec(),
            partition,
            block_estimate: block_est,
            conditionals: sub.conditionals,
            combined: sub.estimate.clone(),
        });
        messages.extend(sub.messages);
        return Ok((sub.estimate, messages));
    }

    // Deep reduction: shrink the alphabet level by level until one frame
    // can address a block, estimate the smallest level, then walk back up.
    let chain = reduction_chain(k, n, l)?;
    let a = chain.len() - 1;
    if m >> (a + 1) == 0 {
        return Err(Error::RecursionStarved { depth: a });
    }
    let partitions: Vec<BlockPartition> = chain[..a]
        .iter()
        .map(|&ku| block_partition(ku, l))
        .collect::<Result<_>>()?;
    for (u, part) in partitions.iter().enumerate() {
        debug_assert_eq!(part.t(), chain[u + 1]);
    }

    // Ancestry of each level, original alphabet -> level alphabet.
    let mut ancestries: Vec<Vec<u32>> = vec![ancestry.to_vec()];
    for part in &partitions {
        let prev = ancestries.last().unwrap();
        ancestries.push(prev.iter().map(|&w| part.block_of(w)).collect());
    }

    let h1 = m.div_ceil(2);
    let mut top_rows = rows[..h1].to_vec();
    for part in &partitions {
        top_rows = map_rows(&top_rows, part);
    }
    let (mut current, mut messages) = asr_core(
        &top_rows,
        n,
        chain[a],
        l,
        uniform_alloc,
        stream,
        &ancestries[a],
        trace,
    )?;

    let mut offset = h1;
    for u in (1..=a).rev() {
        let m_u = m >> (u + 1);
        if m_u == 0 {
            return Err(Error::RecursionStarved { depth: u });
        }
        let mut level_rows = rows[offset..offset + m_u].to_vec();
        for part in &partitions[..u - 1] {
            level_rows = map_rows(&level_rows, part);
        }
        let sub = asr_sub(&level_rows, n, &partitions[u - 1], &current, l, l, uniform_alloc)?;
        trace.push(ReductionStep {
            level_k: chain[u - 1],
            to_level: ancestries[u - 1].clone(),
            partition: partitions[u - 1].clone(),
            block_estimate: current,
            conditionals: sub.conditionals,
            combined: sub.estimate.clone(),
        });
        messages.extend(sub.messages);
        current = sub.estimate;
        offset += m_u;
    }
    messages.extend((offset..m).map(|_| BitMessage::zeros(l)));
    Ok((current, messages))
}

/// Entry point for other protocols that refine a projected alphabet.
pub(crate) fn asr_on_rows(
    rows: &[Vec<u32>],
    n: usize,
    k: usize,
    l: usize,
    uniform_alloc: bool,
    stream: &mut Stream,
) -> Result<(Vec<f64>, Vec<BitMessage>)> {
    let ancestry: Vec<u32> = (0..k as u32).collect();
    let mut trace = Vec::new();
    asr_core(rows, n, k, l, uniform_alloc, stream, &ancestry, &mut trace)
}

fn run_impl(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
    uniform_alloc: bool,
) -> Result<(ProtocolOutput, Vec<ReductionStep>)> {
    cfg.validate()?;
    if samples.m() != cfg.m || samples.n() != cfg.n || samples.k() != cfg.k {
        return Err(Error::InvalidParameter(
            "sample matrix disagrees with the config dimensions".into(),
        ));
    }
    let budget_cap = ((1usize << cfg.l.min(62)) - 1).saturating_mul(cfg.n);
    if cfg.k <= cfg.n {
        cfg.warn_below_regularity(1000.0, cfg.k, cfg.l.min(cfg.k));
    } else if cfg.k <= budget_cap {
        cfg.warn_below_regularity(2000.0, cfg.n, cfg.l.min(cfg.n));
    } else {
        cfg.warn_below_regularity(4000.0, cfg.n, cfg.l.min(cfg.n));
    }
    let mut stream = shared.stream("asr");
    let ancestry: Vec<u32> = (0..cfg.k as u32).collect();
    let mut trace = Vec::new();
    let (estimate, messages) = asr_core(
        samples.rows(),
        cfg.n,
        cfg.k,
        cfg.l,
        uniform_alloc,
        &mut stream,
        &ancestry,
        &mut trace,
    )?;
    let mut builder = Transcript::builder(cfg.m, cfg.l);
    builder.push_block(0, messages)?;
    Ok((ProtocolOutput::new(estimate, builder.finish()?)?, trace))
}

/// Case-dispatched successive refinement with feedback-driven allocation.
pub fn run_asr(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
) -> Result<ProtocolOutput> {
    run_impl(cfg, samples, shared, false).map(|(out, _)| out)
}

/// The non-interactive variant: frame shares are uniform over blocks.
pub fn run_asr_uniform(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
) -> Result<ProtocolOutput> {
    run_impl(cfg, samples, shared, true).map(|(out, _)| out)
}

/// Like [`run_asr`], additionally returning every refinement level for
/// inspection.
pub fn run_asr_traced(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
    uniform_alloc: bool,
) -> Result<(ProtocolOutput, Vec<ReductionStep>)> {
    run_impl(cfg, samples, shared, uniform_alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProtocolKind;
    use crate::dist::Distribution;
    use crate::sampling::sample;

    #[test]
    fn partition_examples() {
        let p = block_partition(7, 2).unwrap();
        assert_eq!(p.t(), 3);
        assert_eq!((p.size(0), p.size(1), p.size(2)), (3, 3, 1));
        assert_eq!(p.block_of(5), 1);
        assert_eq!(p.offset_within(5), 2);

        assert_eq!(block_partition(3, 2).unwrap().t(), 1);
        assert_eq!(block_partition(1, 1).unwrap().t(), 1);
    }

    #[test]
    fn frame_plan_example() {
        // m' = 10, l = 4, l0 = 2, n = 5, r(s) = 0.5: two frames per message,
        // quota 10, at most one frame per encoder for the block.
        let r = [0.5, 0.5];
        let plan = plan_frames(10, 2, &r);
        assert_eq!(plan.n0(), 2);
        assert_eq!(plan.quotas(), &[10, 10]);
        for e in 0..10 {
            let slots = plan.encoder_slots(e);
            assert!(slots.iter().filter(|&&s| s == 0).count() <= 1);
            assert!(slots.len() <= 2);
        }
    }

    fn plan_is_feasible(m_prime: usize, n0: usize, r: &[f64]) {
        let plan = plan_frames(m_prime, n0, r);
        for (s, &q) in plan.quotas().iter().enumerate() {
            assert_eq!(q, ((m_prime * n0) as f64 * r[s]).floor() as usize);
            assert_eq!(plan.frames_of(s).len(), q);
        }
        for e in 0..m_prime {
            let slots = plan.encoder_slots(e);
            assert!(slots.len() <= n0, "encoder {e} got {} > n0 frames", slots.len());
            let mut by_block = std::collections::HashMap::new();
            for &s in slots {
                *by_block.entry(s).or_insert(0usize) += 1;
            }
            for (&s, &c) in &by_block {
                let cap = (n0 as f64 * r[s]).ceil() as usize;
                assert!(c <= cap, "encoder {e} holds {c} frames of block {s}, cap {cap}");
            }
        }
    }

    #[test]
    fn frame_plans_feasible_across_shapes() {
        plan_is_feasible(10, 2, &[0.5, 0.5]);
        plan_is_feasible(3, 4, &[0.9, 0.05, 0.05]);
        plan_is_feasible(7, 3, &[0.2; 5]);
        plan_is_feasible(1, 6, &[0.3, 0.3, 0.4]);
        plan_is_feasible(5, 1, &[1.0]);
        plan_is_feasible(4, 3, &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn subroutine_fallback_and_point_mass() {
        let part = block_partition(9, 2).unwrap();
        // No encoders at all: every block falls back to uniform.
        let sub = asr_sub(&[], 4, &part, &[0.3, 0.3, 0.4], 4, 2, false).unwrap();
        assert_eq!(sub.conditionals[0], vec![1.0 / 3.0; 3]);
        assert!((sub.estimate[0] - 0.1).abs() < 1e-12);

        // Point mass: every nonempty frame carries the same symbol.
        let rows: Vec<Vec<u32>> = (0..6).map(|_| vec![4u32; 8]).collect();
        let sub = asr_sub(&rows, 8, &part, &[0.0, 1.0, 0.0], 4, 2, false).unwrap();
        assert!((sub.estimate[4] - 1.0).abs() < 1e-12);
        assert_eq!(sub.conditionals[1][1], 1.0);
    }

    #[test]
    fn subroutine_rejects_mismatches() {
        let part = block_partition(9, 2).unwrap();
        assert!(matches!(
            asr_sub(&[], 4, &part, &[0.5, 0.5], 4, 2, false),
            Err(Error::BlockCountMismatch { .. })
        ));
        assert!(matches!(
            asr_sub(&[], 4, &part, &[0.3, 0.3, 0.4], 1, 2, false),
            Err(Error::FrameWiderThanMessage { .. })
        ));
    }

    #[test]
    fn chain_example() {
        let chain = reduction_chain(100, 2, 2).unwrap();
        assert_eq!(chain, vec![100, 34, 12, 4]);
    }

    #[test]
    fn medium_alphabet_uses_one_level() {
        // k = 7, n = 4, l = 3: frame width 2, three blocks.
        assert_eq!(smallest_frame_width(7, 4), 2);
        assert_eq!(block_partition(7, 2).unwrap().t(), 3);
    }

    #[test]
    fn small_alphabet_matches_rough_pass() {
        let cfg = ProtocolConfig::new(64, 16, 8, 3, 2.0, ProtocolKind::Asr);
        let truth = Distribution::uniform(8);
        let shared = SharedRandomness::new(5);
        let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
        let out = run_asr(&cfg, &samples, &shared).unwrap();
        let mut stream = shared.stream("asr");
        let (want, _) = crate::ar::rough_pass(samples.rows(), 16, 8, 3, 3, &mut stream).unwrap();
        assert_eq!(out.raw, want);
    }

    #[test]
    fn deep_recursion_runs_and_audits() {
        // k = 100 > (2^2 - 1) * 2: three subroutine levels below the base.
        let cfg = ProtocolConfig::new(512, 2, 100, 2, 2.0, ProtocolKind::Asr);
        let truth = Distribution::uniform(100);
        let shared = SharedRandomness::new(6);
        let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
        let (out, trace) = run_asr_traced(&cfg, &samples, &shared, false).unwrap();
        assert_eq!(out.transcript.len(), cfg.m);
        assert!(out.transcript.ledger().iter().all(|&b| b == cfg.l));
        assert_eq!(trace.len(), 4);
        assert_eq!(trace.last().unwrap().level_k, 100);
        // Conditional estimates are distributions over their blocks.
        for step in &trace {
            for cond in &step.conditionals {
                let total: f64 = cond.iter().sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn starved_recursion_errors() {
        let cfg = ProtocolConfig::new(4, 2, 4000, 2, 2.0, ProtocolKind::Asr);
        let truth = Distribution::uniform(4000);
        let shared = SharedRandomness::new(7);
        let samples = sample(&truth, cfg.m, cfg.n, &mut shared.stream("samples"));
        assert!(matches!(
            run_asr(&cfg, &samples, &shared),
            Err(Error::RecursionStarved { .. })
        ));
    }
}
