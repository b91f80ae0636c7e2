//! Two-pass estimation with budget reallocation.
//!
//! Every bit-slot of an encoder's message carries one user of a one-bit
//! subroutine aimed at a single symbol. The first half of the encoders
//! spreads its slots uniformly over the alphabet to produce a rough
//! estimate; the second half re-allocates its slots in proportion to that
//! estimate, so heavy symbols get refined by more users.

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::message::{BitMessage, Transcript};
use crate::onebit::{run_onebit, OneBitTask};
use crate::protocol::ProtocolOutput;
use crate::randomness::{fork, SharedRandomness, Stream};
use crate::sampling::SampleMatrix;

/// Mapping from `(encoder, bit-slot)` to `(symbol, replica)` for one pass.
#[derive(Debug, Clone)]
pub struct SlotAssignment {
    slots_per_encoder: usize,
    slot_map: Vec<Vec<Option<(usize, usize)>>>,
    users: Vec<Vec<(usize, usize)>>,
}

impl SlotAssignment {
    pub fn encoders(&self) -> usize {
        self.slot_map.len()
    }

    pub fn slots_per_encoder(&self) -> usize {
        self.slots_per_encoder
    }

    /// `(symbol, replica)` carried by a slot, if any.
    pub fn slot(&self, encoder: usize, slot: usize) -> Option<(usize, usize)> {
        self.slot_map[encoder][slot]
    }

    /// The `(encoder, slot)` pairs serving `symbol`, in replica order.
    pub fn users_of(&self, symbol: usize) -> &[(usize, usize)] {
        &self.users[symbol]
    }

    pub fn replica_counts(&self) -> Vec<usize> {
        self.users.iter().map(Vec::len).collect()
    }

    /// Slots occupied on each encoder; every entry is at most `l`.
    pub fn load_per_encoder(&self) -> Vec<usize> {
        self.slot_map
            .iter()
            .map(|slots| slots.iter().filter(|s| s.is_some()).count())
            .collect()
    }
}

/// Assign the requested number of replicas per symbol to encoder slots.
///
/// Tasks are enumerated in round-robin symbol order and packed into slots
/// left to right, so replica `r` of a symbol never sits on a later encoder
/// than replica `r + 1`.
fn schedule_slots(counts: &[usize], encoders: usize, l: usize) -> Result<SlotAssignment> {
    let total: usize = counts.iter().sum();
    if total > encoders * l {
        return Err(Error::InvalidParameter(format!(
            "{total} slot requests exceed the {} available",
            encoders * l
        )));
    }
    let k = counts.len();
    let mut slot_map = vec![vec![None; l]; encoders];
    let mut users = vec![Vec::new(); k];
    let mut remaining = counts.to_vec();
    let mut placed = 0;
    let mut next = 0usize;
    while placed < total {
        for w in 0..k {
            if remaining[w] == 0 {
                continue;
            }
            let encoder = next / l;
            let slot = next % l;
            let replica = users[w].len();
            slot_map[encoder][slot] = Some((w, replica));
            users[w].push((encoder, slot));
            remaining[w] -= 1;
            placed += 1;
            next += 1;
        }
    }
    Ok(SlotAssignment {
        slots_per_encoder: l,
        slot_map,
        users,
    })
}

/// Uniform slot plan for the rough pass: every symbol gets exactly
/// `m' = floor(2 * m_half * l / 2k)` replicas across `m_half` encoders.
pub fn allocate_rough(m_half: usize, k: usize, l: usize) -> Result<SlotAssignment> {
    let replicas = m_half * l / k;
    if replicas == 0 {
        return Err(Error::RoughBudgetExhausted);
    }
    schedule_slots(&vec![replicas; k], m_half, l)
}

/// Per-symbol encoder counts for the refinement pass:
/// `floor(m * l * (rough(w) + 1/k) / 4)`, capped at `floor(m / 2)`. A rough
/// estimate with total mass above 1 is first divided by its sum.
pub fn refine_counts(rough: &[f64], m: usize, l: usize, k: usize) -> Vec<usize> {
    let total: f64 = rough.iter().sum();
    let scale = if total > 1.0 { 1.0 / total } else { 1.0 };
    let cap = m / 2;
    rough
        .iter()
        .map(|&r| {
            let want = (m * l) as f64 * (r.max(0.0) * scale + 1.0 / k as f64) / 4.0;
            (want.floor() as usize).min(cap)
        })
        .collect()
}

/// Run one slot assignment: a one-bit subroutine per symbol, bits scattered
/// into the assigned message slots.
fn execute_pass(
    assignment: &SlotAssignment,
    rows: &[Vec<u32>],
    n: usize,
    k: usize,
    l_msg: usize,
    stream: &mut Stream,
) -> Result<(Vec<Option<f64>>, Vec<BitMessage>)> {
    let hists: Vec<Vec<u32>> = rows
        .iter()
        .map(|row| {
            let mut h = vec![0u32; k];
            for &w in row {
                h[w as usize] += 1;
            }
            h
        })
        .collect();
    let mut messages = vec![BitMessage::zeros(l_msg); rows.len()];
    let mut estimates = vec![None; k];
    for w in 0..k {
        let users = assignment.users_of(w);
        if users.is_empty() {
            continue;
        }
        let counts: Vec<u32> = users.iter().map(|&(e, _)| hists[e][w]).collect();
        let task = OneBitTask::new(n, counts, fork(stream))?;
        let run = run_onebit(task)?;
        for (&(e, s), &bit) in users.iter().zip(&run.bits) {
            messages[e].set(s, bit);
        }
        estimates[w] = Some(run.estimate);
    }
    Ok((estimates, messages))
}

/// The rough pass alone: the first half of the rows runs the uniform slot
/// plan, the rest send all-zero messages.
pub(crate) fn rough_pass(
    rows: &[Vec<u32>],
    n: usize,
    k: usize,
    l_msg: usize,
    l_eff: usize,
    stream: &mut Stream,
) -> Result<(Vec<f64>, Vec<BitMessage>)> {
    let m_rough = rows.len().div_ceil(2);
    let plan = allocate_rough(m_rough, k, l_eff)?;
    let (opt, mut messages) = execute_pass(&plan, &rows[..m_rough], n, k, l_msg, stream)?;
    messages.extend((m_rough..rows.len()).map(|_| BitMessage::zeros(l_msg)));
    Ok((opt.into_iter().map(Option::unwrap).collect(), messages))
}

/// Both passes over a row slice. `l_eff` caps how many slots of each `l_msg`
/// bit message are used. Returns the refined estimate and all messages in
/// encoder order.
pub(crate) fn ar_core(
    rows: &[Vec<u32>],
    n: usize,
    k: usize,
    l_msg: usize,
    l_eff: usize,
    stream: &mut Stream,
) -> Result<(Vec<f64>, Vec<BitMessage>)> {
    let m = rows.len();
    let m_rough = m.div_ceil(2);
    let m_refine = m - m_rough;

    let rough_plan = allocate_rough(m_rough, k, l_eff)?;
    let (rough_opt, mut messages) =
        execute_pass(&rough_plan, &rows[..m_rough], n, k, l_msg, stream)?;
    // Every symbol got at least one replica in the rough pass.
    let rough: Vec<f64> = rough_opt.into_iter().map(Option::unwrap).collect();

    let mut counts = refine_counts(&rough, m, l_eff, k);
    trim_to_budget(&mut counts, m_refine * l_eff);
    let plan = schedule_slots(&counts, m_refine, l_eff)?;
    let (refined, tail_msgs) = execute_pass(&plan, &rows[m_rough..], n, k, l_msg, stream)?;
    messages.extend(tail_msgs);

    let estimate = refined
        .into_iter()
        .zip(&rough)
        .map(|(r, &fallback)| r.unwrap_or(fallback))
        .collect();
    Ok((estimate, messages))
}

/// Drop excess replicas round-robin from the largest request down until the
/// demands fit the slot budget.
fn trim_to_budget(counts: &mut [usize], budget: usize) {
    let mut total: usize = counts.iter().sum();
    while total > budget {
        let (argmax, _) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .unwrap();
        counts[argmax] -= 1;
        total -= 1;
    }
}

/// Rough-then-refine protocol run: `m` messages of exactly `l` bits.
pub fn run_ar(
    cfg: &ProtocolConfig,
    samples: &SampleMatrix,
    shared: &SharedRandomness,
) -> Result<ProtocolOutput> {
    cfg.validate()?;
    if samples.m() != cfg.m || samples.n() != cfg.n || samples.k() != cfg.k {
        return Err(Error::InvalidParameter(
            "sample matrix disagrees with the config dimensions".into(),
        ));
    }
    if cfg.k > cfg.n {
        log::warn!("refinement protocol expects k <= n, got k = {} > n = {}", cfg.k, cfg.n);
    }
    cfg.warn_below_regularity(1000.0, cfg.k, cfg.l.min(cfg.k));
    let mut stream = shared.stream("ar");
    let (estimate, messages) = ar_core(samples.rows(), cfg.n, cfg.k, cfg.l, cfg.l, &mut stream)?;
    let mut builder = Transcript::builder(cfg.m, cfg.l);
    builder.push_block(0, messages)?;
    ProtocolOutput::new(estimate, builder.finish()?)
}
