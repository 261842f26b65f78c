//! A-MPDU sizing against the TxOP budget, SU and MU.

use alloc::vec::Vec;

use crate::rates_framing::{
    ampdu_subframe_octets, legacy_frame_us, ppdu_duration, AggScheme, Mcs, PreambleFormat,
    TimingParams, BA_OCTETS,
};

/// PPDU time limit applied when the access category has no TxOP limit.
pub const MAX_PPDU_US: f64 = 5484.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggLimits {
    pub txop_limit_us: u32,
    pub max_mpdus: usize,
    /// Response time reserved inside the TxOP (SIFS + BA).
    pub response_us: f64,
}

impl AggLimits {
    pub fn new(t: &TimingParams, txop_limit_us: u32, max_mpdus: usize, control_rate_bps: f64) -> Self {
        AggLimits {
            txop_limit_us,
            max_mpdus,
            response_us: t.sifs_us as f64 + legacy_frame_us(t, BA_OCTETS, control_rate_bps),
        }
    }

    fn budget_us(&self) -> f64 {
        if self.txop_limit_us == 0 {
            MAX_PPDU_US
        } else {
            self.txop_limit_us as f64 - self.response_us
        }
    }
}

/// Number of head-of-queue MPDUs (sizes in `queue`) that fit one PPDU at `mcs`.
/// At least one MPDU is always taken when the queue is non-empty.
pub fn assemble_ampdu(
    t: &TimingParams,
    format: PreambleFormat,
    mcs: &Mcs,
    n_ltf: usize,
    queue: &[usize],
    limits: &AggLimits,
) -> usize {
    let budget = limits.budget_us();
    let mut octets = 0;
    let mut n = 0;
    for &m in queue.iter().take(limits.max_mpdus.max(1)) {
        let next = octets + ampdu_subframe_octets(m);
        if n > 0 && ppdu_duration(t, format, mcs, next, n_ltf) > budget {
            break;
        }
        octets = next;
        n += 1;
    }
    n
}

/// Horizontal splitting: counts per block when `n` MPDUs go out on `blocks` blocks.
pub fn split_counts(n: usize, scheme: AggScheme, blocks: usize) -> Vec<usize> {
    match scheme {
        AggScheme::Vertical => alloc::vec![n],
        AggScheme::Horizontal => {
            let b = blocks.max(1);
            (0..b).map(|i| n / b + usize::from(i >= b - n % b)).collect()
        }
    }
}

/// Per-user MPDU counts for an MU PPDU whose members pad to the longest duration.
/// Returns the counts and the common PPDU duration.
pub fn assemble_mu(
    t: &TimingParams,
    mcs_per_user: &[Mcs],
    n_ltf: usize,
    queues: &[&[usize]],
    limits: &AggLimits,
) -> (Vec<usize>, f64) {
    let mut counts = Vec::with_capacity(queues.len());
    let mut dur: f64 = 0.0;
    for (q, m) in queues.iter().zip(mcs_per_user) {
        let n = assemble_ampdu(t, PreambleFormat::Vht, m, n_ltf, q, limits);
        let octets: usize = q.iter().take(n).map(|&x| ampdu_subframe_octets(x)).sum();
        dur = dur.max(ppdu_duration(t, PreambleFormat::Vht, m, octets, n_ltf));
        counts.push(n);
    }
    (counts, dur)
}
