//! Explicit sounding: NDPA, NDP, then one beamforming report per member
//! (later members are polled), and the periodic schedule that drives it.

use alloc::vec::Vec;

use super::{round_us, Frame, FrameKind};
use crate::rates_framing::{
    legacy_frame_us, ltf_count, preamble_us, PreambleFormat, TimingParams, BF_POLL_OCTETS,
    NDPA_OCTETS,
};

/// Sizing knobs of the compressed beamforming report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackParams {
    pub psi_bits: u32,
    pub phi_bits: u32,
    pub n_subcarriers: u32,
    pub grouping: u32,
}

impl FeedbackParams {
    pub fn su() -> Self {
        FeedbackParams {
            psi_bits: 2,
            phi_bits: 4,
            n_subcarriers: 52,
            grouping: 1,
        }
    }

    pub fn mu() -> Self {
        FeedbackParams {
            psi_bits: 5,
            phi_bits: 7,
            n_subcarriers: 52,
            grouping: 1,
        }
    }

    fn reported_subcarriers(&self) -> u32 {
        self.n_subcarriers.div_ceil(self.grouping.max(1))
    }
}

/// Givens angles describing an `n_r x n_c` matrix with orthonormal columns.
pub fn givens_angles(n_r: usize, n_c: usize) -> usize {
    2 * (1..=n_c.min(n_r.saturating_sub(1))).map(|i| n_r - i).sum::<usize>()
}

const MIMO_CONTROL_OCTETS: usize = 8;
/// MAC header, FCS and action category/code around the report.
const REPORT_WRAPPER_OCTETS: usize = 24 + 4 + 2;

/// Report frame size for a beamformer with `n_r` antennas and `n_c` reported columns.
pub fn bf_report_octets(n_r: usize, n_c: usize, fb: &FeedbackParams, mu: bool) -> usize {
    let angles = givens_angles(n_r, n_c) as u64;
    let per_sc = angles / 2 * (fb.psi_bits + fb.phi_bits) as u64;
    let sc = fb.reported_subcarriers() as u64;
    let mut octets = (per_sc * sc).div_ceil(8) as usize + MIMO_CONTROL_OCTETS + n_c;
    if mu {
        octets += (4 * n_c as u64 * sc).div_ceil(8) as usize;
    }
    octets + REPORT_WRAPPER_OCTETS
}

/// One frame of a sounding exchange and the idle gap before it.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingStep {
    pub gap_us: u32,
    pub frame: Frame,
}

/// Frames of one sounding exchange led by `ap` towards `members`.
pub fn sounding_frames(
    t: &TimingParams,
    ap: usize,
    ap_antennas: usize,
    members: &[usize],
    streams_per_user: usize,
    fb: &FeedbackParams,
    mu: bool,
    control_rate_bps: f64,
) -> Vec<SoundingStep> {
    let sifs = t.sifs_us;
    let ndpa = round_us(legacy_frame_us(t, NDPA_OCTETS, control_rate_bps));
    let ndp = round_us(preamble_us(t, PreambleFormat::Vht, 20, ltf_count(ap_antennas)));
    let rep_octets = bf_report_octets(ap_antennas, streams_per_user, fb, mu);
    let report = round_us(legacy_frame_us(t, rep_octets, control_rate_bps));
    let poll = round_us(legacy_frame_us(t, BF_POLL_OCTETS, control_rate_bps));
    let mut out = Vec::with_capacity(1 + 2 * members.len());
    out.push(SoundingStep {
        gap_us: 0,
        frame: Frame::control(FrameKind::Ndpa, ap, None, NDPA_OCTETS, ndpa),
    });
    out.push(SoundingStep {
        gap_us: sifs,
        frame: Frame::control(FrameKind::Ndp, ap, None, 0, ndp),
    });
    for (i, &m) in members.iter().enumerate() {
        if i > 0 {
            out.push(SoundingStep {
                gap_us: sifs,
                frame: Frame::control(FrameKind::BfPoll, ap, Some(m), BF_POLL_OCTETS, poll),
            });
        }
        out.push(SoundingStep {
            gap_us: sifs,
            frame: Frame::control(FrameKind::BfReport, m, Some(ap), rep_octets, report),
        });
    }
    out
}

pub fn sequence_us(steps: &[SoundingStep]) -> u64 {
    steps
        .iter()
        .map(|s| s.gap_us as u64 + s.frame.duration_us as u64)
        .sum()
}

/// Periodic sounding per group.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingSchedule {
    pub interval_us: u64,
    pub next_fire_us: Vec<u64>,
    pub groups: Vec<Vec<usize>>,
    pub feedback: FeedbackParams,
}

impl SoundingSchedule {
    pub fn new(interval_us: u64, groups: Vec<Vec<usize>>, feedback: FeedbackParams) -> Self {
        SoundingSchedule {
            interval_us,
            next_fire_us: alloc::vec![0; groups.len()],
            groups,
            feedback,
        }
    }

    pub fn due(&self, group: usize, now_us: u64) -> bool {
        now_us >= self.next_fire_us[group]
    }

    /// Record a completed sounding at `now_us`; the next one is one interval later.
    pub fn fired(&mut self, group: usize, now_us: u64) {
        self.next_fire_us[group] = now_us + self.interval_us;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates_framing::Standard;

    #[test]
    fn angle_counts() {
        assert_eq!(givens_angles(2, 1), 2);
        assert_eq!(givens_angles(3, 1), 4);
        assert_eq!(givens_angles(3, 2), 6);
        assert_eq!(givens_angles(4, 2), 10);
        assert_eq!(givens_angles(4, 4), 12);
        assert_eq!(givens_angles(1, 1), 0);
    }

    #[test]
    fn report_size_worked() {
        // 3 antennas, 1 column, SU 2+4 bits: 2 pairs x 6 bits x 52 = 624 bits = 78 octets
        assert_eq!(bf_report_octets(3, 1, &FeedbackParams::su(), false), 78 + 8 + 1 + 30);
        // MU adds 4 bits per subcarrier per column
        assert_eq!(
            bf_report_octets(3, 1, &FeedbackParams::mu(), true),
            (2 * 12 * 52) / 8 + 8 + 1 + 26 + 30
        );
    }

    #[test]
    fn report_grows_with_conditioning_factors() {
        let su = FeedbackParams::su();
        let mu = FeedbackParams::mu();
        assert!(bf_report_octets(4, 1, &su, false) > bf_report_octets(3, 1, &su, false));
        assert!(bf_report_octets(3, 1, &mu, false) > bf_report_octets(3, 1, &su, false));
        let wide = FeedbackParams {
            n_subcarriers: 108,
            ..su
        };
        assert!(bf_report_octets(3, 1, &wide, false) > bf_report_octets(3, 1, &su, false));
        let grouped = FeedbackParams { grouping: 2, ..su };
        assert!(bf_report_octets(3, 1, &grouped, false) < bf_report_octets(3, 1, &su, false));
    }

    #[test]
    fn frame_sequences() {
        let t = TimingParams::new(Standard::Ac);
        let one = sounding_frames(&t, 0, 3, &[1], 1, &FeedbackParams::su(), false, 24e6);
        let kinds: Vec<_> = one.iter().map(|s| s.frame.kind).collect();
        assert_eq!(kinds, [FrameKind::Ndpa, FrameKind::Ndp, FrameKind::BfReport]);
        let two = sounding_frames(&t, 0, 3, &[1, 2], 1, &FeedbackParams::mu(), true, 24e6);
        let kinds: Vec<_> = two.iter().map(|s| s.frame.kind).collect();
        assert_eq!(
            kinds,
            [
                FrameKind::Ndpa,
                FrameKind::Ndp,
                FrameKind::BfReport,
                FrameKind::BfPoll,
                FrameKind::BfReport
            ]
        );
        assert_eq!(two[4].frame.src, 2);
        assert_eq!(two[3].frame.dst, Some(2));
        assert_eq!(one[1].frame.duration_us, 52);
    }

    #[test]
    fn schedule_interval() {
        let mut s = SoundingSchedule::new(10_000, alloc::vec![alloc::vec![1, 2]], FeedbackParams::mu());
        assert!(s.due(0, 0));
        s.fired(0, 1_234);
        assert!(!s.due(0, 11_233));
        assert!(s.due(0, 11_234));
    }
}
