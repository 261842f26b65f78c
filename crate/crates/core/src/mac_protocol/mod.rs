//! Channel access, acknowledgment, aggregation, rate control and sounding.

pub mod ampdu;
pub mod amrr;
pub mod edca;
pub mod multichannel;
pub mod sounding;

use alloc::vec::Vec;

/// Over-the-air frame types handled by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Ampdu,
    MuPpdu,
    Data,
    Ack,
    BlockAck,
    BlockAckReq,
    Ndpa,
    Ndp,
    BfPoll,
    BfReport,
    Beacon,
}

impl FrameKind {
    pub fn name(self) -> &'static str {
        match self {
            FrameKind::Ampdu => "ampdu",
            FrameKind::MuPpdu => "mu_ppdu",
            FrameKind::Data => "data",
            FrameKind::Ack => "ack",
            FrameKind::BlockAck => "ba",
            FrameKind::BlockAckReq => "bar",
            FrameKind::Ndpa => "ndpa",
            FrameKind::Ndp => "ndp",
            FrameKind::BfPoll => "bf_poll",
            FrameKind::BfReport => "bf_report",
            FrameKind::Beacon => "beacon",
        }
    }

    pub fn is_data(self) -> bool {
        matches!(self, FrameKind::Ampdu | FrameKind::MuPpdu | FrameKind::Data)
    }
}

/// One frame on the air. `mpdus` lists the MPDU identities carried, per destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub kind: FrameKind,
    pub src: usize,
    pub dst: Option<usize>,
    pub octets: usize,
    pub duration_us: u32,
    pub mpdus: Vec<(usize, u64)>,
}

impl Frame {
    pub fn control(kind: FrameKind, src: usize, dst: Option<usize>, octets: usize, duration_us: u32) -> Self {
        Frame {
            kind,
            src,
            dst,
            octets,
            duration_us,
            mpdus: Vec::new(),
        }
    }
}

/// Round a PHY duration to whole microseconds, halves upward.
pub fn round_us(us: f64) -> u32 {
    libm::floor(us + 0.5) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_half_up() {
        assert_eq!(round_us(189.5), 190);
        assert_eq!(round_us(189.49), 189);
        assert_eq!(round_us(0.0), 0);
    }
}
