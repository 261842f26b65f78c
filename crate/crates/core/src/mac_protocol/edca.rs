//! EDCA backoff: AIFS idle, then slotted countdown that freezes while busy.

use alloc::vec::Vec;
use rand::Rng;

use crate::rates_framing::{AccessCategory, TimingParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Edca {
    pub ac: AccessCategory,
    pub aifs_us: u32,
    pub slot_us: u32,
    pub cw_min: u32,
    pub cw_max: u32,
    pub cw: u32,
    /// Residual backoff slots, `None` until drawn.
    pub backoff: Option<u32>,
}

impl Edca {
    pub fn new(t: &TimingParams, ac: AccessCategory) -> Self {
        Edca {
            ac,
            aifs_us: t.aifs(ac),
            slot_us: t.slot_us,
            cw_min: t.cw_min(ac),
            cw_max: t.cw_max(ac),
            cw: t.cw_min(ac),
            backoff: None,
        }
    }

    /// Legacy DCF variant (DIFS, a/g contention window).
    pub fn legacy(t: &TimingParams) -> Self {
        Edca {
            ac: AccessCategory::Be,
            aifs_us: t.difs_us,
            slot_us: t.slot_us,
            cw_min: t.legacy_cw_min,
            cw_max: t.legacy_cw_max,
            cw: t.legacy_cw_min,
            backoff: None,
        }
    }

    /// Draw a fresh backoff uniformly in `[0, CW]`.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let b = rng.random_range(0..=self.cw);
        self.backoff = Some(b);
        b
    }

    /// Residual backoff, drawing one if none is pending.
    pub fn ensure_backoff<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        match self.backoff {
            Some(b) => b,
            None => self.draw(rng),
        }
    }

    pub fn on_failure(&mut self) {
        self.cw = (2 * (self.cw + 1) - 1).min(self.cw_max);
    }

    pub fn on_success(&mut self) {
        self.cw = self.cw_min;
    }

    /// When the countdown started at `idle_from` reaches zero.
    pub fn grant_time(&self, idle_from: u64) -> u64 {
        idle_from + self.aifs_us as u64 + self.backoff.unwrap_or(0) as u64 * self.slot_us as u64
    }

    /// Medium turned busy at `busy_at` after being idle since `idle_from`:
    /// whole slots elapsed past AIFS are consumed, the rest is kept.
    pub fn freeze(&mut self, idle_from: u64, busy_at: u64) {
        let start = idle_from + self.aifs_us as u64;
        if let Some(b) = self.backoff.as_mut() {
            if busy_at > start {
                let slots = ((busy_at - start) / self.slot_us as u64).min(*b as u64) as u32;
                *b -= slots;
            }
        }
    }

    /// The grant was used; the next access needs a new draw.
    pub fn consume(&mut self) {
        self.backoff = None;
    }
}

/// Outcome of one slotted contention round among stations with equal AIFS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contention {
    pub winners: Vec<usize>,
    pub elapsed_slots: u32,
    pub residuals: Vec<u32>,
}

impl Contention {
    pub fn collided(&self) -> bool {
        self.winners.len() > 1
    }
}

pub fn contend(backoffs: &[u32]) -> Contention {
    let min = backoffs.iter().copied().min().unwrap_or(0);
    Contention {
        winners: (0..backoffs.len()).filter(|&i| backoffs[i] == min).collect(),
        elapsed_slots: min,
        residuals: backoffs.iter().map(|b| b - min).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates_framing::Standard;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_access_delay_be() {
        let t = TimingParams::new(Standard::N);
        let mut e = Edca::new(&t, AccessCategory::Be);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mut sum = 0u64;
        for _ in 0..n {
            e.draw(&mut rng);
            sum += e.grant_time(0);
            e.consume();
        }
        let mean = sum as f64 / n as f64;
        assert!((mean - 110.5).abs() / 110.5 < 0.02, "{mean}");
    }

    #[test]
    fn three_beats_five() {
        let c = contend(&[3, 5]);
        assert_eq!(c.winners, [0]);
        assert_eq!(c.residuals, [0, 2]);
        assert!(!c.collided());
        assert!(contend(&[4, 4, 9]).collided());
    }

    #[test]
    fn freeze_keeps_residual() {
        let t = TimingParams::new(Standard::N);
        let mut e = Edca::new(&t, AccessCategory::Be);
        e.backoff = Some(5);
        // other station with backoff 3 starts at AIFS + 3 slots
        e.freeze(0, 43 + 27);
        assert_eq!(e.backoff, Some(2));
        // busy inside AIFS: nothing consumed
        e.freeze(100, 120);
        assert_eq!(e.backoff, Some(2));
    }

    #[test]
    fn cw_doubles_and_caps() {
        let t = TimingParams::new(Standard::N);
        let mut e = Edca::new(&t, AccessCategory::Be);
        let mut seen = Vec::new();
        for _ in 0..8 {
            e.on_failure();
            seen.push(e.cw);
        }
        assert_eq!(seen, [31, 63, 127, 255, 511, 1023, 1023, 1023]);
        e.on_success();
        assert_eq!(e.cw, 15);
        let mut vo = Edca::new(&t, AccessCategory::Vo);
        vo.on_failure();
        vo.on_failure();
        assert_eq!(vo.cw, 7);
    }
}
