//! AMRR rate control: a four-stage retry chain per MPDU and periodic
//! rate decisions from failure/success ratios, with probing after raises.

#[derive(Debug, Clone, PartialEq)]
pub struct AmrrConfig {
    /// Transmission counts c0..c3 for rates r0..r3.
    pub counts: [u32; 4],
    pub low_watermark: f64,
    pub high_watermark: f64,
    pub min_success: u32,
    pub max_success: u32,
    pub interval_us: u64,
}

impl Default for AmrrConfig {
    fn default() -> Self {
        AmrrConfig {
            counts: [3, 3, 1, 3],
            low_watermark: 0.10,
            high_watermark: 0.33,
            min_success: 10,
            max_success: 160,
            interval_us: 25_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Increase,
    Decrease,
    Hold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amrr {
    pub cfg: AmrrConfig,
    /// Number of rates in the ladder; rates are ladder indices.
    pub n_rates: usize,
    pub r0: usize,
    pub success_threshold: u32,
    pub successes: u32,
    pub failures: u32,
    pub probing: bool,
    prev_r0: usize,
    pub next_decision_us: u64,
}

impl Amrr {
    pub fn new(cfg: AmrrConfig, n_rates: usize, start: usize) -> Self {
        assert!(n_rates > 0);
        let r0 = start.min(n_rates - 1);
        Amrr {
            success_threshold: cfg.min_success,
            next_decision_us: cfg.interval_us,
            cfg,
            n_rates,
            r0,
            successes: 0,
            failures: 0,
            probing: false,
            prev_r0: r0,
        }
    }

    pub fn rates(&self) -> [usize; 4] {
        [self.r0, self.r0.saturating_sub(1), self.r0.saturating_sub(2), 0]
    }

    pub fn retry_limit(&self) -> u32 {
        self.cfg.counts.iter().sum()
    }

    /// Rate for an MPDU that already failed `failed` times; `None` means drop.
    pub fn rate_for_attempt(&self, failed: u32) -> Option<usize> {
        let rates = self.rates();
        let mut acc = 0;
        for (r, c) in rates.iter().zip(self.cfg.counts) {
            acc += c;
            if failed < acc {
                return Some(*r);
            }
        }
        None
    }

    /// Per-MPDU outcomes of one attempt; the head MPDU decides a probe.
    pub fn on_result(&mut self, outcomes: &[bool]) {
        if outcomes.is_empty() {
            return;
        }
        if self.probing {
            self.probing = false;
            if !outcomes[0] {
                self.r0 = self.prev_r0;
                self.success_threshold = (self.success_threshold * 2).min(self.cfg.max_success);
                self.successes = 0;
                self.failures = 0;
                return;
            }
        }
        for &ok in outcomes {
            if ok {
                self.successes += 1;
            } else {
                self.failures += 1;
            }
        }
    }

    /// Macro decision from the accumulated counters.
    pub fn decide(&mut self) -> Decision {
        let s = self.successes;
        let f = self.failures;
        let ratio = if s == 0 {
            if f == 0 {
                return Decision::Hold;
            }
            f64::INFINITY
        } else {
            f as f64 / s as f64
        };
        let d = if ratio > self.cfg.high_watermark {
            Decision::Decrease
        } else if ratio < self.cfg.low_watermark && s >= self.success_threshold {
            Decision::Increase
        } else {
            Decision::Hold
        };
        match d {
            Decision::Increase if self.r0 + 1 < self.n_rates => {
                self.prev_r0 = self.r0;
                self.r0 += 1;
                self.probing = true;
                self.successes = 0;
                self.failures = 0;
            }
            Decision::Increase => {
                self.successes = 0;
                self.failures = 0;
                return Decision::Hold;
            }
            Decision::Decrease => {
                self.r0 = self.r0.saturating_sub(1);
                self.probing = false;
                self.successes = 0;
                self.failures = 0;
            }
            Decision::Hold => {
                if s >= self.success_threshold {
                    self.successes = 0;
                    self.failures = 0;
                }
            }
        }
        d
    }

    /// Run every decision due up to `now_us`.
    pub fn tick(&mut self, now_us: u64) {
        while now_us >= self.next_decision_us {
            self.decide();
            self.next_decision_us += self.cfg.interval_us;
        }
    }
}
