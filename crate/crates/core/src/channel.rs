//! Frequency-selective MIMO Rayleigh channel: exponential power-delay
//! profile, first-order autoregressive time evolution, log-distance pathloss.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;

use crate::cmat::{CMat, C64};
use crate::rng::{cn, stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProfile {
    pub rms_delay_ns: f64,
    pub tap_spacing_ns: f64,
    /// Time constant of the AR(1) evolution.
    pub coherence_ms: f64,
    pub subcarrier_spacing_hz: f64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        ChannelProfile {
            rms_delay_ns: 15.0,
            tap_spacing_ns: 10.0,
            coherence_ms: 10_000.0,
            subcarrier_spacing_hz: 312_500.0,
        }
    }
}

impl ChannelProfile {
    /// Normalized tap powers, summing to one.
    pub fn tap_powers(&self) -> Vec<f64> {
        if self.rms_delay_ns <= 0.0 {
            return alloc::vec![1.0];
        }
        let n = libm::ceil(5.0 * self.rms_delay_ns / self.tap_spacing_ns) as usize + 1;
        let raw: Vec<f64> = (0..n)
            .map(|l| libm::exp(-(l as f64) * self.tap_spacing_ns / self.rms_delay_ns))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|p| p / total).collect()
    }
}

/// Subcarrier offsets (in spacings) around DC, DC excluded.
pub fn subcarrier_offsets(n: usize) -> Vec<i32> {
    let half = (n / 2) as i32;
    let mut v: Vec<i32> = (-half..0).collect();
    v.extend(1..=(n as i32 - half));
    v
}

#[derive(Debug, Clone)]
pub struct ChannelState {
    pub seed: u64,
    pub client_index: u64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub profile: ChannelProfile,
    pub distance_m: f64,
    pub last_update_us: u64,
    tap_powers: Vec<f64>,
    taps: Vec<CMat>,
    /// Per-subcarrier `n_rx x n_tx` responses.
    pub h: Vec<CMat>,
    phasors: Vec<Vec<C64>>,
    rng: ChaCha8Rng,
}

impl ChannelState {
    pub fn new(seed: u64, client_index: u64, n_tx: usize, n_rx: usize, n_subcarriers: usize, profile: ChannelProfile) -> Self {
        assert!(n_tx >= 1 && n_rx >= 1 && n_subcarriers >= 1);
        let mut rng = stream(seed, "channel", client_index);
        let tap_powers = profile.tap_powers();
        let taps = tap_powers
            .iter()
            .map(|&p| CMat::from_fn(n_rx, n_tx, |_, _| cn(&mut rng, p)))
            .collect();
        let offsets = subcarrier_offsets(n_subcarriers);
        let phasors = offsets
            .iter()
            .map(|&k| {
                (0..tap_powers.len())
                    .map(|l| {
                        let arg = -2.0
                            * PI
                            * k as f64
                            * profile.subcarrier_spacing_hz
                            * l as f64
                            * profile.tap_spacing_ns
                            * 1e-9;
                        C64::new(libm::cos(arg), libm::sin(arg))
                    })
                    .collect()
            })
            .collect();
        let mut s = ChannelState {
            seed,
            client_index,
            n_tx,
            n_rx,
            profile,
            distance_m: 1.0,
            last_update_us: 0,
            tap_powers,
            taps,
            h: Vec::new(),
            phasors,
            rng,
        };
        s.refresh();
        s
    }

    pub fn n_subcarriers(&self) -> usize {
        self.phasors.len()
    }

    fn refresh(&mut self) {
        self.h = self
            .phasors
            .iter()
            .map(|ph| {
                let mut m = CMat::zeros(self.n_rx, self.n_tx);
                for (tap, &p) in self.taps.iter().zip(ph) {
                    for (d, s) in m.data.iter_mut().zip(&tap.data) {
                        *d += s * p;
                    }
                }
                m
            })
            .collect();
    }

    /// AR(1) step: `h' = rho h + sqrt(1 - rho^2) n`, `rho = exp(-dt / tau)`.
    pub fn evolve(&mut self, dt_us: u64) {
        if dt_us == 0 {
            return;
        }
        self.last_update_us += dt_us;
        let tau_us = self.profile.coherence_ms * 1e3;
        let rho = if tau_us > 0.0 {
            libm::exp(-(dt_us as f64) / tau_us)
        } else {
            0.0
        };
        let innov = libm::sqrt((1.0 - rho * rho).max(0.0));
        for (tap, &p) in self.taps.iter_mut().zip(&self.tap_powers) {
            for z in tap.data.iter_mut() {
                *z = *z * rho + cn(&mut self.rng, p) * innov;
            }
        }
        self.refresh();
    }

    /// Advance to absolute time `t_us` (no-op if already there).
    pub fn advance_to(&mut self, t_us: u64) {
        if t_us > self.last_update_us {
            self.evolve(t_us - self.last_update_us);
        }
    }

    /// Fresh independent draw, e.g. a new seed at the end of each TxOP.
    pub fn redraw(&mut self) {
        for (tap, &p) in self.taps.iter_mut().zip(&self.tap_powers) {
            for z in tap.data.iter_mut() {
                *z = cn(&mut self.rng, p);
            }
        }
        self.refresh();
    }

    /// Response in the opposite direction (reciprocal link).
    pub fn reverse(&self) -> Vec<CMat> {
        self.h.iter().map(|m| m.transpose()).collect()
    }
}

/// `sqrt(mix) * shared + sqrt(1 - mix) * own`: inter-user correlation knob.
pub fn mix_responses(own: &[CMat], shared: &[CMat], mix: f64) -> Vec<CMat> {
    let m = mix.clamp(0.0, 1.0);
    let a = libm::sqrt(m);
    let b = libm::sqrt(1.0 - m);
    own.iter()
        .zip(shared)
        .map(|(o, s)| s.scale_re(a).add(&o.scale_re(b)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub system_loss_db: f64,
    pub antenna_gain_db: f64,
    pub noise_figure_db: f64,
    pub carrier_freq_ghz: f64,
    pub breakpoint_m: f64,
    pub exponent_near: f64,
    pub exponent_far: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            tx_power_dbm: 17.0,
            system_loss_db: 8.5,
            antenna_gain_db: 0.0,
            noise_figure_db: 7.0,
            carrier_freq_ghz: 5.2,
            breakpoint_m: 5.0,
            exponent_near: 2.0,
            exponent_far: 3.5,
        }
    }
}

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

impl LinkBudget {
    pub fn pathloss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(1e-3);
        let fspl_1m = 20.0 * libm::log10(4.0 * PI * self.carrier_freq_ghz * 1e9 / SPEED_OF_LIGHT);
        if d <= self.breakpoint_m {
            fspl_1m + 10.0 * self.exponent_near * libm::log10(d)
        } else {
            fspl_1m
                + 10.0 * self.exponent_near * libm::log10(self.breakpoint_m)
                + 10.0 * self.exponent_far * libm::log10(d / self.breakpoint_m)
        }
    }

    pub fn rx_power_dbm(&self, distance_m: f64) -> f64 {
        self.tx_power_dbm + self.antenna_gain_db - self.system_loss_db - self.pathloss_db(distance_m)
    }

    pub fn noise_dbm(&self, bandwidth_mhz: f64) -> f64 {
        -174.0 + 10.0 * libm::log10(bandwidth_mhz * 1e6) + self.noise_figure_db
    }

    pub fn snr_db(&self, distance_m: f64, bandwidth_mhz: f64) -> f64 {
        self.rx_power_dbm(distance_m) - self.noise_dbm(bandwidth_mhz)
    }

    /// Distance at which the received power falls to `threshold_dbm`.
    pub fn range_m(&self, threshold_dbm: f64) -> f64 {
        let (mut lo, mut hi) = (0.1, 1e5);
        for _ in 0..200 {
            let mid = libm::sqrt(lo * hi);
            if self.rx_power_dbm(mid) >= threshold_dbm {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Carrier-sense and NAV threshold.
pub const SENSITIVITY_DBM: f64 = -82.0;
