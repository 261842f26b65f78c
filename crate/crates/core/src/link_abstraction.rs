//! SINR -> packet error mapping, collision effects, ADC capping and the
//! multichannel collision probability.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::precoding::{db_to_lin, lin_to_db};
use crate::rates_framing::Mcs;

/// Reference MPDU length of the tables.
pub const REF_OCTETS: usize = 1000;
pub const SNR_MIN_DB: f64 = -10.0;
pub const SNR_MAX_DB: f64 = 50.0;
pub const SNR_STEP_DB: f64 = 0.5;
pub const PER_FLOOR: f64 = 1e-6;

/// Modulation (bits per subcarrier) and code rate of each table row, with the
/// SINR at which a reference-length MPDU sees 10 % errors.
pub const FAMILIES: [(u8, u8, u8, f64); 12] = [
    (1, 1, 4, -1.0),
    (1, 1, 2, 2.0),
    (1, 3, 4, 4.0),
    (2, 1, 2, 5.0),
    (2, 3, 4, 8.0),
    (4, 1, 2, 11.0),
    (4, 3, 4, 14.5),
    (6, 2, 3, 18.5),
    (6, 3, 4, 20.0),
    (6, 5, 6, 21.5),
    (8, 3, 4, 25.0),
    (8, 5, 6, 27.0),
];

pub fn family_of(bits: u8, num: u8, den: u8) -> Option<usize> {
    FAMILIES
        .iter()
        .position(|&(b, n, d, _)| b == bits && n == num && d == den)
}

pub fn mcs_family(mcs: &Mcs) -> Result<usize> {
    let (b, n, d) = mcs.modulation();
    family_of(b, n, d).ok_or(Error::UndefinedMcs {
        bandwidth_mhz: mcs.bandwidth_mhz,
        index: mcs.index,
        n_ss: mcs.n_ss,
    })
}

/// Family of a legacy control rate (6/12/24 Mbps style OFDM rates).
pub fn legacy_rate_family(rate_bps: f64) -> usize {
    let r = libm::round(rate_bps / 1e6) as u32;
    let (b, n, d) = match r {
        0..=6 => (1, 1, 2),
        7..=9 => (1, 3, 4),
        10..=12 => (2, 1, 2),
        13..=18 => (2, 3, 4),
        19..=24 => (4, 1, 2),
        25..=36 => (4, 3, 4),
        37..=48 => (6, 2, 3),
        _ => (6, 3, 4),
    };
    family_of(b, n, d).unwrap_or(1)
}

fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Uncoded Gray-mapped bit error rate at symbol SNR `gamma` (linear).
pub fn uncoded_ber(bits: u8, gamma: f64) -> f64 {
    if bits == 1 {
        return q(libm::sqrt(2.0 * gamma));
    }
    let m = libm::pow(2.0, bits as f64);
    let ber = (4.0 / bits as f64) * (1.0 - 1.0 / libm::sqrt(m)) * q(libm::sqrt(3.0 * gamma / (m - 1.0)));
    ber.min(0.5)
}

fn per_from_ber(ber: f64, octets: usize) -> f64 {
    let bits = 8.0 * octets as f64;
    -libm::expm1(bits * libm::log1p(-ber.min(0.5)))
}

fn uncoded_per(bits: u8, gamma: f64) -> f64 {
    per_from_ber(uncoded_ber(bits, gamma), REF_OCTETS)
}

/// SNR (dB) at which the uncoded curve of `bits` crosses `target`.
fn uncoded_crossing_db(bits: u8, target: f64) -> f64 {
    let (mut lo, mut hi) = (-20.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if uncoded_per(bits, db_to_lin(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerLut {
    pub snr_min_db: f64,
    pub step_db: f64,
    /// `per[family][i]` at `snr_min_db + i * step_db`, reference length.
    pub per: Vec<Vec<f64>>,
}

fn grid_len() -> usize {
    libm::round((SNR_MAX_DB - SNR_MIN_DB) / SNR_STEP_DB) as usize + 1
}

impl PerLut {
    /// Tables from the uncoded AWGN curves shifted by a per-rate coding gain.
    pub fn generate() -> Self {
        let n = grid_len();
        let per = FAMILIES
            .iter()
            .map(|&(bits, _, _, target_db)| {
                let gain_db = uncoded_crossing_db(bits, 0.1) - target_db;
                (0..n)
                    .map(|i| {
                        let snr = SNR_MIN_DB + i as f64 * SNR_STEP_DB;
                        uncoded_per(bits, db_to_lin(snr + gain_db)).clamp(PER_FLOOR, 1.0)
                    })
                    .collect()
            })
            .collect();
        PerLut {
            snr_min_db: SNR_MIN_DB,
            step_db: SNR_STEP_DB,
            per,
        }
    }

    /// `(mcs_id, snr_db, per)` rows.
    pub fn rows(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for (f, row) in self.per.iter().enumerate() {
            for (i, &p) in row.iter().enumerate() {
                out.push((f, self.snr_min_db + i as f64 * self.step_db, p));
            }
        }
        out
    }

    /// Rebuild from rows, checking grid and monotonicity.
    pub fn from_rows(rows: &[(usize, f64, f64)]) -> Result<Self> {
        let n_fam = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
        if n_fam != FAMILIES.len() {
            return Err(Error::config("lut", "unexpected number of mcs_id rows"));
        }
        let mut per: Vec<Vec<(f64, f64)>> = alloc::vec![Vec::new(); n_fam];
        for &(f, s, p) in rows {
            if !(0.0..=1.0).contains(&p) || !s.is_finite() {
                return Err(Error::config("lut", "per outside [0,1] or bad snr"));
            }
            per[f].push((s, p));
        }
        let mut out = Vec::with_capacity(n_fam);
        let mut snr_min = f64::NAN;
        for (f, mut r) in per.into_iter().enumerate() {
            r.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            if r.is_empty() {
                return Err(Error::config("lut", "empty row"));
            }
            if snr_min.is_nan() {
                snr_min = r[0].0;
            }
            for (i, &(s, _)) in r.iter().enumerate() {
                if (s - (snr_min + i as f64 * SNR_STEP_DB)).abs() > 1e-9 {
                    return Err(Error::config("lut", "snr grid must be 0.5 dB steps"));
                }
            }
            if r.windows(2).any(|w| w[1].1 > w[0].1) {
                return Err(Error::config("lut", alloc::format!("mcs_id {f}: per increases with snr")));
            }
            out.push(r.into_iter().map(|x| x.1).collect());
        }
        Ok(PerLut {
            snr_min_db: snr_min,
            step_db: SNR_STEP_DB,
            per: out,
        })
    }

    /// Reference-length PER, log-interpolated between grid points.
    pub fn per_ref(&self, family: usize, snr_db: f64) -> f64 {
        let row = &self.per[family];
        if snr_db.is_nan() || snr_db < self.snr_min_db {
            return 1.0;
        }
        let x = (snr_db - self.snr_min_db) / self.step_db;
        let i = libm::floor(x) as usize;
        if i + 1 >= row.len() {
            return row[row.len() - 1].min(PER_FLOOR);
        }
        let f = x - i as f64;
        let a = libm::log10(row[i].max(1e-300));
        let b = libm::log10(row[i + 1].max(1e-300));
        libm::pow(10.0, a + f * (b - a)).clamp(PER_FLOOR, 1.0)
    }

    /// PER of an MPDU of `octets` in `family`.
    pub fn per_family(&self, family: usize, sinr_db: f64, octets: usize) -> f64 {
        let top = self.snr_min_db + (self.per[family].len() - 1) as f64 * self.step_db;
        if sinr_db >= top {
            return PER_FLOOR;
        }
        let p = self.per_ref(family, sinr_db);
        if p >= 1.0 {
            return 1.0;
        }
        let l = octets.max(1) as f64 / REF_OCTETS as f64;
        (-libm::expm1(l * libm::log1p(-p))).clamp(0.0, 1.0)
    }

    pub fn mpdu_error_prob(&self, sinr_db: f64, mcs: &Mcs, octets: usize) -> Result<f64> {
        Ok(self.per_family(mcs_family(mcs)?, sinr_db, octets))
    }
}

/// Effective SINR of a set of per-subcarrier/per-stream SINRs (linear in,
/// dB out), by averaging capacity.
pub fn effective_sinr_db(sinrs: &[f64]) -> f64 {
    if sinrs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mean = sinrs.iter().map(|&s| libm::log2(1.0 + s.max(0.0))).sum::<f64>() / sinrs.len() as f64;
    lin_to_db(libm::exp2(mean) - 1.0)
}

/// ADC-limited SNR when an adjacent-band interferer is present at AGC time.
pub fn adc_capped_snr(snr_max_db: f64, sir_db: f64, beta_over_alpha: f64) -> f64 {
    let snr = db_to_lin(snr_max_db) / (1.0 + beta_over_alpha / db_to_lin(sir_db));
    lin_to_db(snr)
}

/// Probability that at least one of `n` channels collides.
pub fn collision_probability(p: f64, n: u32) -> f64 {
    1.0 - libm::pow(1.0 - p, n as f64)
}

/// SINR after adding interference at `sir_db` to a link at `sinr_db`.
pub fn combine_sir(sinr_db: f64, sir_db: f64) -> f64 {
    -lin_to_db(db_to_lin(-sinr_db) + db_to_lin(-sir_db))
}

/// Frequency-diversity credit of a block spanning `block_channels` of `total` channels.
pub fn diversity_bonus_db(block_channels: usize, total: usize, cap_db: f64) -> f64 {
    if total <= 1 || block_channels <= 1 {
        return 0.0;
    }
    cap_db * libm::log2(block_channels as f64) / libm::log2(total as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionSpec {
    /// Overlap interval relative to the victim's start.
    pub start_us: f64,
    pub end_us: f64,
    pub interferer_dbm: f64,
    pub channels: Vec<u8>,
    pub hits_header: bool,
}

/// What the receiver knows about the frame it is decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    pub signal_dbm: f64,
    /// Clean effective SINR per horizontal block.
    pub block_sinr_db: Vec<f64>,
    pub block_channels: Vec<Vec<u8>>,
    pub preamble_us: f64,
    pub duration_us: f64,
    pub beta_over_alpha: f64,
}

/// Interference hitting one block over a time span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub block: usize,
    pub from_us: f64,
    pub to_us: f64,
    pub sir_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionVerdict {
    /// Probability that the whole frame is lost (ADC saturation or header).
    pub frame_loss_prob: f64,
    /// Post-AGC SINR per block outside the hit spans.
    pub block_sinr_db: Vec<f64>,
    pub hits: Vec<Hit>,
}

impl CollisionVerdict {
    /// SINR seen by an MPDU of `block` occupying `[from_us, to_us)`.
    pub fn mpdu_sinr_db(&self, block: usize, from_us: f64, to_us: f64) -> f64 {
        let mut inter = 0.0;
        for h in &self.hits {
            if h.block == block && h.from_us < to_us && h.to_us > from_us {
                inter += db_to_lin(-h.sir_db);
            }
        }
        let clean = self.block_sinr_db[block];
        if inter == 0.0 {
            clean
        } else {
            -lin_to_db(db_to_lin(-clean) + inter)
        }
    }
}

/// Loss probability from receiver saturation for an interferer `rel_db`
/// above the locked-on signal arriving after AGC settled.
pub fn saturation_loss(rel_db: f64) -> f64 {
    if rel_db >= 0.0 {
        1.0
    } else if rel_db <= -3.0 {
        0.0
    } else {
        (rel_db + 3.0) / 3.0
    }
}

pub fn apply_collision(rx: &Reception, collisions: &[CollisionSpec], lut: &PerLut) -> CollisionVerdict {
    let mut survive = 1.0;
    let mut block_sinr = rx.block_sinr_db.clone();
    let mut hits = Vec::new();
    for c in collisions {
        let sir = rx.signal_dbm - c.interferer_dbm;
        let before_agc = c.start_us < rx.preamble_us;
        if before_agc {
            // one front end per block: only blocks the interferer lands on rescale
            for (s, chans) in block_sinr.iter_mut().zip(&rx.block_channels) {
                if chans.iter().any(|ch| c.channels.contains(ch)) {
                    *s = adc_capped_snr(*s, sir, rx.beta_over_alpha);
                }
            }
        } else {
            survive *= 1.0 - saturation_loss(-sir);
        }
        if c.hits_header && c.start_us < rx.preamble_us {
            let header = combine_sir(rx.block_sinr_db.iter().copied().fold(f64::INFINITY, f64::min), sir);
            survive *= 1.0 - lut.per_family(1, header, 3);
        }
        for (b, chans) in rx.block_channels.iter().enumerate() {
            if chans.iter().any(|ch| c.channels.contains(ch)) {
                hits.push(Hit {
                    block: b,
                    from_us: c.start_us.max(rx.preamble_us),
                    to_us: c.end_us.min(rx.duration_us),
                    sir_db: sir,
                });
            }
        }
    }
    CollisionVerdict {
        frame_loss_prob: 1.0 - survive,
        block_sinr_db: block_sinr,
        hits,
    }
}

/// One MPDU of an A-MPDU: block, air-time span and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpduSlot {
    pub block: usize,
    pub from_us: f64,
    pub to_us: f64,
    pub octets: usize,
}

/// FCS outcomes: one whole-frame loss draw, then one independent draw per
/// MPDU at the SINR its span sees. Returns `(frame lost, per-MPDU ok)`.
pub fn draw_fcs<R: Rng + ?Sized>(
    v: &CollisionVerdict,
    mpdus: &[MpduSlot],
    family: usize,
    lut: &PerLut,
    rng: &mut R,
) -> (bool, Vec<bool>) {
    let lost = rng.random::<f64>() < v.frame_loss_prob;
    let oks = mpdus
        .iter()
        .map(|m| {
            let p = lut.per_family(family, v.mpdu_sinr_db(m.block, m.from_us, m.to_us), m.octets);
            !lost && rng.random::<f64>() >= p
        })
        .collect();
    (lost, oks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates_framing::{lookup_mcs, Gi, Standard};

    #[test]
    fn eq_values() {
        assert!((collision_probability(0.05, 4) - 0.18549375).abs() < 1e-12);
        assert!((collision_probability(0.10, 2) - 0.19).abs() < 1e-12);
        assert_eq!(collision_probability(0.0, 7), 0.0);
        assert!((adc_capped_snr(30.0, 0.0, 1.0) - (30.0 - 3.010_299_956_639_812)).abs() < 1e-9);
        assert!((adc_capped_snr(30.0, 5.0, 0.0) - 30.0).abs() < 1e-12);
        assert!((adc_capped_snr(30.0, 300.0, 1.0) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn lut_shape() {
        let lut = PerLut::generate();
        for row in &lut.per {
            assert!(row.windows(2).all(|w| w[1] <= w[0]));
            assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
        for i in 0..lut.per[0].len() {
            for f in 1..FAMILIES.len() {
                assert!(lut.per[f - 1][i] <= lut.per[f][i] + 1e-12);
            }
        }
        // threshold calibration
        for (f, fam) in FAMILIES.iter().enumerate() {
            let p = lut.per_ref(f, fam.3);
            assert!((p - 0.1).abs() < 0.03, "{f} {p}");
        }
    }

    #[test]
    fn saturation_and_floor() {
        let lut = PerLut::generate();
        let m = lookup_mcs(Standard::Ac, 20, 9, 3, Gi::Long).unwrap();
        assert!(lut.mpdu_error_prob(60.0, &m, 1500).unwrap() <= 1e-6);
        assert_eq!(lut.mpdu_error_prob(-20.0, &m, 1500).unwrap(), 1.0);
    }

    #[test]
    fn length_scaling() {
        let lut = PerLut::generate();
        // find a grid point with PER_ref near 0.1 and use it exactly
        let f = 4;
        let i = lut.per[f].iter().position(|&p| p < 0.5).unwrap();
        let s = lut.snr_min_db + i as f64 * lut.step_db;
        let p = lut.per_ref(f, s);
        let p2 = lut.per_family(f, s, 2 * REF_OCTETS);
        assert!((p2 - (1.0 - (1.0 - p) * (1.0 - p))).abs() < 1e-12);
    }

    #[test]
    fn rows_roundtrip() {
        let lut = PerLut::generate();
        let back = PerLut::from_rows(&lut.rows()).unwrap();
        assert_eq!(back, lut);
        let mut bad = lut.rows();
        bad[2].2 = 0.1;
        bad[3].2 = 0.9;
        assert!(PerLut::from_rows(&bad).is_err());
    }

    #[test]
    fn horizontal_confinement() {
        let lut = PerLut::generate();
        let rx = Reception {
            signal_dbm: -50.0,
            block_sinr_db: alloc::vec![30.0, 30.0],
            block_channels: alloc::vec![alloc::vec![0, 1], alloc::vec![2, 3]],
            preamble_us: 40.0,
            duration_us: 2000.0,
            beta_over_alpha: 0.0,
        };
        let c = CollisionSpec {
            start_us: 500.0,
            end_us: 1500.0,
            interferer_dbm: -53.0,
            channels: alloc::vec![3],
            hits_header: false,
        };
        let v = apply_collision(&rx, &[c], &lut);
        assert_eq!(v.mpdu_sinr_db(0, 600.0, 700.0), 30.0);
        assert!(v.mpdu_sinr_db(1, 600.0, 700.0) < 3.1);
        assert_eq!(v.mpdu_sinr_db(1, 1600.0, 1700.0), 30.0);
    }

    #[test]
    fn strong_interferer_mid_payload_kills_frame() {
        let lut = PerLut::generate();
        let rx = Reception {
            signal_dbm: -70.0,
            block_sinr_db: alloc::vec![20.0],
            block_channels: alloc::vec![alloc::vec![0]],
            preamble_us: 40.0,
            duration_us: 1000.0,
            beta_over_alpha: 1.0,
        };
        let c = CollisionSpec {
            start_us: 300.0,
            end_us: 900.0,
            interferer_dbm: -50.2,
            channels: alloc::vec![0],
            hits_header: false,
        };
        assert_eq!(apply_collision(&rx, &[c], &lut).frame_loss_prob, 1.0);
    }

    #[test]
    fn adc_offset_stays_in_hit_block() {
        let lut = PerLut::generate();
        let rx = Reception {
            signal_dbm: -60.0,
            block_sinr_db: alloc::vec![25.0, 25.0],
            block_channels: alloc::vec![alloc::vec![0, 1], alloc::vec![2, 3]],
            preamble_us: 40.0,
            duration_us: 1000.0,
            beta_over_alpha: 1.0,
        };
        let c = CollisionSpec {
            start_us: 0.0,
            end_us: 1000.0,
            interferer_dbm: -60.0,
            channels: alloc::vec![0],
            hits_header: false,
        };
        let v = apply_collision(&rx, &[c], &lut);
        assert!((v.block_sinr_db[0] - (25.0 - 3.010_299_956_639_812)).abs() < 1e-9);
        assert_eq!(v.block_sinr_db[1], 25.0);
    }

    #[test]
    fn effective_sinr_bounds() {
        let e = effective_sinr_db(&[10.0, 100.0, 1000.0]);
        assert!(e > 10.0 && e < 30.0);
        assert!((effective_sinr_db(&[100.0; 4]) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn bonus_capped() {
        assert_eq!(diversity_bonus_db(4, 4, 1.0), 1.0);
        assert_eq!(diversity_bonus_db(2, 4, 1.0), 0.5);
        assert_eq!(diversity_bonus_db(1, 4, 1.0), 0.0);
    }
}
