//! Channel model and link abstraction invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use crate::channel::{ChannelProfile, ChannelState, LinkBudget};
use crate::cmat::C64;
use crate::link_abstraction::{
    apply_collision, draw_fcs, legacy_rate_family, mcs_family, CollisionSpec, MpduSlot, PerLut, Reception,
};
use crate::rates_framing::{lookup_mcs, mcs_ladder, Gi, Standard};

proptest! {
    #[test]
    fn reverse_link_is_transpose(seed in any::<u64>(), tx in 1usize..=4, rx in 1usize..=4, dt in 0u64..2_000_000) {
        let mut ch = ChannelState::new(seed, 1, tx, rx, 8, ChannelProfile::default());
        ch.evolve(dt);
        for (h, r) in ch.h.iter().zip(ch.reverse()) {
            prop_assert_eq!(h.transpose(), r);
        }
    }

    #[test]
    fn pathloss_never_amplifies(d in 0.1f64..10_000.0, ghz in 0.5f64..6.0, tx in -10.0f64..30.0, loss in 0.0f64..20.0) {
        let b = LinkBudget {
            tx_power_dbm: tx,
            system_loss_db: loss,
            carrier_freq_ghz: ghz,
            ..LinkBudget::default()
        };
        prop_assert!(b.rx_power_dbm(d) <= tx - loss);
        prop_assert!(b.rx_power_dbm(d * 1.5) < b.rx_power_dbm(d));
    }
}

fn adjacent_correlation(rms_ns: f64) -> f64 {
    let profile = ChannelProfile {
        rms_delay_ns: rms_ns,
        ..ChannelProfile::default()
    };
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for seed in 0..400 {
        let ch = ChannelState::new(seed, 0, 1, 1, 64, profile);
        for k in 0..63 {
            let a = ch.h[k][(0, 0)];
            let b = ch.h[k + 1][(0, 0)];
            num += a * b.conj();
            den += a.norm_sqr();
        }
    }
    num.norm() / den
}

#[test]
fn frequency_correlation_falls_with_delay_spread() {
    let rms = [0.0, 10.0, 30.0, 60.0, 120.0];
    let c: Vec<f64> = rms.iter().map(|&r| adjacent_correlation(r)).collect();
    assert!((c[0] - 1.0).abs() < 1e-12);
    for w in c.windows(2) {
        assert!(w[1] < w[0], "{c:?}");
    }
}

fn success_prob(lut: &PerLut, sir_db: f64, start_us: f64) -> f64 {
    let rx = Reception {
        signal_dbm: -50.0,
        block_sinr_db: vec![25.0],
        block_channels: vec![vec![0]],
        preamble_us: 40.0,
        duration_us: 1000.0,
        beta_over_alpha: 1.0,
    };
    let c = CollisionSpec {
        start_us,
        end_us: 800.0,
        interferer_dbm: -50.0 - sir_db,
        channels: vec![0],
        hits_header: start_us < 40.0,
    };
    let v = apply_collision(&rx, &[c], lut);
    let fam = 4;
    (1.0 - v.frame_loss_prob) * (1.0 - lut.per_family(fam, v.mpdu_sinr_db(0, 100.0, 300.0), 1500))
}

proptest! {
    #[test]
    fn success_non_decreasing_in_sir(a in -20.0f64..40.0, b in -20.0f64..40.0, start in 0.0f64..600.0) {
        let lut = PerLut::generate();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(success_prob(&lut, hi, start) >= success_prob(&lut, lo, start) - 1e-12);
    }
}

#[test]
fn no_collision_layouts_agree_at_equal_sinr() {
    let lut = PerLut::generate();
    for sinr in [5.0, 12.0, 20.0, 30.0] {
        let vertical = Reception {
            signal_dbm: -50.0,
            block_sinr_db: vec![sinr],
            block_channels: vec![vec![0, 1, 2, 3]],
            preamble_us: 40.0,
            duration_us: 2000.0,
            beta_over_alpha: 1.0,
        };
        let horizontal = Reception {
            block_sinr_db: vec![sinr, sinr],
            block_channels: vec![vec![0, 1], vec![2, 3]],
            ..vertical.clone()
        };
        let v = apply_collision(&vertical, &[], &lut);
        let h = apply_collision(&horizontal, &[], &lut);
        assert_eq!(v.frame_loss_prob, 0.0);
        assert_eq!(h.frame_loss_prob, 0.0);
        for b in 0..2 {
            assert_eq!(v.mpdu_sinr_db(0, 100.0, 200.0), h.mpdu_sinr_db(b, 100.0, 200.0));
        }
    }
}

#[test]
fn fcs_draws_are_independent_bernoulli() {
    let lut = PerLut::generate();
    let fam = 4;
    // SINR where a 1500-octet MPDU fails a third of the time
    let (mut lo, mut hi) = (-10.0, 50.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if lut.per_family(fam, mid, 1500) > 1.0 / 3.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sinr = 0.5 * (lo + hi);
    let rx = Reception {
        signal_dbm: -50.0,
        block_sinr_db: vec![sinr],
        block_channels: vec![vec![0]],
        preamble_us: 40.0,
        duration_us: 1000.0,
        beta_over_alpha: 1.0,
    };
    let v = apply_collision(&rx, &[], &lut);
    let slots: Vec<MpduSlot> = (0..4)
        .map(|i| MpduSlot {
            block: 0,
            from_us: 40.0 + 200.0 * i as f64,
            to_us: 240.0 + 200.0 * i as f64,
            octets: 1500,
        })
        .collect();
    let p = lut.per_family(fam, sinr, 1500);
    assert!((p - 1.0 / 3.0).abs() < 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 40_000;
    let mut fails = [0u32; 4];
    let mut both = 0u32;
    for _ in 0..n {
        let (lost, oks) = draw_fcs(&v, &slots, fam, &lut, &mut rng);
        assert!(!lost);
        for (f, ok) in fails.iter_mut().zip(&oks) {
            *f += u32::from(!ok);
        }
        both += u32::from(!oks[0] && !oks[1]);
    }
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    for f in fails {
        assert!((f as f64 / n as f64 - p).abs() < 5.0 * sd);
    }
    let joint = both as f64 / n as f64;
    assert!((joint - p * p).abs() < 5.0 * (p * p * (1.0 - p * p) / n as f64).sqrt(), "{joint} vs {}", p * p);
}

#[test]
fn control_responses_are_more_robust_than_data() {
    let lut = PerLut::generate();
    let ack = legacy_rate_family(6e6);
    for m in mcs_ladder(Standard::Ac, 20, 1, Gi::Long) {
        let fam = mcs_family(&m).unwrap();
        for snr in [0.0, 5.0, 10.0, 20.0, 30.0, 40.0] {
            assert!(lut.per_family(ack, snr, 14) <= lut.per_family(fam, snr, 14) + 1e-15);
        }
    }
    let m = lookup_mcs(Standard::N, 20, 7, 1, Gi::Long).unwrap();
    assert!(lut.per_family(ack, 30.0, 14) <= lut.mpdu_error_prob(30.0, &m, 1500).unwrap());
}
