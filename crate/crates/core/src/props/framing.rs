//! Rate tables, PPDU timing, A-MPDU layouts and the closed-form MAC calculus.

use proptest::prelude::*;
use crate::analytics::{
    exchange_duration, mac_efficiency, saturation_throughput, AckScheme, ExchangeSpec, SaturationParams,
    SoundingScheme,
};
use crate::rates_framing::{
    bandwidths, build_ampdu_layout, default_preamble, lookup_mcs, max_streams, mcs_ladder, payload_symbols,
    ppdu_duration, AggScheme, Gi, Standard, TimingParams,
};

const STANDARDS: [Standard; 4] = [Standard::Ag, Standard::N, Standard::Ac, Standard::Ah];

#[test]
fn rates_strictly_increase_with_index() {
    for std_ in STANDARDS {
        for &bw in bandwidths(std_) {
            for ss in 1..=max_streams(std_) {
                for gi in [Gi::Long, Gi::Short] {
                    let ladder = mcs_ladder(std_, bw, ss, gi);
                    for w in ladder.windows(2) {
                        assert!(w[0].index < w[1].index);
                        assert!(w[0].data_rate_bps < w[1].data_rate_bps, "{std_} {bw} MHz {ss}ss: {:?}", w);
                    }
                }
            }
        }
    }
}

#[test]
fn ah_is_downclocked_ac() {
    let t_ah = TimingParams::new(Standard::Ah);
    let mut checked = 0;
    for b in [2u16, 4, 8, 16] {
        for ss in 1..=4u8 {
            for ah in mcs_ladder(Standard::Ah, b, ss, Gi::Long) {
                let Ok(ac) = lookup_mcs(Standard::Ac, 10 * b, ah.index, ss, Gi::Long) else {
                    continue;
                };
                assert_eq!(ah.n_dbps, ac.n_dbps);
                assert!((ah.data_rate_bps * 10.0 - ac.data_rate_bps).abs() < 1e-6 * ac.data_rate_bps);
                assert_eq!(ah.symbol_us(), 10.0 * ac.symbol_us());
                for octets in [1usize, 64, 256, 1500] {
                    let n = payload_symbols(&t_ah, ah.n_dbps, octets);
                    let d_ah = ppdu_duration(&t_ah, default_preamble(Standard::Ah), &ah, octets, 1);
                    let pre_ah = ppdu_duration(&t_ah, default_preamble(Standard::Ah), &ah, 0, 1);
                    assert_eq!(d_ah - pre_ah, n as f64 * ah.symbol_us());
                    // same bit count through the ac symbol clock is ten times faster
                    let ac_payload = n as f64 * ac.symbol_us();
                    assert!((d_ah - pre_ah - 10.0 * ac_payload).abs() < 1e-9);
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 20, "only {checked} pairs");
}

proptest! {
    #[test]
    fn ppdu_duration_is_affine_in_symbols(
        std_idx in 0usize..4,
        pick in any::<prop::sample::Index>(),
        octets in 1usize..20_000,
        ltf in 1usize..=4,
    ) {
        let std_ = STANDARDS[std_idx];
        let t = TimingParams::new(std_);
        let all: Vec<_> = bandwidths(std_)
            .iter()
            .flat_map(|&bw| mcs_ladder(std_, bw, 1, Gi::Long))
            .collect();
        let m = all[pick.index(all.len())];
        let fmt = default_preamble(std_);
        let d0 = ppdu_duration(&t, fmt, &m, octets, ltf);
        // n_dbps more octets is exactly eight more symbols
        let d1 = ppdu_duration(&t, fmt, &m, octets + m.n_dbps as usize, ltf);
        let sym = d1 - d0;
        prop_assert!((sym - 8.0 * m.symbol_us()).abs() < 1e-9, "{sym}");
        let n = payload_symbols(&t, m.n_dbps, octets) as f64;
        let pre = ppdu_duration(&t, fmt, &m, 0, ltf);
        prop_assert!((d0 - pre - n * m.symbol_us()).abs() < 1e-9);
        // bits pad up to whole symbols
        let bits = (t.service_bits + t.tail_bits) as f64 + 8.0 * octets as f64;
        prop_assert!(n * m.n_dbps as f64 >= bits && (n - 1.0) * (m.n_dbps as f64) < bits);
    }
}

#[test]
fn horizontal_layout_partitions_exhaustively() {
    let channels = [36u8, 40, 44, 48, 52, 56, 60, 64];
    for n_ch in [2usize, 4, 8] {
        for blocks in (1..=n_ch).filter(|b| n_ch % b == 0) {
            let scheme = if blocks == 1 { AggScheme::Vertical } else { AggScheme::Horizontal };
            for n in 0..=64 {
                let l = build_ampdu_layout(n, scheme, blocks, &channels[..n_ch]).unwrap();
                // one block per MPDU, contiguous runs, balanced sizes
                assert_eq!(l.assignment.len(), n);
                assert!(l.assignment.iter().all(|&b| b < blocks));
                assert!(l.assignment.windows(2).all(|w| w[0] <= w[1]));
                let sizes = l.block_sizes();
                assert_eq!(sizes.iter().sum::<usize>(), n);
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                assert!(hi - lo <= 1);
                // channels split into disjoint equal groups
                let mut seen: Vec<u8> = l.block_channels.concat();
                seen.sort();
                assert_eq!(seen, channels[..n_ch].to_vec());
                assert!(l.block_channels.iter().all(|c| c.len() == n_ch / blocks));
            }
        }
    }
    assert!(build_ampdu_layout(4, AggScheme::Horizontal, 3, &channels[..4]).is_err());
    assert!(build_ampdu_layout(4, AggScheme::Vertical, 2, &channels[..4]).is_err());
}

fn ah_specs() -> Vec<(u16, crate::rates_framing::Mcs)> {
    bandwidths(Standard::Ah)
        .iter()
        .flat_map(|&bw| mcs_ladder(Standard::Ah, bw, 1, Gi::Long).into_iter().map(move |m| (bw, m)))
        .collect()
}

proptest! {
    #[test]
    fn ack_procedures_are_strictly_ordered(pick in any::<prop::sample::Index>(), msdu in 1usize..2000) {
        let t = TimingParams::new(Standard::Ah);
        let all = ah_specs();
        let (_, m) = all[pick.index(all.len())];
        let d = |a| exchange_duration(&t, &ExchangeSpec::new(Standard::Ah, msdu, m).with_ack(a)).unwrap().total_us;
        let (n, s, u) = (d(AckScheme::Normal), d(AckScheme::Short), d(AckScheme::UltraShort));
        prop_assert!(u < s && s < n, "{u} {s} {n}");
    }

    #[test]
    fn efficiency_bounded_and_falls_with_rate(msdu in 1usize..2304, bw_i in 0usize..2) {
        for std_ in [Standard::Ag, Standard::N, Standard::Ac] {
            let t = TimingParams::new(std_);
            let bws = bandwidths(std_);
            let bw = bws[bw_i.min(bws.len() - 1)];
            let mut prev: Option<f64> = None;
            for m in mcs_ladder(std_, bw, 1, Gi::Long) {
                let e = mac_efficiency(&t, &ExchangeSpec::new(std_, msdu, m)).unwrap();
                prop_assert!(e.efficiency > 0.0 && e.efficiency <= 1.0);
                if let Some(p) = prev {
                    prop_assert!(e.efficiency <= p + 1e-12, "{std_} {bw} mcs {} {} > {p}", m.index, e.efficiency);
                }
                prev = Some(e.efficiency);
            }
        }
    }
}

#[test]
fn duration_plateau_once_payload_fits_minimum_symbols() {
    let t = TimingParams::new(Standard::N);
    let d = |bw, idx, ss| {
        let m = lookup_mcs(Standard::N, bw, idx, ss, Gi::Long).unwrap();
        exchange_duration(&t, &ExchangeSpec::new(Standard::N, 120, m)).unwrap().total_us
    };
    assert_eq!(d(20, 7, 2), 206.5);
    assert_eq!(d(40, 7, 4), 206.5);
}

#[test]
fn saturation_non_decreasing_in_interval() {
    let t = TimingParams::new(Standard::Ac);
    for scheme in [SoundingScheme::Mu, SoundingScheme::Su] {
        for (g, m, ant) in [(1, 2, 3), (1, 3, 3), (2, 2, 3), (1, 2, 4)] {
            let mut prev = 0.0;
            for iv in [5.0, 10.0, 20.0, 30.0, 40.0, 60.0, 100.0, 140.0, 500.0] {
                let r = saturation_throughput(&t, &SaturationParams::ch6(scheme, g, m, ant, iv)).unwrap();
                assert!(r.throughput_mbps >= prev - 1e-12, "{scheme:?} {g}/{m}/{ant} at {iv} ms");
                prev = r.throughput_mbps;
            }
        }
    }
}
