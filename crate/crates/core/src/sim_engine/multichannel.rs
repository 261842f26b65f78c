//! TxOP-level run of one saturated link spread over several channels,
//! comparing vertical and horizontal A-MPDU layouts under random
//! per-channel collisions.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::config::{Direction, ScenarioConfig};
use super::des::build_ladder;
use super::metrics::{Counters, FlowSummary, Metric, MetricsLog};
use crate::channel::{ChannelProfile, ChannelState};
use crate::cmat::{CMat, C64};
use crate::error::Result;
use crate::link_abstraction::{
    apply_collision, diversity_bonus_db, draw_fcs, effective_sinr_db, mcs_family, CollisionSpec, MpduSlot, PerLut,
    Reception,
};
use crate::mac_protocol::amrr::{Amrr, AmrrConfig};
use crate::precoding::{db_to_lin, evaluate_sinr, CtiMode, PrecoderScheme, PrecoderSet};
use crate::rates_framing::{
    ampdu_subframe_octets, build_ampdu_layout, legacy_frame_us, ltf_count, ppdu_duration, preamble_us, Gi, Mcs,
    PreambleFormat, Standard, TimingParams, BA_OCTETS,
};
use crate::rng::stream;

/// Received level of the wanted signal; only differences to it matter.
const SIGNAL_DBM: f64 = -50.0;

/// Stream SINRs (linear) of every subcarrier of one channel under open-loop
/// transmission with a linear MMSE receiver.
fn channel_sinrs(h: &[CMat], n_ss: usize, snr_db: f64) -> Vec<f64> {
    let n_t = h[0].cols;
    let k = n_ss.clamp(1, n_t);
    let s = libm::sqrt(n_t as f64 / k as f64);
    let set = PrecoderSet {
        scheme: PrecoderScheme::Independent,
        w: vec![CMat::from_fn(n_t, k, |r, c| if r == c { C64::new(s, 0.0) } else { C64::new(0.0, 0.0) })],
        csi_time_us: 0,
    };
    let a = libm::sqrt(db_to_lin(snr_db) / n_t as f64);
    let mut out = Vec::with_capacity(h.len() * k);
    for hk in h {
        let r = evaluate_sinr(&[hk.scale_re(a)], &set, 1.0, CtiMode::NoCti);
        out.extend_from_slice(&r[0].streams);
    }
    out
}

pub fn run(cfg: &ScenarioConfig, lut: &PerLut) -> Result<MetricsLog> {
    let mc = &cfg.multichannel;
    let seed = cfg.sim.seed.unwrap_or(0);
    let t = TimingParams::new(Standard::N);
    let channels: Vec<u8> = (0..mc.channels as u8).collect();
    let n_mpdus = mc.channels * mc.mpdus_per_channel;
    let layout = build_ampdu_layout(n_mpdus, mc.scheme, mc.blocks, &channels)?;
    let profile = ChannelProfile {
        rms_delay_ns: cfg.channel.rms_delay_ns,
        coherence_ms: cfg.channel.coherence_ms,
        ..ChannelProfile::default()
    };
    let mut chans: Vec<ChannelState> = channels
        .iter()
        .map(|&c| ChannelState::new(seed, c as u64, mc.antennas, mc.antennas, cfg.channel.subcarriers, profile))
        .collect();
    let ladder = build_ladder(Standard::N, 20, mc.n_ss, 7, Gi::Long);
    let ladder: Vec<Mcs> = ladder.into_iter().filter(|m| m.n_ss == mc.n_ss).collect();
    let fixed = mc.fixed_mcs.map(|i| ladder.iter().position(|m| m.index == i).unwrap_or(0));
    let mut amrr = Amrr::new(
        AmrrConfig {
            counts: cfg.mac.amrr_counts,
            min_success: cfg.mac.amrr_min_success,
            interval_us: cfg.mac.amrr_interval_ms * 1000,
            ..AmrrConfig::default()
        },
        ladder.len(),
        fixed.unwrap_or(cfg.mac.amrr_start.min(ladder.len() - 1)),
    );
    let mut rng = stream(seed, "multichannel", 0);
    let mut backoff_rng = stream(seed, "backoff", 0);
    let cw = t.cw_min(cfg.mac.ac);
    let aifs = t.aifs(cfg.mac.ac) as u64;
    let sifs = t.sifs_us as f64;
    let n_ltf = ltf_count(mc.n_ss as usize);
    let pre = preamble_us(&t, PreambleFormat::HtMixed, 20, n_ltf);
    let bits_per_mpdu = 8 * mc.mpdu_octets as u64;

    // failure count of every queued MPDU; the queue is kept full
    let mut queue: VecDeque<u32> = VecDeque::new();
    let mut counters = Counters::default();
    let mut log = MetricsLog::default();
    let mut now: u64 = 0;
    let mut delivered_bits = 0u64;
    let mut fcs_fail = 0u64;
    let mut fcs_total = 0u64;
    let mut rate_sum = 0.0;
    let mut collisions = 0u64;

    for _ in 0..mc.n_txops {
        while queue.len() < n_mpdus {
            queue.push_back(0);
            counters.generated += 1;
        }
        if cfg.channel.reseed_per_txop {
            for c in chans.iter_mut() {
                c.redraw();
            }
        }
        let access = aifs + backoff_rng.random_range(0..=cw) as u64 * t.slot_us as u64;
        now += access;
        for c in chans.iter_mut() {
            c.advance_to(now);
        }
        let head = *queue.front().unwrap();
        let r = match fixed {
            Some(r) => r,
            None => amrr.rate_for_attempt(head).unwrap_or(0),
        };
        let per_ch = ladder[r];
        let fam = mcs_family(&per_ch)?;
        let ch_sinrs: Vec<Vec<f64>> = chans
            .iter()
            .map(|c| channel_sinrs(&c.h, mc.n_ss as usize, mc.snr_db))
            .collect();

        let sizes = layout.block_sizes();
        let mut block_sinr = Vec::with_capacity(layout.n_blocks);
        let mut block_dur = Vec::with_capacity(layout.n_blocks);
        let mut block_mcs = Vec::with_capacity(layout.n_blocks);
        for (b, chs) in layout.block_channels.iter().enumerate() {
            let all: Vec<f64> = chs.iter().flat_map(|&c| ch_sinrs[c as usize].iter().copied()).collect();
            block_sinr.push(effective_sinr_db(&all) + diversity_bonus_db(chs.len(), mc.channels, mc.diversity_cap_db));
            let m = Mcs::custom(Standard::N, 20 * chs.len() as u16, per_ch.n_dbps * chs.len() as u32, Gi::Long);
            let octets = sizes[b] * ampdu_subframe_octets(mc.mpdu_octets);
            block_dur.push(ppdu_duration(&t, PreambleFormat::HtMixed, &m, octets, n_ltf));
            block_mcs.push(m);
        }
        let ppdu = block_dur.iter().copied().fold(0.0, f64::max);

        let mut specs = Vec::new();
        for &c in &channels {
            if rng.random::<f64>() < mc.p_collision {
                specs.push(CollisionSpec {
                    start_us: 0.0,
                    end_us: ppdu,
                    interferer_dbm: SIGNAL_DBM - mc.sir_db,
                    channels: vec![c],
                    hits_header: mc.hits_header,
                });
            }
        }
        if !specs.is_empty() {
            collisions += 1;
            log.push(now, 1, Direction::Down, Metric::Collision, mc.sir_db);
        }
        let rx = Reception {
            signal_dbm: SIGNAL_DBM,
            block_sinr_db: block_sinr,
            block_channels: layout.block_channels.clone(),
            preamble_us: pre,
            duration_us: ppdu,
            beta_over_alpha: cfg.phy.beta_over_alpha,
        };
        let v = apply_collision(&rx, &specs, lut);

        // MPDU spans inside each block
        let mut offset = vec![0usize; layout.n_blocks];
        let mut slots = Vec::with_capacity(n_mpdus);
        let sub = ampdu_subframe_octets(mc.mpdu_octets);
        for &b in &layout.assignment {
            let m = &block_mcs[b];
            let sym = m.symbol_us();
            let nd = m.n_dbps as f64;
            let s = t.service_bits as f64;
            slots.push(MpduSlot {
                block: b,
                from_us: pre + libm::floor((s + 8.0 * (offset[b] * sub) as f64) / nd) * sym,
                to_us: pre + libm::ceil((s + 8.0 * ((offset[b] + 1) * sub) as f64) / nd) * sym,
                octets: mc.mpdu_octets,
            });
            offset[b] += 1;
        }
        let (_, outcomes) = draw_fcs(&v, &slots, fam, lut, &mut rng);

        let ba = legacy_frame_us(&t, BA_OCTETS, t.control_rate_bps(per_ch.data_rate_bps));
        now += libm::ceil(ppdu + sifs + ba) as u64;

        if fixed.is_none() {
            amrr.on_result(&outcomes);
            amrr.tick(now);
        }
        let mut back = Vec::new();
        let mut bits = 0;
        for (ok, failures) in outcomes.iter().zip(queue.drain(..n_mpdus)) {
            fcs_total += 1;
            if *ok {
                counters.delivered += 1;
                bits += bits_per_mpdu;
            } else {
                fcs_fail += 1;
                let f = failures + 1;
                if fixed.is_none() && amrr.rate_for_attempt(f).is_none() {
                    counters.dropped += 1;
                } else {
                    back.push(f);
                }
            }
        }
        for f in back.into_iter().rev() {
            queue.push_front(f);
        }
        delivered_bits += bits;
        rate_sum += per_ch.data_rate_bps * mc.channels as f64;
        log.push(now, 1, Direction::Down, Metric::DeliveredBits, bits as f64);
        log.push(now, 1, Direction::Down, Metric::PhyRate, per_ch.data_rate_bps * mc.channels as f64);
    }
    counters.queued = queue.len() as u64;

    let dur_s = now as f64 * 1e-6;
    let thr = if dur_s > 0.0 { delivered_bits as f64 / dur_s } else { 0.0 };
    log.summary.duration_s = dur_s;
    log.summary.counters = counters;
    log.summary.delivered_bits = delivered_bits;
    log.summary.throughput_bps = thr;
    log.summary.collisions = collisions;
    log.summary.txops = mc.n_txops as u64;
    log.summary.exchanges = mc.n_txops as u64;
    log.summary.conservation_violations = u64::from(!counters.balanced());
    log.summary.flows = vec![FlowSummary {
        station: 1,
        direction: Direction::Down,
        delivered_bits,
        throughput_bps: thr,
        mean_phy_rate_bps: rate_sum / mc.n_txops.max(1) as f64,
        retry_ratio: fcs_fail as f64 / fcs_total.max(1) as f64,
        drops: counters.dropped,
    }];
    let window = cfg.sim.window_ms * 1000;
    if now >= window {
        log.add_throughput_series(now, window, cfg.sim.sample_ms * 1000);
    }
    Ok(log)
}
