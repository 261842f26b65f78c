//! Closed-form exchange durations, MAC efficiency, saturation throughput and
//! 802.11ah station capacity.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mac_protocol::sounding::{bf_report_octets, FeedbackParams};
use crate::rates_framing::{
    ampdu_octets, default_preamble, legacy_frame_us, lookup_mcs, ltf_count, mcs_ladder, mpdu_octets,
    ppdu_duration, AccessCategory, Gi, Mcs, PreambleFormat, Standard, TimingParams, ACK_OCTETS, BAR_OCTETS,
    BA_OCTETS, BEACON_BODY_OCTETS, BF_POLL_OCTETS, FCS_OCTETS, NDPA_OCTETS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckScheme {
    Normal,
    Short,
    UltraShort,
    BlockAck,
}

impl AckScheme {
    pub fn name(self) -> &'static str {
        match self {
            AckScheme::Normal => "normal",
            AckScheme::Short => "short",
            AckScheme::UltraShort => "ultra_short",
            AckScheme::BlockAck => "block_ack",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessTiming {
    LegacyDifs,
    Aifs(AccessCategory),
}

/// Symbols of the short ACK (STF, LTF1 and SIG).
pub const SHORT_ACK_SYMBOLS: u32 = 5;
/// Stated ultra-short ACK air time with long GI (a standalone STF).
pub const ULTRA_SHORT_ACK_US: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeSpec {
    pub standard: Standard,
    pub msdu_octets: usize,
    pub mcs: Mcs,
    pub ack: AckScheme,
    pub aggregation: usize,
    pub access: AccessTiming,
    pub qos: bool,
    pub preamble: PreambleFormat,
    pub n_ltf: usize,
    /// Overrides the basic-rate rule for legacy control responses.
    pub ack_rate_bps: Option<f64>,
    /// Overrides the 802.11ah control-response MCS (lowest of the band by default).
    pub ack_mcs: Option<Mcs>,
    /// Use this MPDU size instead of deriving it from the MSDU.
    pub mpdu_override: Option<usize>,
}

impl ExchangeSpec {
    pub fn new(standard: Standard, msdu_octets: usize, mcs: Mcs) -> Self {
        let (access, qos) = match standard {
            Standard::Ag => (AccessTiming::LegacyDifs, false),
            _ => (AccessTiming::Aifs(AccessCategory::Be), true),
        };
        ExchangeSpec {
            standard,
            msdu_octets,
            mcs,
            ack: AckScheme::Normal,
            aggregation: 1,
            access,
            qos,
            preamble: default_preamble(standard),
            n_ltf: ltf_count(mcs.n_ss as usize),
            ack_rate_bps: None,
            ack_mcs: None,
            mpdu_override: None,
        }
    }

    pub fn with_ack(mut self, ack: AckScheme) -> Self {
        self.ack = ack;
        self
    }

    pub fn with_aggregation(mut self, n: usize) -> Self {
        self.aggregation = n;
        if n > 1 {
            self.ack = AckScheme::BlockAck;
        }
        self
    }

    pub fn payload_bits(&self) -> f64 {
        (self.aggregation * self.msdu_octets * 8) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeBreakdown {
    pub access_us: f64,
    pub data_us: f64,
    pub sifs_us: f64,
    pub ack_us: f64,
    pub total_us: f64,
}

fn lowest_mcs(standard: Standard, bandwidth_mhz: u16, gi: Gi) -> Result<Mcs> {
    mcs_ladder(standard, bandwidth_mhz, 1, gi)
        .into_iter()
        .next()
        .ok_or(Error::UndefinedMcs {
            bandwidth_mhz,
            index: 0,
            n_ss: 1,
        })
}

/// Air time of a control response of `octets` following a data PPDU at `mcs`.
pub fn control_response_us(t: &TimingParams, mcs: &Mcs, octets: usize, rate_override: Option<f64>, ah_mcs: Option<Mcs>) -> Result<f64> {
    if mcs.standard == Standard::Ah {
        let m = match ah_mcs {
            Some(m) => m,
            None => lowest_mcs(Standard::Ah, mcs.bandwidth_mhz, mcs.gi)?,
        };
        Ok(ppdu_duration(t, PreambleFormat::S1g, &m, octets, 1))
    } else {
        let rate = rate_override.unwrap_or_else(|| t.control_rate_bps(mcs.data_rate_bps));
        Ok(legacy_frame_us(t, octets, rate))
    }
}

/// Air time of the acknowledgment closing `spec`.
pub fn ack_us(t: &TimingParams, spec: &ExchangeSpec) -> Result<f64> {
    let ah = spec.standard == Standard::Ah;
    let sym = if ah {
        t.symbol_us * if spec.mcs.gi == Gi::Short { 0.9 } else { 1.0 }
    } else {
        4.0
    };
    match spec.ack {
        AckScheme::Normal => control_response_us(t, &spec.mcs, ACK_OCTETS, spec.ack_rate_bps, spec.ack_mcs),
        AckScheme::BlockAck => control_response_us(t, &spec.mcs, BA_OCTETS, spec.ack_rate_bps, spec.ack_mcs),
        AckScheme::Short => Ok(if ah {
            SHORT_ACK_SYMBOLS as f64 * sym
        } else {
            t.l_stf_us + t.l_ltf_us + t.l_sig_us
        }),
        AckScheme::UltraShort => Ok(if ah {
            ULTRA_SHORT_ACK_US * sym / t.symbol_us
        } else {
            t.l_stf_us
        }),
    }
}

fn access_us(t: &TimingParams, access: AccessTiming) -> f64 {
    match access {
        AccessTiming::LegacyDifs => t.legacy_mean_access_us(),
        AccessTiming::Aifs(ac) => t.mean_access_us(ac),
    }
}

/// Channel access + data PPDU + SIFS + acknowledgment.
pub fn exchange_duration(t: &TimingParams, spec: &ExchangeSpec) -> Result<ExchangeBreakdown> {
    let mpdu = match spec.mpdu_override {
        Some(m) => m,
        None => mpdu_octets(spec.msdu_octets, spec.standard, spec.qos)?,
    };
    let psdu = if spec.aggregation > 1 {
        ampdu_octets(&alloc::vec![mpdu; spec.aggregation])
    } else {
        mpdu
    };
    let access = access_us(t, spec.access);
    let data = ppdu_duration(t, spec.preamble, &spec.mcs, psdu, spec.n_ltf);
    let ack = ack_us(t, spec)?;
    let sifs = t.sifs_us as f64;
    Ok(ExchangeBreakdown {
        access_us: access,
        data_us: data,
        sifs_us: sifs,
        ack_us: ack,
        total_us: access + data + sifs + ack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub throughput_bps: f64,
    pub efficiency: f64,
    pub duration_us: f64,
}

/// Payload throughput of one exchange and its ratio to the PHY rate.
pub fn mac_efficiency(t: &TimingParams, spec: &ExchangeSpec) -> Result<Efficiency> {
    let d = exchange_duration(t, spec)?;
    let throughput_bps = spec.payload_bits() / (d.total_us * 1e-6);
    Ok(Efficiency {
        throughput_bps,
        efficiency: throughput_bps / spec.mcs.data_rate_bps,
        duration_us: d.total_us,
    })
}

/// One row of the data+ACK illustration grid.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub label: String,
    pub spec: ExchangeSpec,
}

/// The sixteen data+ACK exchanges: 802.11a/g at 6/24/54 Mbps and 802.11n at
/// 6.5/130/540 Mbps with 120- and 1500-octet MSDUs, plus 4- and 20-MPDU
/// aggregates at 130 and 540 Mbps.
pub fn appendix_c_grid() -> Vec<GridRow> {
    use alloc::format;
    let mut rows = Vec::new();
    let ag = [(0i8, "6"), (4, "24"), (7, "54")];
    for msdu in [120usize, 1500] {
        for (idx, label) in ag {
            let m = lookup_mcs(Standard::Ag, 20, idx, 1, Gi::Long).unwrap();
            rows.push(GridRow {
                label: format!("a/g {msdu}o @{label}"),
                spec: ExchangeSpec::new(Standard::Ag, msdu, m),
            });
        }
    }
    let n_rates = [(20u16, 0i8, 1u8, "6.5"), (20, 7, 2, "130"), (40, 7, 4, "540")];
    for msdu in [120usize, 1500] {
        for (bw, idx, ss, label) in n_rates {
            let m = lookup_mcs(Standard::N, bw, idx, ss, Gi::Long).unwrap();
            rows.push(GridRow {
                label: format!("n {msdu}o @{label}"),
                spec: ExchangeSpec::new(Standard::N, msdu, m),
            });
        }
    }
    for agg in [4usize, 20] {
        for (bw, idx, ss, label) in &n_rates[1..] {
            let m = lookup_mcs(Standard::N, *bw, *idx, *ss, Gi::Long).unwrap();
            rows.push(GridRow {
                label: format!("n {agg}x1500o @{label}"),
                spec: ExchangeSpec::new(Standard::N, 1500, m).with_aggregation(agg),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoundingScheme {
    Su,
    Mu,
}

/// Inputs of the saturation-throughput calculus.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationParams {
    pub scheme: SoundingScheme,
    pub n_groups: usize,
    pub members: usize,
    pub ap_antennas: usize,
    pub streams_per_user: usize,
    pub sounding_interval_ms: f64,
    pub mcs: Mcs,
    pub msdu_octets: usize,
    pub max_aggregation: usize,
    pub txop_limit_us: u32,
    pub feedback: FeedbackParams,
    pub beacon_interval_ms: Option<f64>,
}

impl SaturationParams {
    /// 802.11ac 20 MHz, one stream per user at MCS 8, 1500-octet MSDUs, 3008 us TxOP.
    pub fn ch6(scheme: SoundingScheme, n_groups: usize, members: usize, ap_antennas: usize, interval_ms: f64) -> Self {
        let mcs = lookup_mcs(Standard::Ac, 20, 8, 1, Gi::Long).unwrap();
        SaturationParams {
            scheme,
            n_groups,
            members,
            ap_antennas,
            streams_per_user: 1,
            sounding_interval_ms: interval_ms,
            mcs,
            msdu_octets: 1500,
            max_aggregation: match scheme {
                SoundingScheme::Mu => 17,
                SoundingScheme::Su => 18,
            },
            txop_limit_us: 3008,
            feedback: match scheme {
                SoundingScheme::Mu => FeedbackParams::mu(),
                SoundingScheme::Su => FeedbackParams::su(),
            },
            beacon_interval_ms: Some(100.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationBreakdown {
    pub cycle_us: f64,
    pub cycle_payload_bits: f64,
    pub sounding_us_per_interval: f64,
    pub beacon_share: f64,
    pub mpdus_per_user: usize,
    pub throughput_mbps: f64,
}

/// Airtime of one beacon including its channel access.
pub fn beacon_airtime_us(t: &TimingParams) -> f64 {
    let octets = BEACON_BODY_OCTETS + 24 + FCS_OCTETS;
    let rate = t.basic_rates_bps.first().copied().unwrap_or(6e6);
    t.mean_access_us(AccessCategory::Be) + legacy_frame_us(t, octets, rate)
}

/// Duration of one sounding sequence (NDPA, NDP, reports and polls), access included.
pub fn sounding_sequence_us(t: &TimingParams, ap_antennas: usize, members: usize, streams_per_user: usize, fb: &FeedbackParams, mu: bool, data_rate_bps: f64) -> f64 {
    let rate = t.control_rate_bps(data_rate_bps);
    let sifs = t.sifs_us as f64;
    let ndpa = legacy_frame_us(t, NDPA_OCTETS, rate);
    let ndp = crate::rates_framing::preamble_us(t, PreambleFormat::Vht, 20, ltf_count(ap_antennas));
    let report = legacy_frame_us(
        t,
        bf_report_octets(ap_antennas, streams_per_user, fb, mu),
        rate,
    );
    let poll = legacy_frame_us(t, BF_POLL_OCTETS, rate);
    t.mean_access_us(AccessCategory::Be)
        + ndpa
        + sifs
        + ndp
        + sifs
        + report
        + (members.saturating_sub(1)) as f64 * (sifs + poll + sifs + report)
}

/// Payload per TxOP cycle over cycle duration, less sounding and beacon overhead.
pub fn saturation_throughput(t: &TimingParams, p: &SaturationParams) -> Result<SaturationBreakdown> {
    let users = match p.scheme {
        SoundingScheme::Mu => p.members,
        SoundingScheme::Su => 1,
    };
    let total_streams = users * p.streams_per_user;
    if total_streams > 8 {
        return Err(Error::StreamOverflow {
            streams: total_streams,
        });
    }
    let mpdu = mpdu_octets(p.msdu_octets, p.mcs.standard, true)?;
    let n_ltf = ltf_count(total_streams);
    let mut n = p.max_aggregation.max(1);
    let ppdu = |n: usize| ppdu_duration(t, PreambleFormat::Vht, &p.mcs, ampdu_octets(&alloc::vec![mpdu; n]), n_ltf);
    while n > 1 && ppdu(n) > p.txop_limit_us as f64 {
        n -= 1;
    }
    let rate = t.control_rate_bps(p.mcs.data_rate_bps);
    let sifs = t.sifs_us as f64;
    let ba = legacy_frame_us(t, BA_OCTETS, rate);
    let bar = legacy_frame_us(t, BAR_OCTETS, rate);
    let cycle = t.mean_access_us(AccessCategory::Be)
        + ppdu(n)
        + sifs
        + ba
        + (users - 1) as f64 * (sifs + bar + sifs + ba);
    let payload = (users * n * p.msdu_octets * 8) as f64;
    let sounding = match p.scheme {
        SoundingScheme::Mu => {
            p.n_groups as f64
                * sounding_sequence_us(t, p.ap_antennas, p.members, p.streams_per_user, &p.feedback, true, p.mcs.data_rate_bps)
        }
        SoundingScheme::Su => {
            (p.n_groups * p.members) as f64
                * sounding_sequence_us(t, p.ap_antennas, 1, p.streams_per_user, &p.feedback, false, p.mcs.data_rate_bps)
        }
    };
    let beacon_share = match p.beacon_interval_ms {
        Some(ms) => beacon_airtime_us(t) / (ms * 1000.0),
        None => 0.0,
    };
    let useful = (1.0 - sounding / (p.sounding_interval_ms * 1000.0) - beacon_share).max(0.0);
    Ok(SaturationBreakdown {
        cycle_us: cycle,
        cycle_payload_bits: payload,
        sounding_us_per_interval: sounding,
        beacon_share,
        mpdus_per_user: n,
        throughput_mbps: payload / cycle * useful,
    })
}

/// One cell of the sounding-interval saturation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationCell {
    pub scenario: usize,
    pub scheme: SoundingScheme,
    pub interval_ms: f64,
    pub throughput_mbps: f64,
}

/// Group structure of the four sounding scenarios: (groups, members, AP antennas).
pub const CH6_SCENARIOS: [(usize, usize, usize); 4] = [(1, 2, 3), (1, 3, 3), (2, 2, 3), (1, 2, 4)];

/// MU at 10/20/30/40 ms and SU at 100/140 ms for the four scenarios.
pub fn ch6_saturation_grid(t: &TimingParams) -> Vec<SaturationCell> {
    let mut out = Vec::new();
    for (scheme, intervals) in [
        (SoundingScheme::Mu, &[10.0, 20.0, 30.0, 40.0][..]),
        (SoundingScheme::Su, &[100.0, 140.0][..]),
    ] {
        for &iv in intervals {
            for (i, &(g, m, ant)) in CH6_SCENARIOS.iter().enumerate() {
                let p = SaturationParams::ch6(scheme, g, m, ant, iv);
                let r = saturation_throughput(t, &p).unwrap();
                out.push(SaturationCell {
                    scenario: i + 1,
                    scheme,
                    interval_ms: iv,
                    throughput_mbps: r.throughput_mbps,
                });
            }
        }
    }
    out
}

/// Short-beacon and long-beacon sizes used by the 802.11ah capacity accounting.
pub const S1G_SHORT_BEACON_OCTETS: usize = 40;
pub const S1G_LONG_BEACON_OCTETS: usize = BEACON_BODY_OCTETS + 12;
pub const S1G_SHORT_BEACON_PERIOD_MS: f64 = 100.0;
pub const S1G_LONG_BEACON_PERIOD_MS: f64 = 10_000.0;

/// Fraction of air time taken by 802.11ah beacons at this bandwidth.
pub fn s1g_beacon_share(t: &TimingParams, bandwidth_mhz: u16) -> Result<f64> {
    let m = lowest_mcs(Standard::Ah, bandwidth_mhz, Gi::Long)?;
    let access = t.mean_access_us(AccessCategory::Be);
    let short = access + ppdu_duration(t, PreambleFormat::S1g, &m, S1G_SHORT_BEACON_OCTETS, 1);
    let long = access + ppdu_duration(t, PreambleFormat::S1g, &m, S1G_LONG_BEACON_OCTETS, 1);
    let per_long = S1G_LONG_BEACON_PERIOD_MS / S1G_SHORT_BEACON_PERIOD_MS;
    Ok((short * (per_long - 1.0) + long) / (S1G_LONG_BEACON_PERIOD_MS * 1000.0))
}

/// 802.11ah single-MSDU exchange with no aggregation, BE access and the compressed header.
pub fn ah_exchange(msdu_octets: usize, mcs: Mcs, ack: AckScheme) -> ExchangeSpec {
    ExchangeSpec::new(Standard::Ah, msdu_octets, mcs).with_ack(ack)
}

/// Stations that each send one MSDU per `refresh_cycle_s` without collisions.
pub fn max_active_stations(t: &TimingParams, ack: AckScheme, bandwidth_mhz: u16, mcs: &Mcs, msdu_octets: usize, refresh_cycle_s: f64) -> Result<u64> {
    let spec = ah_exchange(msdu_octets, *mcs, ack);
    let d = exchange_duration(t, &spec)?;
    let share = s1g_beacon_share(t, bandwidth_mhz)?;
    Ok(libm::floor(refresh_cycle_s * 1e6 * (1.0 - share) / d.total_us) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityRow {
    pub mcs_index: i8,
    pub scheme: AckScheme,
    pub duration_us: f64,
    pub max_stations: u64,
}

/// Durations and capacities for every MCS of the band and every ACK procedure.
pub fn ah_capacity_table(t: &TimingParams, bandwidth_mhz: u16, msdu_octets: usize, refresh_cycle_s: f64) -> Result<Vec<CapacityRow>> {
    let mut out = Vec::new();
    for m in mcs_ladder(Standard::Ah, bandwidth_mhz, 1, Gi::Long) {
        for scheme in [AckScheme::Normal, AckScheme::Short, AckScheme::UltraShort] {
            let d = exchange_duration(t, &ah_exchange(msdu_octets, m, scheme))?;
            out.push(CapacityRow {
                mcs_index: m.index,
                scheme,
                duration_us: d.total_us,
                max_stations: max_active_stations(t, scheme, bandwidth_mhz, &m, msdu_octets, refresh_cycle_s)?,
            });
        }
    }
    Ok(out)
}

/// Largest capacity over all MCSs for one ACK procedure.
pub fn best_capacity(rows: &[CapacityRow], scheme: AckScheme) -> u64 {
    rows.iter()
        .filter(|r| r.scheme == scheme)
        .map(|r| r.max_stations)
        .max()
        .unwrap_or(0)
}
