//! MCS catalogue, timing constants and frame-duration calculus for
//! 802.11a/g, 802.11n, 802.11ac and 802.11ah.
//!
//! Rates are held as data bits per OFDM symbol (`n_dbps`), which keeps every
//! tabulated long-GI rate exact and makes the short-GI rate exactly 10/9 of it.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Standard {
    Ag,
    N,
    Ac,
    Ah,
}

impl Standard {
    pub fn name(self) -> &'static str {
        match self {
            Standard::Ag => "a/g",
            Standard::N => "n",
            Standard::Ac => "ac",
            Standard::Ah => "ah",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "a/g" | "ag" | "a" | "g" => Some(Standard::Ag),
            "n" => Some(Standard::N),
            "ac" => Some(Standard::Ac),
            "ah" => Some(Standard::Ah),
            _ => None,
        }
    }
}

impl fmt::Display for Standard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gi {
    Long,
    Short,
}

impl Gi {
    pub fn name(self) -> &'static str {
        match self {
            Gi::Long => "long",
            Gi::Short => "short",
        }
    }
}

/// One modulation-and-coding entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mcs {
    pub standard: Standard,
    pub bandwidth_mhz: u16,
    /// `-1` is the 802.11ah 1 MHz "MCS0 Rep2" entry.
    pub index: i8,
    pub n_ss: u8,
    pub gi: Gi,
    pub data_rate_bps: f64,
    /// Data bits per OFDM symbol.
    pub n_dbps: u32,
}

impl Mcs {
    /// An entry outside the tables, e.g. a quoted rate such as 600 kbps.
    pub fn custom(standard: Standard, bandwidth_mhz: u16, n_dbps: u32, gi: Gi) -> Self {
        let data_rate_bps = n_dbps as f64 * 1e6 / symbol_us(standard, gi);
        Mcs {
            standard,
            bandwidth_mhz,
            index: 0,
            n_ss: 1,
            gi,
            data_rate_bps,
            n_dbps,
        }
    }

    pub fn symbol_us(&self) -> f64 {
        symbol_us(self.standard, self.gi)
    }

    pub fn long_gi_rate_bps(&self) -> f64 {
        self.n_dbps as f64 * 1e6 / symbol_us(self.standard, Gi::Long)
    }

    /// Modulation order (bits per subcarrier) and coding rate of the entry.
    pub fn modulation(&self) -> (u8, u8, u8) {
        modulation_of(self.standard, self.index)
    }
}

fn symbol_us(standard: Standard, gi: Gi) -> f64 {
    let long = if standard == Standard::Ah { 40.0 } else { 4.0 };
    match gi {
        Gi::Long => long,
        Gi::Short => long * 0.9,
    }
}

/// (bits per subcarrier, code rate numerator, code rate denominator).
const VHT_MODS: [(u8, u8, u8); 10] = [
    (1, 1, 2),
    (2, 1, 2),
    (2, 3, 4),
    (4, 1, 2),
    (4, 3, 4),
    (6, 2, 3),
    (6, 3, 4),
    (6, 5, 6),
    (8, 3, 4),
    (8, 5, 6),
];

const AG_MODS: [(u8, u8, u8); 8] = [
    (1, 1, 2),
    (1, 3, 4),
    (2, 1, 2),
    (2, 3, 4),
    (4, 1, 2),
    (4, 3, 4),
    (6, 2, 3),
    (6, 3, 4),
];

fn modulation_of(standard: Standard, index: i8) -> (u8, u8, u8) {
    match (standard, index) {
        (_, i) if i < 0 => (1, 1, 4),
        (Standard::Ag, i) => AG_MODS[(i as usize).min(7)],
        (_, i) => VHT_MODS[(i as usize).min(9)],
    }
}

const AG_NDBPS: [u32; 8] = [24, 36, 48, 72, 96, 144, 192, 216];

fn vht_data_subcarriers(bw_mhz: u16) -> Option<u32> {
    match bw_mhz {
        20 => Some(52),
        40 => Some(108),
        80 => Some(234),
        160 => Some(468),
        _ => None,
    }
}

/// Cells printed as "-" in the VHT rate tables (20/80/160 MHz).
fn vht_hole(bw_mhz: u16, index: i8, n_ss: u8) -> bool {
    match (bw_mhz, index) {
        (20, 9) => !matches!(n_ss, 3 | 6),
        (80, 6) => matches!(n_ss, 3 | 7),
        (80, 9) => n_ss == 6,
        (160, 9) => n_ss == 3,
        _ => false,
    }
}

fn vht_ndbps(bw_mhz: u16, index: i8, n_ss: u8) -> Option<u32> {
    if !(0..=9).contains(&index) || !(1..=8).contains(&n_ss) || vht_hole(bw_mhz, index, n_ss) {
        return None;
    }
    let n_sd = vht_data_subcarriers(bw_mhz)?;
    let (bits, num, den) = VHT_MODS[index as usize];
    Some(n_sd * bits as u32 * num as u32 * n_ss as u32 / den as u32)
}

fn long_gi_ndbps(standard: Standard, bw_mhz: u16, index: i8, n_ss: u8) -> Option<u32> {
    match standard {
        Standard::Ag => {
            if bw_mhz == 20 && n_ss == 1 && (0..=7).contains(&index) {
                Some(AG_NDBPS[index as usize])
            } else {
                None
            }
        }
        Standard::N => {
            if !(bw_mhz == 20 || bw_mhz == 40) || !(0..=7).contains(&index) || !(1..=4).contains(&n_ss) {
                return None;
            }
            vht_ndbps(bw_mhz, index, n_ss)
        }
        Standard::Ac => vht_ndbps(bw_mhz, index, n_ss),
        Standard::Ah => {
            if !(1..=4).contains(&n_ss) {
                return None;
            }
            match bw_mhz {
                1 => match index {
                    -1 if n_ss == 1 => Some(15),
                    0..=7 => vht_ndbps(20, index, n_ss),
                    _ => None,
                },
                2 | 4 | 8 | 16 => vht_ndbps(bw_mhz * 10, index, n_ss),
                _ => None,
            }
        }
    }
}

/// Tabulated entry for a cell, or `UndefinedMcs`.
pub fn lookup_mcs(standard: Standard, bandwidth_mhz: u16, index: i8, n_ss: u8, gi: Gi) -> Result<Mcs> {
    let n_dbps = long_gi_ndbps(standard, bandwidth_mhz, index, n_ss).ok_or(Error::UndefinedMcs {
        bandwidth_mhz,
        index,
        n_ss,
    })?;
    if standard == Standard::Ag && gi == Gi::Short {
        return Err(Error::UndefinedMcs {
            bandwidth_mhz,
            index,
            n_ss,
        });
    }
    let data_rate_bps = n_dbps as f64 * 1e6 / symbol_us(standard, gi);
    Ok(Mcs {
        standard,
        bandwidth_mhz,
        index,
        n_ss,
        gi,
        data_rate_bps,
        n_dbps,
    })
}

pub fn lookup_rate(standard: Standard, bandwidth_mhz: u16, index: i8, n_ss: u8, gi: Gi) -> Result<f64> {
    lookup_mcs(standard, bandwidth_mhz, index, n_ss, gi).map(|m| m.data_rate_bps)
}

pub fn bandwidths(standard: Standard) -> &'static [u16] {
    match standard {
        Standard::Ag => &[20],
        Standard::N => &[20, 40],
        Standard::Ac => &[20, 40, 80, 160],
        Standard::Ah => &[1, 2, 4, 8, 16],
    }
}

pub fn max_streams(standard: Standard) -> u8 {
    match standard {
        Standard::Ag => 1,
        Standard::N | Standard::Ah => 4,
        Standard::Ac => 8,
    }
}

/// All defined entries for a standard and bandwidth at one spatial-stream count,
/// sorted by index.
pub fn mcs_ladder(standard: Standard, bandwidth_mhz: u16, n_ss: u8, gi: Gi) -> Vec<Mcs> {
    (-1i8..=9)
        .filter_map(|i| lookup_mcs(standard, bandwidth_mhz, i, n_ss, gi).ok())
        .collect()
}

/// Every defined entry of every table, both guard intervals.
pub fn catalog() -> Vec<Mcs> {
    let mut out = Vec::new();
    for standard in [Standard::Ag, Standard::N, Standard::Ac, Standard::Ah] {
        for &bw in bandwidths(standard) {
            for n_ss in 1..=max_streams(standard) {
                for gi in [Gi::Long, Gi::Short] {
                    out.extend(mcs_ladder(standard, bw, n_ss, gi));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessCategory {
    Bk,
    Be,
    Vi,
    Vo,
}

impl AccessCategory {
    fn idx(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bk" | "BK" => Some(AccessCategory::Bk),
            "be" | "BE" => Some(AccessCategory::Be),
            "vi" | "VI" => Some(AccessCategory::Vi),
            "vo" | "VO" => Some(AccessCategory::Vo),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        ["bk", "be", "vi", "vo"][self.idx()]
    }
}

/// Inter-frame spacings, preamble field durations and EDCA parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingParams {
    pub slot_us: u32,
    pub sifs_us: u32,
    pub difs_us: u32,
    pub pifs_us: u32,
    /// Indexed BK, BE, VI, VO.
    pub aifs_us: [u32; 4],
    pub cw_min: [u32; 4],
    pub cw_max: [u32; 4],
    pub txop_limit_us: [u32; 4],
    pub legacy_cw_min: u32,
    pub legacy_cw_max: u32,
    pub symbol_us: f64,
    pub gi_us: f64,
    pub l_stf_us: f64,
    pub l_ltf_us: f64,
    pub l_sig_us: f64,
    pub ht_sig_us: f64,
    pub ht_stf_us: f64,
    pub ht_ltf_us: f64,
    pub vht_sig_a_us: f64,
    pub vht_stf_us: f64,
    pub vht_ltf_us: f64,
    pub vht_sig_b_us: f64,
    /// 802.11ah preamble length in symbols at 1 MHz and at 2 MHz and above,
    /// excluding additional LTFs for extra streams.
    pub s1g_preamble_symbols_1mhz: u32,
    pub s1g_preamble_symbols: u32,
    pub service_bits: u32,
    pub tail_bits: u32,
    /// Basic rate set for control responses, ascending.
    pub basic_rates_bps: Vec<f64>,
}

impl TimingParams {
    pub fn new(standard: Standard) -> Self {
        let slot = 9;
        let sifs = 16;
        let ah = standard == Standard::Ah;
        TimingParams {
            slot_us: slot,
            sifs_us: sifs,
            difs_us: sifs + 2 * slot,
            pifs_us: sifs + slot,
            aifs_us: [sifs + 7 * slot, sifs + 3 * slot, sifs + 2 * slot, sifs + 2 * slot],
            cw_min: [15, 15, 7, 3],
            cw_max: [1023, 1023, 1023, 7],
            txop_limit_us: [0, 0, 3008, 1504],
            legacy_cw_min: 15,
            legacy_cw_max: 1023,
            symbol_us: if ah { 40.0 } else { 4.0 },
            gi_us: if ah { 8.0 } else { 0.8 },
            l_stf_us: 8.0,
            l_ltf_us: 8.0,
            l_sig_us: 4.0,
            ht_sig_us: 8.0,
            ht_stf_us: 4.0,
            ht_ltf_us: 4.0,
            vht_sig_a_us: 8.0,
            vht_stf_us: 4.0,
            vht_ltf_us: 4.0,
            vht_sig_b_us: 4.0,
            s1g_preamble_symbols_1mhz: 7,
            s1g_preamble_symbols: 6,
            service_bits: if ah { 8 } else { 16 },
            tail_bits: 6,
            basic_rates_bps: if ah {
                Vec::new()
            } else {
                alloc::vec![6e6, 12e6, 24e6]
            },
        }
    }

    pub fn aifs(&self, ac: AccessCategory) -> u32 {
        self.aifs_us[ac.idx()]
    }

    pub fn cw_min(&self, ac: AccessCategory) -> u32 {
        self.cw_min[ac.idx()]
    }

    pub fn cw_max(&self, ac: AccessCategory) -> u32 {
        self.cw_max[ac.idx()]
    }

    pub fn txop_limit(&self, ac: AccessCategory) -> u32 {
        self.txop_limit_us[ac.idx()]
    }

    /// Mean access delay of an idle medium: AIFS plus CWmin/2 slots.
    pub fn mean_access_us(&self, ac: AccessCategory) -> f64 {
        self.aifs(ac) as f64 + self.cw_min(ac) as f64 / 2.0 * self.slot_us as f64
    }

    pub fn legacy_mean_access_us(&self) -> f64 {
        self.difs_us as f64 + self.legacy_cw_min as f64 / 2.0 * self.slot_us as f64
    }

    /// Highest basic rate not above `data_rate_bps`, else the lowest basic rate.
    pub fn control_rate_bps(&self, data_rate_bps: f64) -> f64 {
        let mut best = self.basic_rates_bps.first().copied().unwrap_or(6e6);
        for &r in &self.basic_rates_bps {
            if r <= data_rate_bps + 1e-6 {
                best = r;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreambleFormat {
    Legacy,
    HtMixed,
    Vht,
    S1g,
}

/// Number of training fields needed for `n_sts` space-time streams.
pub fn ltf_count(n_sts: usize) -> usize {
    match n_sts {
        0 | 1 => 1,
        2 => 2,
        3 | 4 => 4,
        5 | 6 => 6,
        _ => 8,
    }
}

pub fn preamble_us(t: &TimingParams, format: PreambleFormat, bandwidth_mhz: u16, n_ltf: usize) -> f64 {
    let legacy = t.l_stf_us + t.l_ltf_us + t.l_sig_us;
    let n_ltf = n_ltf.max(1) as f64;
    match format {
        PreambleFormat::Legacy => legacy,
        PreambleFormat::HtMixed => legacy + t.ht_sig_us + t.ht_stf_us + t.ht_ltf_us * n_ltf,
        PreambleFormat::Vht => {
            legacy + t.vht_sig_a_us + t.vht_stf_us + t.vht_ltf_us * n_ltf + t.vht_sig_b_us
        }
        PreambleFormat::S1g => {
            let base = if bandwidth_mhz == 1 {
                t.s1g_preamble_symbols_1mhz
            } else {
                t.s1g_preamble_symbols
            };
            (base as f64 + n_ltf - 1.0) * t.symbol_us
        }
    }
}

pub fn default_preamble(standard: Standard) -> PreambleFormat {
    match standard {
        Standard::Ag => PreambleFormat::Legacy,
        Standard::N => PreambleFormat::HtMixed,
        Standard::Ac => PreambleFormat::Vht,
        Standard::Ah => PreambleFormat::S1g,
    }
}

/// Payload OFDM symbols for `psdu_octets` (service field + tail, padded up).
pub fn payload_symbols(t: &TimingParams, n_dbps: u32, psdu_octets: usize) -> u64 {
    if psdu_octets == 0 {
        return 0;
    }
    let bits = t.service_bits as u64 + 8 * psdu_octets as u64 + t.tail_bits as u64;
    bits.div_ceil(n_dbps as u64)
}

/// PPDU air time in microseconds.
pub fn ppdu_duration(
    t: &TimingParams,
    format: PreambleFormat,
    mcs: &Mcs,
    psdu_octets: usize,
    n_ltf: usize,
) -> f64 {
    let sym = if mcs.standard == Standard::Ah || format == PreambleFormat::S1g {
        t.symbol_us * if mcs.gi == Gi::Short { 0.9 } else { 1.0 }
    } else {
        mcs.symbol_us()
    };
    preamble_us(t, format, mcs.bandwidth_mhz, n_ltf) + payload_symbols(t, mcs.n_dbps, psdu_octets) as f64 * sym
}

/// Legacy-format control frame duration at `rate_bps` (6..54 Mbps).
pub fn legacy_frame_us(t: &TimingParams, octets: usize, rate_bps: f64) -> f64 {
    let n_dbps = libm::round(rate_bps * 4e-6) as u32;
    let legacy = t.l_stf_us + t.l_ltf_us + t.l_sig_us;
    let bits = 16 + 8 * octets as u64 + 6;
    legacy + bits.div_ceil(n_dbps as u64) as f64 * 4.0
}

pub const FCS_OCTETS: usize = 4;
pub const MAX_MSDU_OCTETS: usize = 2304;
pub const ACK_OCTETS: usize = 14;
pub const CTS_OCTETS: usize = 14;
pub const RTS_OCTETS: usize = 20;
pub const BA_OCTETS: usize = 32;
pub const BAR_OCTETS: usize = 24;
pub const NDPA_OCTETS: usize = 25;
pub const BF_POLL_OCTETS: usize = 20;
pub const BEACON_BODY_OCTETS: usize = 80;
pub const DELIMITER_OCTETS: usize = 4;

/// MAC header octets (without FCS).
pub fn mac_header_octets(standard: Standard, qos: bool) -> usize {
    match standard {
        Standard::Ah => 8,
        _ if qos => 26,
        _ => 24,
    }
}

/// MSDU plus MAC header plus FCS.
pub fn mpdu_octets(msdu_octets: usize, standard: Standard, qos: bool) -> Result<usize> {
    if msdu_octets > MAX_MSDU_OCTETS {
        return Err(Error::OversizeMsdu {
            octets: msdu_octets,
            max: MAX_MSDU_OCTETS,
        });
    }
    Ok(msdu_octets + mac_header_octets(standard, qos) + FCS_OCTETS)
}

/// One A-MPDU subframe: delimiter plus MPDU padded to a 4-octet boundary.
pub fn ampdu_subframe_octets(mpdu: usize) -> usize {
    DELIMITER_OCTETS + mpdu.div_ceil(4) * 4
}

pub fn ampdu_octets(mpdus: &[usize]) -> usize {
    mpdus.iter().map(|&m| ampdu_subframe_octets(m)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggScheme {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmpduLayout {
    pub scheme: AggScheme,
    pub n_blocks: usize,
    /// Block index of every MPDU, in transmission order.
    pub assignment: Vec<usize>,
    /// Channel numbers of every block.
    pub block_channels: Vec<Vec<u8>>,
}

impl AmpduLayout {
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.n_blocks];
        for &b in &self.assignment {
            sizes[b] += 1;
        }
        sizes
    }
}

/// Split `n_mpdus` over `n_blocks` groups of adjacent channels.
///
/// Blocks receive contiguous runs of MPDUs whose counts differ by at most one;
/// the later blocks carry the extra MPDUs.
pub fn build_ampdu_layout(
    n_mpdus: usize,
    scheme: AggScheme,
    n_blocks: usize,
    channels: &[u8],
) -> Result<AmpduLayout> {
    let bad = Error::InvalidPartition {
        blocks: n_blocks,
        channels: channels.len(),
    };
    if n_blocks == 0 || channels.is_empty() || channels.len() % n_blocks != 0 {
        return Err(bad);
    }
    match scheme {
        AggScheme::Vertical if n_blocks != 1 => return Err(bad),
        AggScheme::Horizontal if n_blocks == 1 => return Err(bad),
        _ => {}
    }
    let per = channels.len() / n_blocks;
    let block_channels = channels.chunks(per).map(|c| c.to_vec()).collect();
    let base = n_mpdus / n_blocks;
    let extra = n_mpdus % n_blocks;
    let mut assignment = Vec::with_capacity(n_mpdus);
    for b in 0..n_blocks {
        let count = base + usize::from(b >= n_blocks - extra);
        assignment.extend(core::iter::repeat_n(b, count));
    }
    Ok(AmpduLayout {
        scheme,
        n_blocks,
        assignment,
        block_channels,
    })
}
