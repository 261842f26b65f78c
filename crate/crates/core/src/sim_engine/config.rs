//! Declarative scenario description, addressed by `section.key` paths.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::analytics::AckScheme;
use crate::error::{Error, Result};
use crate::rates_framing::{AccessCategory, AggScheme, Gi, Standard};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Full event-driven PHY+MAC run.
    Des,
    /// TxOP-level horizontal/vertical aggregation experiment.
    Multichannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    Fine,
    Lut,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MimoScheme {
    /// No CSI: identity mapping of streams onto antennas.
    Open,
    SuBf,
    MuCti,
    MuNoCti,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    Zf,
    Bd,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    Down,
    Up,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Down => "down",
            Direction::Up => "up",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSection {
    pub seed: Option<u64>,
    pub duration_s: f64,
    pub mode: Mode,
    pub standard: Standard,
    pub bandwidth_mhz: u16,
    pub gi: Gi,
    pub link_mode: LinkMode,
    pub sample_ms: u64,
    pub window_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApSection {
    pub antennas: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationCfg {
    pub x: f64,
    pub y: f64,
    pub antennas: usize,
    pub channel_seed: u64,
    pub client_index: u64,
    /// Radial step away from the AP, 0 for a static station.
    pub mobility_step_m: f64,
    pub mobility_every_s: f64,
    /// Per-station aggregation cap, 0 to use the MAC default.
    pub max_agg: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppCfg {
    pub station: usize,
    pub direction: Direction,
    pub rate_bps: f64,
    pub msdu_octets: usize,
    pub start_s: f64,
    /// 0 runs to the end of the simulation.
    pub stop_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacSection {
    pub ac: AccessCategory,
    /// Overrides the access category's TxOP limit.
    pub txop_us: Option<u32>,
    pub max_agg: usize,
    pub mu_max_agg: usize,
    pub queue_limit: usize,
    pub amrr_counts: [u32; 4],
    pub amrr_start: usize,
    pub amrr_interval_ms: u64,
    pub amrr_min_success: u32,
    pub mcs_max: i8,
    pub n_ss: u8,
    pub ack: AckScheme,
    pub beacons: bool,
    pub rts: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhySection {
    pub tx_power_dbm: f64,
    pub system_loss_db: f64,
    pub antenna_gain_db: f64,
    pub noise_figure_db: f64,
    pub carrier_ghz: f64,
    pub sensitivity_dbm: f64,
    pub beta_over_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSection {
    pub rms_delay_ns: f64,
    pub coherence_ms: f64,
    pub subcarriers: usize,
    /// Weight of the component shared by all stations (0 independent, 1 identical).
    pub inter_user_mix: f64,
    pub shared_seed: u64,
    pub reciprocity: bool,
    pub reseed_per_txop: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimoSection {
    pub scheme: MimoScheme,
    pub precoder: PrecoderKind,
    pub mmse_rho: f64,
    pub sounding_ms: f64,
    pub quantization: bool,
    pub groups: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSection {
    pub channels: usize,
    pub scheme: AggScheme,
    pub blocks: usize,
    pub p_collision: f64,
    pub sir_db: f64,
    pub hits_header: bool,
    pub n_txops: usize,
    pub mpdus_per_channel: usize,
    pub mpdu_octets: usize,
    pub snr_db: f64,
    pub diversity_cap_db: f64,
    pub antennas: usize,
    pub n_ss: u8,
    /// Fixed rate instead of AMRR when set.
    pub fixed_mcs: Option<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub sim: SimSection,
    pub ap: ApSection,
    pub stations: Vec<StationCfg>,
    pub apps: Vec<AppCfg>,
    pub mac: MacSection,
    pub phy: PhySection,
    pub channel: ChannelSection,
    pub mimo: MimoSection,
    pub multichannel: MultichannelSection,
}

impl Default for StationCfg {
    fn default() -> Self {
        StationCfg {
            x: 5.0,
            y: 0.0,
            antennas: 1,
            channel_seed: 1,
            client_index: 1,
            mobility_step_m: 0.0,
            mobility_every_s: 0.0,
            max_agg: 0,
        }
    }
}

impl Default for AppCfg {
    fn default() -> Self {
        AppCfg {
            station: 1,
            direction: Direction::Down,
            rate_bps: 1e6,
            msdu_octets: 1500,
            start_s: 0.0,
            stop_s: 0.0,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            sim: SimSection {
                seed: None,
                duration_s: 1.0,
                mode: Mode::Des,
                standard: Standard::Ac,
                bandwidth_mhz: 20,
                gi: Gi::Long,
                link_mode: LinkMode::Hybrid,
                sample_ms: 10,
                window_ms: 100,
            },
            ap: ApSection {
                antennas: 1,
                x: 0.0,
                y: 0.0,
            },
            stations: Vec::new(),
            apps: Vec::new(),
            mac: MacSection {
                ac: AccessCategory::Be,
                txop_us: None,
                max_agg: 64,
                mu_max_agg: 64,
                queue_limit: 1000,
                amrr_counts: [3, 3, 1, 3],
                amrr_start: 0,
                amrr_interval_ms: 25,
                amrr_min_success: 10,
                mcs_max: 9,
                n_ss: 1,
                ack: AckScheme::Normal,
                beacons: true,
                rts: false,
            },
            phy: PhySection {
                tx_power_dbm: 17.0,
                system_loss_db: 8.5,
                antenna_gain_db: 0.0,
                noise_figure_db: 7.0,
                carrier_ghz: 5.2,
                sensitivity_dbm: crate::channel::SENSITIVITY_DBM,
                beta_over_alpha: 1.0,
            },
            channel: ChannelSection {
                rms_delay_ns: 15.0,
                coherence_ms: 10_000.0,
                subcarriers: 52,
                inter_user_mix: 0.0,
                shared_seed: 0,
                reciprocity: true,
                reseed_per_txop: false,
            },
            mimo: MimoSection {
                scheme: MimoScheme::Open,
                precoder: PrecoderKind::Zf,
                mmse_rho: 0.0,
                sounding_ms: 20.0,
                quantization: true,
                groups: Vec::new(),
            },
            multichannel: MultichannelSection {
                channels: 4,
                scheme: AggScheme::Vertical,
                blocks: 1,
                p_collision: 0.0,
                sir_db: 30.0,
                hits_header: false,
                n_txops: 200,
                mpdus_per_channel: 20,
                mpdu_octets: 1530,
                snr_db: 20.0,
                diversity_cap_db: 0.5,
                antennas: 4,
                n_ss: 4,
                fixed_mcs: None,
            },
        }
    }
}

fn bad(path: &str, value: &str, what: &str) -> Error {
    Error::config(path, format!("cannot parse {value:?} as {what}"))
}

fn p_f64(path: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(bad(path, v, "a finite number")),
    }
}

fn p_u64(path: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| bad(path, v, "a non-negative integer"))
}

fn p_usize(path: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| bad(path, v, "a non-negative integer"))
}

fn p_bool(path: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(bad(path, v, "a boolean")),
    }
}

fn p_list<T>(path: &str, v: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| f(path, s.trim())).collect()
}

fn p_index(path: &str, s: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i),
        _ => Err(Error::config(path, "index must be an integer >= 1")),
    }
}

fn grow<T: Default>(v: &mut Vec<T>, idx: usize) -> &mut T {
    while v.len() < idx {
        v.push(T::default());
    }
    &mut v[idx - 1]
}

fn gi_name(g: Gi) -> &'static str {
    g.name()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ScenarioConfig {
    /// Assign one `section.key` entry from its text form.
    pub fn set(&mut self, path: &str, v: &str) -> Result<()> {
        let v = v.trim();
        let parts: Vec<&str> = path.split('.').collect();
        let unknown = || Error::config(path, "unknown key");
        match parts.as_slice() {
            ["sim", key] => {
                let s = &mut self.sim;
                match *key {
                    "seed" => s.seed = Some(p_u64(path, v)?),
                    "duration_s" => s.duration_s = p_f64(path, v)?,
                    "mode" => {
                        s.mode = match v {
                            "des" => Mode::Des,
                            "multichannel" => Mode::Multichannel,
                            _ => return Err(bad(path, v, "des|multichannel")),
                        }
                    }
                    "standard" => s.standard = Standard::parse(v).ok_or_else(|| bad(path, v, "a/g|n|ac|ah"))?,
                    "bandwidth_mhz" => s.bandwidth_mhz = v.parse().map_err(|_| bad(path, v, "a bandwidth"))?,
                    "gi" => {
                        s.gi = match v {
                            "long" => Gi::Long,
                            "short" => Gi::Short,
                            _ => return Err(bad(path, v, "long|short")),
                        }
                    }
                    "link_mode" => {
                        s.link_mode = match v {
                            "fine" => LinkMode::Fine,
                            "lut" => LinkMode::Lut,
                            "hybrid" => LinkMode::Hybrid,
                            _ => return Err(bad(path, v, "fine|lut|hybrid")),
                        }
                    }
                    "sample_ms" => s.sample_ms = p_u64(path, v)?,
                    "window_ms" => s.window_ms = p_u64(path, v)?,
                    _ => return Err(unknown()),
                }
            }
            ["ap", key] => match *key {
                "antennas" => self.ap.antennas = p_usize(path, v)?,
                "x" => self.ap.x = p_f64(path, v)?,
                "y" => self.ap.y = p_f64(path, v)?,
                _ => return Err(unknown()),
            },
            ["station", idx, key] => {
                let st = grow(&mut self.stations, p_index(path, idx)?);
                match *key {
                    "x" => st.x = p_f64(path, v)?,
                    "y" => st.y = p_f64(path, v)?,
                    "antennas" => st.antennas = p_usize(path, v)?,
                    "channel_seed" => st.channel_seed = p_u64(path, v)?,
                    "client_index" => st.client_index = p_u64(path, v)?,
                    "mobility_step_m" => st.mobility_step_m = p_f64(path, v)?,
                    "mobility_every_s" => st.mobility_every_s = p_f64(path, v)?,
                    "max_agg" => st.max_agg = p_usize(path, v)?,
                    _ => return Err(unknown()),
                }
            }
            ["app", idx, key] => {
                let a = grow(&mut self.apps, p_index(path, idx)?);
                match *key {
                    "station" => a.station = p_usize(path, v)?,
                    "direction" => {
                        a.direction = match v {
                            "down" => Direction::Down,
                            "up" => Direction::Up,
                            _ => return Err(bad(path, v, "down|up")),
                        }
                    }
                    "rate_bps" => a.rate_bps = p_f64(path, v)?,
                    "msdu_octets" => a.msdu_octets = p_usize(path, v)?,
                    "start_s" => a.start_s = p_f64(path, v)?,
                    "stop_s" => a.stop_s = p_f64(path, v)?,
                    _ => return Err(unknown()),
                }
            }
            ["mac", key] => {
                let m = &mut self.mac;
                match *key {
                    "ac" => m.ac = AccessCategory::parse(v).ok_or_else(|| bad(path, v, "bk|be|vi|vo"))?,
                    "txop_us" => m.txop_us = Some(v.parse().map_err(|_| bad(path, v, "microseconds"))?),
                    "max_agg" => m.max_agg = p_usize(path, v)?,
                    "mu_max_agg" => m.mu_max_agg = p_usize(path, v)?,
                    "queue_limit" => m.queue_limit = p_usize(path, v)?,
                    "amrr_counts" => {
                        let c = p_list(path, v, |p, s| s.parse::<u32>().map_err(|_| bad(p, s, "a count")))?;
                        m.amrr_counts = c.try_into().map_err(|_| Error::config(path, "expected four counts"))?;
                    }
                    "amrr_start" => m.amrr_start = p_usize(path, v)?,
                    "amrr_interval_ms" => m.amrr_interval_ms = p_u64(path, v)?,
                    "amrr_min_success" => m.amrr_min_success = v.parse().map_err(|_| bad(path, v, "a count"))?,
                    "mcs_max" => m.mcs_max = v.parse().map_err(|_| bad(path, v, "an MCS index"))?,
                    "n_ss" => m.n_ss = v.parse().map_err(|_| bad(path, v, "a stream count"))?,
                    "ack" => {
                        m.ack = match v {
                            "normal" => AckScheme::Normal,
                            "short" => AckScheme::Short,
                            "ultra_short" => AckScheme::UltraShort,
                            "block_ack" => AckScheme::BlockAck,
                            _ => return Err(bad(path, v, "normal|short|ultra_short|block_ack")),
                        }
                    }
                    "beacons" => m.beacons = p_bool(path, v)?,
                    "rts" => m.rts = p_bool(path, v)?,
                    _ => return Err(unknown()),
                }
            }
            ["phy", key] => {
                let p = &mut self.phy;
                let x = p_f64(path, v)?;
                match *key {
                    "tx_power_dbm" => p.tx_power_dbm = x,
                    "system_loss_db" => p.system_loss_db = x,
                    "antenna_gain_db" => p.antenna_gain_db = x,
                    "noise_figure_db" => p.noise_figure_db = x,
                    "carrier_ghz" => p.carrier_ghz = x,
                    "sensitivity_dbm" => p.sensitivity_dbm = x,
                    "beta_over_alpha" => p.beta_over_alpha = x,
                    _ => return Err(unknown()),
                }
            }
            ["channel", key] => {
                let c = &mut self.channel;
                match *key {
                    "rms_delay_ns" => c.rms_delay_ns = p_f64(path, v)?,
                    "coherence_ms" => c.coherence_ms = p_f64(path, v)?,
                    "subcarriers" => c.subcarriers = p_usize(path, v)?,
                    "inter_user_mix" => c.inter_user_mix = p_f64(path, v)?,
                    "shared_seed" => c.shared_seed = p_u64(path, v)?,
                    "reciprocity" => c.reciprocity = p_bool(path, v)?,
                    "reseed_per_txop" => c.reseed_per_txop = p_bool(path, v)?,
                    _ => return Err(unknown()),
                }
            }
            ["mimo", "group", idx] => {
                let i = p_index(path, idx)?;
                while self.mimo.groups.len() < i {
                    self.mimo.groups.push(Vec::new());
                }
                self.mimo.groups[i - 1] = p_list(path, v, p_usize)?;
            }
            ["mimo", key] => {
                let m = &mut self.mimo;
                match *key {
                    "scheme" => {
                        m.scheme = match v {
                            "open" => MimoScheme::Open,
                            "su_bf" => MimoScheme::SuBf,
                            "mu_cti" => MimoScheme::MuCti,
                            "mu_no_cti" => MimoScheme::MuNoCti,
                            _ => return Err(bad(path, v, "open|su_bf|mu_cti|mu_no_cti")),
                        }
                    }
                    "precoder" => {
                        m.precoder = match v {
                            "zf" => PrecoderKind::Zf,
                            "bd" => PrecoderKind::Bd,
                            "mmse" => PrecoderKind::Mmse,
                            _ => return Err(bad(path, v, "zf|bd|mmse")),
                        }
                    }
                    "mmse_rho" => m.mmse_rho = p_f64(path, v)?,
                    "sounding_ms" => m.sounding_ms = p_f64(path, v)?,
                    "quantization" => m.quantization = p_bool(path, v)?,
                    _ => return Err(unknown()),
                }
            }
            ["multichannel", key] => {
                let m = &mut self.multichannel;
                match *key {
                    "channels" => m.channels = p_usize(path, v)?,
                    "scheme" => {
                        m.scheme = match v {
                            "vertical" => AggScheme::Vertical,
                            "horizontal" => AggScheme::Horizontal,
                            _ => return Err(bad(path, v, "vertical|horizontal")),
                        }
                    }
                    "blocks" => m.blocks = p_usize(path, v)?,
                    "p_collision" => m.p_collision = p_f64(path, v)?,
                    "sir_db" => m.sir_db = p_f64(path, v)?,
                    "hits_header" => m.hits_header = p_bool(path, v)?,
                    "n_txops" => m.n_txops = p_usize(path, v)?,
                    "mpdus_per_channel" => m.mpdus_per_channel = p_usize(path, v)?,
                    "mpdu_octets" => m.mpdu_octets = p_usize(path, v)?,
                    "snr_db" => m.snr_db = p_f64(path, v)?,
                    "diversity_cap_db" => m.diversity_cap_db = p_f64(path, v)?,
                    "antennas" => m.antennas = p_usize(path, v)?,
                    "n_ss" => m.n_ss = v.parse().map_err(|_| bad(path, v, "a stream count"))?,
                    "fixed_mcs" => m.fixed_mcs = Some(v.parse().map_err(|_| bad(path, v, "an MCS index"))?),
                    _ => return Err(unknown()),
                }
            }
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// Every entry as `(path, value)`, in a fixed order; `set` on each
    /// rebuilds an equal config.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: String, v: String| out.push((k, v));
        let s = &self.sim;
        if let Some(seed) = s.seed {
            put("sim.seed".into(), seed.to_string());
        }
        put("sim.duration_s".into(), s.duration_s.to_string());
        put(
            "sim.mode".into(),
            match s.mode {
                Mode::Des => "des",
                Mode::Multichannel => "multichannel",
            }
            .into(),
        );
        put("sim.standard".into(), s.standard.name().into());
        put("sim.bandwidth_mhz".into(), s.bandwidth_mhz.to_string());
        put("sim.gi".into(), gi_name(s.gi).into());
        put(
            "sim.link_mode".into(),
            match s.link_mode {
                LinkMode::Fine => "fine",
                LinkMode::Lut => "lut",
                LinkMode::Hybrid => "hybrid",
            }
            .into(),
        );
        put("sim.sample_ms".into(), s.sample_ms.to_string());
        put("sim.window_ms".into(), s.window_ms.to_string());

        put("ap.antennas".into(), self.ap.antennas.to_string());
        put("ap.x".into(), self.ap.x.to_string());
        put("ap.y".into(), self.ap.y.to_string());

        for (i, st) in self.stations.iter().enumerate() {
            let p = format!("station.{}", i + 1);
            put(format!("{p}.x"), st.x.to_string());
            put(format!("{p}.y"), st.y.to_string());
            put(format!("{p}.antennas"), st.antennas.to_string());
            put(format!("{p}.channel_seed"), st.channel_seed.to_string());
            put(format!("{p}.client_index"), st.client_index.to_string());
            put(format!("{p}.mobility_step_m"), st.mobility_step_m.to_string());
            put(format!("{p}.mobility_every_s"), st.mobility_every_s.to_string());
            put(format!("{p}.max_agg"), st.max_agg.to_string());
        }
        for (i, a) in self.apps.iter().enumerate() {
            let p = format!("app.{}", i + 1);
            put(format!("{p}.station"), a.station.to_string());
            put(format!("{p}.direction"), a.direction.name().into());
            put(format!("{p}.rate_bps"), a.rate_bps.to_string());
            put(format!("{p}.msdu_octets"), a.msdu_octets.to_string());
            put(format!("{p}.start_s"), a.start_s.to_string());
            put(format!("{p}.stop_s"), a.stop_s.to_string());
        }

        let m = &self.mac;
        put("mac.ac".into(), m.ac.name().into());
        if let Some(t) = m.txop_us {
            put("mac.txop_us".into(), t.to_string());
        }
        put("mac.max_agg".into(), m.max_agg.to_string());
        put("mac.mu_max_agg".into(), m.mu_max_agg.to_string());
        put("mac.queue_limit".into(), m.queue_limit.to_string());
        put("mac.amrr_counts".into(), join(&m.amrr_counts));
        put("mac.amrr_start".into(), m.amrr_start.to_string());
        put("mac.amrr_interval_ms".into(), m.amrr_interval_ms.to_string());
        put("mac.amrr_min_success".into(), m.amrr_min_success.to_string());
        put("mac.mcs_max".into(), m.mcs_max.to_string());
        put("mac.n_ss".into(), m.n_ss.to_string());
        put("mac.ack".into(), m.ack.name().into());
        put("mac.beacons".into(), m.beacons.to_string());
        put("mac.rts".into(), m.rts.to_string());

        let p = &self.phy;
        put("phy.tx_power_dbm".into(), p.tx_power_dbm.to_string());
        put("phy.system_loss_db".into(), p.system_loss_db.to_string());
        put("phy.antenna_gain_db".into(), p.antenna_gain_db.to_string());
        put("phy.noise_figure_db".into(), p.noise_figure_db.to_string());
        put("phy.carrier_ghz".into(), p.carrier_ghz.to_string());
        put("phy.sensitivity_dbm".into(), p.sensitivity_dbm.to_string());
        put("phy.beta_over_alpha".into(), p.beta_over_alpha.to_string());

        let c = &self.channel;
        put("channel.rms_delay_ns".into(), c.rms_delay_ns.to_string());
        put("channel.coherence_ms".into(), c.coherence_ms.to_string());
        put("channel.subcarriers".into(), c.subcarriers.to_string());
        put("channel.inter_user_mix".into(), c.inter_user_mix.to_string());
        put("channel.shared_seed".into(), c.shared_seed.to_string());
        put("channel.reciprocity".into(), c.reciprocity.to_string());
        put("channel.reseed_per_txop".into(), c.reseed_per_txop.to_string());

        let mm = &self.mimo;
        put(
            "mimo.scheme".into(),
            match mm.scheme {
                MimoScheme::Open => "open",
                MimoScheme::SuBf => "su_bf",
                MimoScheme::MuCti => "mu_cti",
                MimoScheme::MuNoCti => "mu_no_cti",
            }
            .into(),
        );
        put(
            "mimo.precoder".into(),
            match mm.precoder {
                PrecoderKind::Zf => "zf",
                PrecoderKind::Bd => "bd",
                PrecoderKind::Mmse => "mmse",
            }
            .into(),
        );
        put("mimo.mmse_rho".into(), mm.mmse_rho.to_string());
        put("mimo.sounding_ms".into(), mm.sounding_ms.to_string());
        put("mimo.quantization".into(), mm.quantization.to_string());
        for (i, g) in mm.groups.iter().enumerate() {
            put(format!("mimo.group.{}", i + 1), join(g));
        }

        let mc = &self.multichannel;
        put("multichannel.channels".into(), mc.channels.to_string());
        put(
            "multichannel.scheme".into(),
            match mc.scheme {
                AggScheme::Vertical => "vertical",
                AggScheme::Horizontal => "horizontal",
            }
            .into(),
        );
        put("multichannel.blocks".into(), mc.blocks.to_string());
        put("multichannel.p_collision".into(), mc.p_collision.to_string());
        put("multichannel.sir_db".into(), mc.sir_db.to_string());
        put("multichannel.hits_header".into(), mc.hits_header.to_string());
        put("multichannel.n_txops".into(), mc.n_txops.to_string());
        put("multichannel.mpdus_per_channel".into(), mc.mpdus_per_channel.to_string());
        put("multichannel.mpdu_octets".into(), mc.mpdu_octets.to_string());
        put("multichannel.snr_db".into(), mc.snr_db.to_string());
        put("multichannel.diversity_cap_db".into(), mc.diversity_cap_db.to_string());
        put("multichannel.antennas".into(), mc.antennas.to_string());
        put("multichannel.n_ss".into(), mc.n_ss.to_string());
        if let Some(f) = mc.fixed_mcs {
            put("multichannel.fixed_mcs".into(), f.to_string());
        }
        out
    }

    /// Check cross references and ranges; the error names the offending path.
    pub fn validate(&self) -> Result<()> {
        let s = &self.sim;
        if s.seed.is_none() {
            return Err(Error::config("sim.seed", "a seed is mandatory"));
        }
        if !(s.duration_s > 0.0) {
            return Err(Error::config("sim.duration_s", "must be positive"));
        }
        if s.sample_ms == 0 || s.window_ms == 0 {
            return Err(Error::config("sim.sample_ms", "sampling step and window must be positive"));
        }
        if !crate::rates_framing::bandwidths(s.standard).contains(&s.bandwidth_mhz) {
            return Err(Error::config("sim.bandwidth_mhz", "bandwidth not defined for this standard"));
        }
        if self.ap.antennas == 0 || self.ap.antennas > 8 {
            return Err(Error::config("ap.antennas", "must be 1..8"));
        }
        for (i, st) in self.stations.iter().enumerate() {
            let p = format!("station.{}", i + 1);
            if st.antennas == 0 || st.antennas > 8 {
                return Err(Error::config(format!("{p}.antennas"), "must be 1..8"));
            }
            if st.mobility_step_m != 0.0 && !(st.mobility_every_s > 0.0) {
                return Err(Error::config(format!("{p}.mobility_every_s"), "must be positive when moving"));
            }
        }
        for (i, a) in self.apps.iter().enumerate() {
            let p = format!("app.{}", i + 1);
            if a.station == 0 || a.station > self.stations.len() {
                return Err(Error::config(format!("{p}.station"), format!("station {} does not exist", a.station)));
            }
            if !(a.rate_bps > 0.0) {
                return Err(Error::config(format!("{p}.rate_bps"), "must be positive"));
            }
            crate::rates_framing::mpdu_octets(a.msdu_octets, s.standard, s.standard != Standard::Ag)
                .map_err(|e| Error::config(format!("{p}.msdu_octets"), e.to_string()))?;
            if a.msdu_octets == 0 {
                return Err(Error::config(format!("{p}.msdu_octets"), "must be positive"));
            }
            if a.stop_s != 0.0 && a.stop_s < a.start_s {
                return Err(Error::config(format!("{p}.stop_s"), "stop before start"));
            }
        }
        let m = &self.mac;
        if m.amrr_counts.iter().sum::<u32>() == 0 {
            return Err(Error::config("mac.amrr_counts", "at least one attempt is required"));
        }
        if m.max_agg == 0 || m.mu_max_agg == 0 || m.queue_limit == 0 {
            return Err(Error::config("mac.max_agg", "aggregation caps and queue limit must be positive"));
        }
        if m.n_ss == 0 || m.n_ss > crate::rates_framing::max_streams(s.standard) {
            return Err(Error::config("mac.n_ss", "stream count not supported by the standard"));
        }
        if !(0.0..=1.0).contains(&self.channel.inter_user_mix) {
            return Err(Error::config("channel.inter_user_mix", "must lie in [0,1]"));
        }
        if self.channel.subcarriers == 0 {
            return Err(Error::config("channel.subcarriers", "must be positive"));
        }
        if !(self.channel.coherence_ms > 0.0) {
            return Err(Error::config("channel.coherence_ms", "must be positive"));
        }
        if self.phy.beta_over_alpha < 0.0 {
            return Err(Error::config("phy.beta_over_alpha", "must be non-negative"));
        }
        let mut seen = vec![false; self.stations.len() + 1];
        for (g, members) in self.mimo.groups.iter().enumerate() {
            let p = format!("mimo.group.{}", g + 1);
            if members.is_empty() {
                return Err(Error::config(p, "empty group"));
            }
            let mut streams = 0;
            for &sta in members {
                if sta == 0 || sta > self.stations.len() {
                    return Err(Error::config(p, format!("station {sta} does not exist")));
                }
                if seen[sta] {
                    return Err(Error::config(p, format!("station {sta} is in two groups")));
                }
                seen[sta] = true;
                streams += (m.n_ss as usize).min(self.stations[sta - 1].antennas);
            }
            if streams > 8 {
                return Err(Error::config(p, "more than 8 streams in one group"));
            }
        }
        if matches!(self.mimo.scheme, MimoScheme::MuCti | MimoScheme::MuNoCti | MimoScheme::SuBf)
            && !(self.mimo.sounding_ms > 0.0)
        {
            return Err(Error::config("mimo.sounding_ms", "must be positive"));
        }
        if s.mode == Mode::Multichannel {
            let mc = &self.multichannel;
            if !(0.0..=1.0).contains(&mc.p_collision) {
                return Err(Error::config("multichannel.p_collision", "must lie in [0,1]"));
            }
            let chans: Vec<u8> = (0..mc.channels as u8).collect();
            crate::rates_framing::build_ampdu_layout(1, mc.scheme, mc.blocks, &chans)
                .map_err(|e| Error::config("multichannel.blocks", e.to_string()))?;
            if mc.n_ss == 0 || mc.n_ss as usize > mc.antennas || mc.n_ss > 4 {
                return Err(Error::config("multichannel.n_ss", "must be 1..min(4, antennas)"));
            }
            if mc.mpdus_per_channel == 0 || mc.n_txops == 0 {
                return Err(Error::config("multichannel.n_txops", "must be positive"));
            }
        }
        Ok(())
    }
}
