//! Event-driven PHY+MAC run: EDCA contention with carrier sense and NAV,
//! A-MPDU/MU exchanges, sounding, AMRR, and per-MPDU link verdicts.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{Direction, LinkMode, MimoScheme, PrecoderKind, ScenarioConfig};
use super::events::{EventKind, EventQueue};
use super::metrics::{AirFrame, Counters, FlowSummary, Metric, MetricsLog, RunTrace};
use crate::analytics::{ack_us, ah_exchange, AckScheme, S1G_LONG_BEACON_OCTETS, S1G_SHORT_BEACON_OCTETS};
use crate::channel::{mix_responses, ChannelProfile, ChannelState, LinkBudget};
use crate::cmat::{CMat, C64};
use crate::error::Result;
use crate::link_abstraction::{
    apply_collision, draw_fcs, effective_sinr_db, legacy_rate_family, mcs_family, CollisionSpec, MpduSlot, PerLut, Reception,
};
use crate::mac_protocol::ampdu::{assemble_ampdu, assemble_mu, AggLimits};
use crate::mac_protocol::amrr::{Amrr, AmrrConfig};
use crate::mac_protocol::edca::Edca;
use crate::mac_protocol::sounding::{sounding_frames, FeedbackParams, SoundingSchedule};
use crate::mac_protocol::{round_us, FrameKind};
use crate::precoding::{
    bd_precoders, db_to_lin, independent_precoders, lin_to_db, mmse_precoders, perturb, quantization_variance,
    svd_su_precoder, zf_precoders, CtiMode, PrecoderScheme, PrecoderSet,
};
use crate::rates_framing::{
    ampdu_subframe_octets, default_preamble, legacy_frame_us, lookup_mcs, ltf_count, mac_header_octets, mpdu_octets,
    ppdu_duration, preamble_us, Gi, Mcs, PreambleFormat, Standard, TimingParams, ACK_OCTETS, BAR_OCTETS, BA_OCTETS,
    BEACON_BODY_OCTETS, CTS_OCTETS, FCS_OCTETS, RTS_OCTETS,
};
use crate::rng::stream;

const AP: usize = 0;
/// Transmissions older than this are never needed for overlap checks.
const TX_HISTORY_US: u64 = 200_000;

#[derive(Debug, Clone)]
struct Mpdu {
    msdu: usize,
    octets: usize,
    failures: u32,
    received: bool,
}

#[derive(Debug)]
struct Node {
    pos: (f64, f64),
    antennas: usize,
    edca: Edca,
    queues: BTreeMap<usize, VecDeque<Mpdu>>,
    busy: u32,
    nav_until: u64,
    nav_event: u64,
    tx_until: u64,
    in_exchange: bool,
    idle: bool,
    /// Start of the current idle period as seen by the backoff countdown.
    count_from: u64,
    access_at: Option<u64>,
    gen: u64,
    rng: ChaCha8Rng,
}

struct Link {
    amrr: Amrr,
    ladder: Vec<Mcs>,
}

#[derive(Debug, Clone)]
struct UserPayload {
    sta: usize,
    mcs: Mcs,
    spans: Vec<(f64, f64)>,
    octets: Vec<usize>,
    /// Clean effective SINR at the receiver (dB).
    sinr_db: f64,
    signal_db: f64,
    cti_db: f64,
}

#[derive(Debug, Clone)]
enum Payload {
    Control { family: usize, octets: usize },
    Data { users: Vec<UserPayload> },
}

#[derive(Debug, Clone)]
struct Tx {
    id: u64,
    src: usize,
    start: u64,
    end: u64,
    preamble_us: f64,
    rx_dbm: Vec<f64>,
    payload: Payload,
    ex: u64,
    step: usize,
}

#[derive(Debug, Clone)]
struct Step {
    src: usize,
    /// Receivers whose reception is evaluated.
    dst: Vec<usize>,
    kind: FrameKind,
    start: u64,
    dur: u32,
    octets: usize,
    /// RTS or CTS of the protection handshake.
    rts: bool,
}

#[derive(Debug)]
struct DataUser {
    sta: usize,
    mpdus: Vec<Mpdu>,
    mcs: Mcs,
    ok: Vec<bool>,
    acked: bool,
}

#[derive(Debug)]
enum ExKind {
    Data {
        dir: Direction,
        src: usize,
        users: Vec<DataUser>,
        mu: bool,
        precoders: Option<Vec<PrecoderSet>>,
    },
    Sounding {
        group: usize,
        members: Vec<usize>,
        snapshots: BTreeMap<usize, Vec<CMat>>,
    },
    Beacon,
}

#[derive(Debug)]
struct Exchange {
    initiator: usize,
    start: u64,
    steps: Vec<Step>,
    /// Per step: receivers that decoded it.
    decoded: Vec<Vec<usize>>,
    kind: ExKind,
}

#[derive(Debug, Clone)]
struct Csi {
    h: Vec<CMat>,
    time_us: u64,
}

struct AppState {
    station: usize,
    dir: Direction,
    interval_us: f64,
    msdu: usize,
    octets: usize,
    k: u64,
    start_us: f64,
    stop_us: u64,
    rng: ChaCha8Rng,
}

pub struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    lut: &'a PerLut,
    t: TimingParams,
    budget: LinkBudget,
    format: PreambleFormat,
    q: EventQueue,
    horizon: u64,
    nodes: Vec<Node>,
    links: BTreeMap<(usize, usize), Link>,
    apps: Vec<AppState>,
    chans: Vec<ChannelState>,
    uplink: Vec<Option<ChannelState>>,
    shared: BTreeMap<usize, ChannelState>,
    txs: VecDeque<Tx>,
    next_tx: u64,
    exchanges: BTreeMap<u64, Exchange>,
    next_ex: u64,
    csi: Vec<Option<Csi>>,
    precoder_cache: BTreeMap<(Vec<usize>, Vec<u64>), Vec<PrecoderSet>>,
    sched: Option<SoundingSchedule>,
    group_of: Vec<usize>,
    rr: usize,
    beacon_pending: bool,
    beacon_count: u64,
    link_rng: ChaCha8Rng,
    quant_rng: ChaCha8Rng,
    counters: Counters,
    log: MetricsLog,
    flow_drops: BTreeMap<(usize, Direction), u64>,
    collisions: u64,
    n_exchanges: u64,
    soundings: u64,
    violations: u64,
    trace: Option<RunTrace>,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    libm::sqrt((a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1)).max(0.1)
}

/// Rate ladder of a link in 802.11n-style order: streams outer, index inner.
pub fn build_ladder(standard: Standard, bw: u16, max_ss: u8, mcs_max: i8, gi: Gi) -> Vec<Mcs> {
    let mut out = Vec::new();
    for ss in 1..=max_ss.max(1) {
        for idx in -1..=mcs_max {
            if let Ok(m) = lookup_mcs(standard, bw, idx, ss, gi) {
                out.push(m);
            }
        }
    }
    out
}

/// Per-station downlink states, optional separate uplink states, and the
/// shared component per station antenna count.
pub(crate) fn build_channels(
    cfg: &ScenarioConfig,
) -> (Vec<ChannelState>, Vec<Option<ChannelState>>, BTreeMap<usize, ChannelState>) {
    let spacing = if cfg.sim.standard == Standard::Ah { 31_250.0 } else { 312_500.0 };
    let profile = ChannelProfile {
        rms_delay_ns: cfg.channel.rms_delay_ns,
        coherence_ms: cfg.channel.coherence_ms,
        subcarrier_spacing_hz: spacing,
        ..ChannelProfile::default()
    };
    let n_sc = cfg.channel.subcarriers;
    let n_ap = cfg.ap.antennas;
    let mut chans = Vec::new();
    let mut uplink = Vec::new();
    let mut shared = BTreeMap::new();
    for s in &cfg.stations {
        chans.push(ChannelState::new(s.channel_seed, s.client_index, n_ap, s.antennas, n_sc, profile));
        uplink.push(if cfg.channel.reciprocity {
            None
        } else {
            Some(ChannelState::new(s.channel_seed, s.client_index | (1 << 40), s.antennas, n_ap, n_sc, profile))
        });
        if cfg.channel.inter_user_mix > 0.0 {
            shared.entry(s.antennas).or_insert_with(|| {
                ChannelState::new(cfg.channel.shared_seed, u64::MAX - s.antennas as u64, n_ap, s.antennas, n_sc, profile)
            });
        }
    }
    (chans, uplink, shared)
}

/// All power on the first `n_ss` antennas, `sum ||W||^2 = n_t`.
fn open_loop(n_t: usize, n_ss: usize) -> PrecoderSet {
    let k = n_ss.clamp(1, n_t);
    let s = libm::sqrt(n_t as f64 / k as f64);
    PrecoderSet {
        scheme: PrecoderScheme::Independent,
        w: vec![CMat::from_fn(n_t, k, |r, c| if r == c { C64::new(s, 0.0) } else { C64::new(0.0, 0.0) })],
        csi_time_us: 0,
    }
}

impl<'a> Engine<'a> {
    pub fn new(cfg: &'a ScenarioConfig, lut: &'a PerLut) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.sim.seed.unwrap_or(0);
        let std_ = cfg.sim.standard;
        let t = TimingParams::new(std_);
        let budget = LinkBudget {
            tx_power_dbm: cfg.phy.tx_power_dbm,
            system_loss_db: cfg.phy.system_loss_db,
            antenna_gain_db: cfg.phy.antenna_gain_db,
            noise_figure_db: cfg.phy.noise_figure_db,
            carrier_freq_ghz: cfg.phy.carrier_ghz,
            ..LinkBudget::default()
        };
        let mk_edca = || {
            if std_ == Standard::Ag {
                Edca::legacy(&t)
            } else {
                Edca::new(&t, cfg.mac.ac)
            }
        };
        let mut nodes = Vec::new();
        let mut positions = vec![(cfg.ap.x, cfg.ap.y)];
        let mut antennas = vec![cfg.ap.antennas];
        for s in &cfg.stations {
            positions.push((s.x, s.y));
            antennas.push(s.antennas);
        }
        for (i, (&pos, &ant)) in positions.iter().zip(&antennas).enumerate() {
            nodes.push(Node {
                pos,
                antennas: ant,
                edca: mk_edca(),
                queues: BTreeMap::new(),
                busy: 0,
                nav_until: 0,
                nav_event: 0,
                tx_until: 0,
                in_exchange: false,
                idle: true,
                count_from: 0,
                access_at: None,
                gen: 0,
                rng: stream(seed, "backoff", i as u64),
            });
        }
        let (chans, uplink, shared) = build_channels(cfg);
        let amrr_cfg = AmrrConfig {
            counts: cfg.mac.amrr_counts,
            min_success: cfg.mac.amrr_min_success,
            interval_us: cfg.mac.amrr_interval_ms * 1000,
            ..AmrrConfig::default()
        };
        let mut links = BTreeMap::new();
        let mut apps = Vec::new();
        let qos = std_ != Standard::Ag;
        for (i, a) in cfg.apps.iter().enumerate() {
            let sta = a.station;
            let (src, dst) = match a.direction {
                Direction::Down => (AP, sta),
                Direction::Up => (sta, AP),
            };
            let max_ss = (cfg.mac.n_ss as usize).min(antennas[src]).min(antennas[dst]) as u8;
            links.entry((src, dst)).or_insert_with(|| {
                let ladder = build_ladder(std_, cfg.sim.bandwidth_mhz, max_ss, cfg.mac.mcs_max, cfg.sim.gi);
                let n = ladder.len();
                Link {
                    amrr: Amrr::new(amrr_cfg.clone(), n, cfg.mac.amrr_start),
                    ladder,
                }
            });
            apps.push(AppState {
                station: sta,
                dir: a.direction,
                interval_us: 8.0 * a.msdu_octets as f64 / a.rate_bps * 1e6,
                msdu: a.msdu_octets,
                octets: mpdu_octets(a.msdu_octets, std_, qos)?,
                k: 0,
                start_us: a.start_s * 1e6,
                stop_us: if a.stop_s > 0.0 { (a.stop_s * 1e6) as u64 } else { u64::MAX },
                rng: stream(seed, "traffic", i as u64),
            });
        }
        let n_sta = cfg.stations.len();
        let mut group_of = vec![usize::MAX; n_sta + 1];
        let sched = match cfg.mimo.scheme {
            MimoScheme::Open => None,
            scheme => {
                let mut groups: Vec<Vec<usize>> = Vec::new();
                if scheme != MimoScheme::SuBf {
                    groups.extend(cfg.mimo.groups.iter().cloned());
                }
                for s in 1..=n_sta {
                    if !groups.iter().any(|g| g.contains(&s)) {
                        groups.push(vec![s]);
                    }
                }
                for (g, members) in groups.iter().enumerate() {
                    for &m in members {
                        group_of[m] = g;
                    }
                }
                let fb = if scheme == MimoScheme::SuBf {
                    FeedbackParams::su()
                } else {
                    FeedbackParams::mu()
                };
                Some(SoundingSchedule::new((cfg.mimo.sounding_ms * 1000.0) as u64, groups, fb))
            }
        };
        Ok(Engine {
            cfg,
            lut,
            format: default_preamble(std_),
            t,
            budget,
            q: EventQueue::new(),
            horizon: (cfg.sim.duration_s * 1e6) as u64,
            nodes,
            links,
            apps,
            chans,
            uplink,
            shared,
            txs: VecDeque::new(),
            next_tx: 0,
            exchanges: BTreeMap::new(),
            next_ex: 0,
            csi: vec![None; n_sta + 1],
            precoder_cache: BTreeMap::new(),
            sched,
            group_of,
            rr: 0,
            beacon_pending: false,
            beacon_count: 0,
            link_rng: stream(seed, "link", 0),
            quant_rng: stream(seed, "quantization", 0),
            counters: Counters::default(),
            log: MetricsLog::default(),
            flow_drops: BTreeMap::new(),
            collisions: 0,
            n_exchanges: 0,
            soundings: 0,
            violations: 0,
            trace: None,
        })
    }

    pub fn run(self) -> MetricsLog {
        self.run_inner().0
    }

    /// Run and also return the frame, arrival and fine-path record.
    pub fn run_traced(mut self) -> (MetricsLog, RunTrace) {
        self.trace = Some(RunTrace::default());
        let (log, trace) = self.run_inner();
        (log, trace.unwrap_or_default())
    }

    fn run_inner(mut self) -> (MetricsLog, Option<RunTrace>) {
        for i in 0..self.apps.len() {
            self.schedule_arrival(i);
        }
        if self.cfg.mac.beacons {
            self.q.push(0, EventKind::Beacon);
        }
        for (i, s) in self.cfg.stations.iter().enumerate() {
            if s.mobility_step_m != 0.0 {
                self.q.push((s.mobility_every_s * 1e6) as u64, EventKind::Mobility { station: i + 1 });
            }
        }
        let step = self.cfg.sim.sample_ms * 1000;
        self.q.push(step, EventKind::Sample);
        while let Some(e) = self.q.pop() {
            if e.time_us > self.horizon {
                break;
            }
            self.dispatch(e.kind);
        }
        let trace = self.trace.take();
        (self.finish(), trace)
    }

    fn now(&self) -> u64 {
        self.q.now()
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::Arrival { app } => self.on_arrival(app),
            EventKind::Access { node, gen } => {
                if self.nodes[node].gen == gen && self.nodes[node].access_at == Some(self.now()) {
                    self.on_access(node);
                }
            }
            EventKind::StepStart { ex, step } => self.on_step(ex, step),
            EventKind::TxEnd { tx } => self.on_tx_end(tx),
            EventKind::ExchangeEnd { ex } => self.on_exchange_end(ex),
            EventKind::NavEnd { node } => self.check_idle(node),
            EventKind::Mobility { station } => self.on_mobility(station),
            EventKind::Beacon => {
                self.beacon_pending = true;
                self.check_idle(AP);
                self.q.push(self.now() + 100_000, EventKind::Beacon);
            }
            EventKind::Sample => {
                let c = self.snapshot_counters();
                if !c.balanced() {
                    self.violations += 1;
                }
                let next = self.now() + self.cfg.sim.sample_ms * 1000;
                self.q.push(next, EventKind::Sample);
            }
        }
    }

    // ---- traffic ----

    fn schedule_arrival(&mut self, i: usize) {
        let a = &mut self.apps[i];
        let jitter: f64 = a.rng.random::<f64>() * a.interval_us;
        let t = a.start_us + a.k as f64 * a.interval_us + jitter;
        let t = t as u64;
        if t <= self.horizon && t < a.stop_us {
            self.q.push(t.max(self.q.now()), EventKind::Arrival { app: i });
        }
    }

    fn on_arrival(&mut self, i: usize) {
        let (src, dst, msdu, octets) = {
            let a = &self.apps[i];
            match a.dir {
                Direction::Down => (AP, a.station, a.msdu, a.octets),
                Direction::Up => (a.station, AP, a.msdu, a.octets),
            }
        };
        self.counters.generated += 1;
        let now = self.now();
        if let Some(tr) = self.trace.as_mut() {
            tr.arrivals.push((i, now));
        }
        let q = self.nodes[src].queues.entry(dst).or_default();
        if q.len() >= self.cfg.mac.queue_limit {
            self.counters.dropped += 1;
            let st = self.apps[i].station;
            let dir = self.apps[i].dir;
            *self.flow_drops.entry((st, dir)).or_default() += 1;
        } else {
            q.push_back(Mpdu {
                msdu,
                octets,
                failures: 0,
                received: false,
            });
        }
        self.apps[i].k += 1;
        self.schedule_arrival(i);
        self.check_idle(src);
    }

    fn on_mobility(&mut self, sta: usize) {
        let c = &self.cfg.stations[sta - 1];
        let ap = self.nodes[AP].pos;
        let p = self.nodes[sta].pos;
        let d = dist(ap, p);
        let (ux, uy) = if d > 0.1 { ((p.0 - ap.0) / d, (p.1 - ap.1) / d) } else { (1.0, 0.0) };
        self.nodes[sta].pos = (p.0 + ux * c.mobility_step_m, p.1 + uy * c.mobility_step_m);
        self.q.push(self.now() + (c.mobility_every_s * 1e6) as u64, EventKind::Mobility { station: sta });
    }

    // ---- carrier sense and backoff ----

    fn has_traffic(&self, n: usize) -> bool {
        (n == AP && self.beacon_pending) || self.nodes[n].queues.values().any(|q| !q.is_empty())
    }

    fn check_idle(&mut self, n: usize) {
        let now = self.now();
        let node = &mut self.nodes[n];
        if node.busy > 0 || now < node.tx_until || node.in_exchange {
            return;
        }
        if now < node.nav_until {
            if node.nav_event != node.nav_until {
                node.nav_event = node.nav_until;
                let at = node.nav_until;
                self.q.push(at, EventKind::NavEnd { node: n });
            }
            return;
        }
        if !node.idle {
            node.idle = true;
            node.count_from = now;
        }
        if node.access_at.is_none() && self.has_traffic(n) {
            let node = &mut self.nodes[n];
            let fresh = node.edca.backoff.is_none();
            let b = node.edca.ensure_backoff(&mut node.rng);
            let aifs = node.edca.aifs_us as u64;
            if fresh && now >= node.count_from + aifs {
                // medium already idle past AIFS: the countdown starts now
                node.count_from = now - aifs;
            }
            let at = node.count_from + aifs + b as u64 * node.edca.slot_us as u64;
            let at = at.max(now);
            node.access_at = Some(at);
            node.gen += 1;
            let gen = node.gen;
            self.q.push(at, EventKind::Access { node: n, gen });
        }
    }

    fn go_busy(&mut self, n: usize) {
        let now = self.now();
        let node = &mut self.nodes[n];
        if !node.idle {
            return;
        }
        node.idle = false;
        if let Some(at) = node.access_at {
            if at > now {
                node.edca.freeze(node.count_from, now);
                node.access_at = None;
                node.gen += 1;
            }
        }
    }

    // ---- channel ----

    fn rx_dbm(&self, a: usize, b: usize) -> f64 {
        self.budget.rx_power_dbm(dist(self.nodes[a].pos, self.nodes[b].pos))
    }

    fn noise_dbm(&self) -> f64 {
        self.budget.noise_dbm(self.cfg.sim.bandwidth_mhz as f64)
    }

    fn control_noise_dbm(&self) -> f64 {
        let bw = if self.cfg.sim.standard == Standard::Ah {
            self.cfg.sim.bandwidth_mhz as f64
        } else {
            20.0
        };
        self.budget.noise_dbm(bw)
    }

    /// Downlink response of `sta` (n_rx(sta) x n_ap per subcarrier) at `t`.
    fn downlink(&mut self, sta: usize, t: u64) -> Vec<CMat> {
        let ch = &mut self.chans[sta - 1];
        ch.advance_to(t);
        let mix = self.cfg.channel.inter_user_mix;
        if mix > 0.0 {
            let sh = self.shared.get_mut(&ch.n_rx).expect("shared channel");
            sh.advance_to(t);
            mix_responses(&ch.h, &sh.h, mix)
        } else {
            ch.h.clone()
        }
    }

    /// Uplink response (n_ap x n_rx(sta)).
    fn uplink_h(&mut self, sta: usize, t: u64) -> Vec<CMat> {
        if let Some(ch) = self.uplink[sta - 1].as_mut() {
            ch.advance_to(t);
            return ch.h.clone();
        }
        self.downlink(sta, t).iter().map(|m| m.transpose()).collect()
    }

    fn fine(&self) -> bool {
        self.cfg.sim.link_mode != LinkMode::Lut
    }

    // ---- precoders ----

    fn precoders(&mut self, users: &[usize], streams: &[usize]) -> Option<Vec<PrecoderSet>> {
        let snaps: Vec<&Csi> = users.iter().map(|&u| self.csi[u].as_ref()).collect::<Option<Vec<_>>>()?;
        let key = (users.to_vec(), snaps.iter().map(|c| c.time_us).collect::<Vec<_>>());
        if let Some(p) = self.precoder_cache.get(&key) {
            return Some(p.clone());
        }
        let n_sc = snaps[0].h.len();
        let time = snaps.iter().map(|c| c.time_us).min().unwrap_or(0);
        let mu = users.len() > 1;
        let scheme = self.cfg.mimo.scheme;
        let mut sets = Vec::with_capacity(n_sc);
        for k in 0..n_sc {
            let hs: Vec<CMat> = snaps.iter().map(|c| c.h[k].clone()).collect();
            let set = if !mu {
                svd_su_precoder(&hs[0], streams[0], time)
            } else if scheme == MimoScheme::MuNoCti {
                independent_precoders(&hs, streams, time)
            } else {
                match self.cfg.mimo.precoder {
                    PrecoderKind::Zf => zf_precoders(&hs, time),
                    PrecoderKind::Mmse => mmse_precoders(&hs, self.cfg.mimo.mmse_rho, time),
                    PrecoderKind::Bd => bd_precoders(&hs, streams, time).map(|r| r.0),
                }
                .or_else(|_| mmse_precoders(&hs, 1e-2, time))
            };
            let mut set = set.ok()?;
            if self.cfg.mimo.quantization {
                let fb = self.sched.as_ref().map(|s| s.feedback).unwrap_or_else(FeedbackParams::su);
                perturb(&mut set, quantization_variance(fb.psi_bits, fb.phi_bits), &mut self.quant_rng);
            }
            sets.push(set);
        }
        if self.precoder_cache.len() > 64 {
            self.precoder_cache.clear();
        }
        self.precoder_cache.insert(key, sets.clone());
        Some(sets)
    }

    // ---- exchange construction ----

    fn control_rate(&self, data_rate: f64) -> f64 {
        self.t.control_rate_bps(data_rate)
    }

    fn lowest_ah(&self) -> Mcs {
        build_ladder(Standard::Ah, self.cfg.sim.bandwidth_mhz, 1, 0, self.cfg.sim.gi)[0]
    }

    /// Duration and LUT family of a control response after data at `mcs`.
    fn response(&self, kind: FrameKind, mcs: &Mcs, msdu: usize) -> (u32, usize, usize) {
        let octets = match kind {
            FrameKind::BlockAck => BA_OCTETS,
            _ => ACK_OCTETS,
        };
        if self.cfg.sim.standard == Standard::Ah {
            let scheme = if kind == FrameKind::BlockAck {
                AckScheme::BlockAck
            } else {
                self.cfg.mac.ack
            };
            let spec = ah_exchange(msdu, *mcs, scheme);
            let us = ack_us(&self.t, &spec).unwrap_or(0.0);
            let low = self.lowest_ah();
            let fam = mcs_family(&low).unwrap_or(0);
            let (fam, oct) = match scheme {
                AckScheme::UltraShort => (0, 1),
                AckScheme::Short => (fam, 3),
                _ => (fam, octets),
            };
            (round_us(us), fam, oct)
        } else {
            let rate = self.control_rate(mcs.data_rate_bps);
            (round_us(legacy_frame_us(&self.t, octets, rate)), legacy_rate_family(rate), octets)
        }
    }

    fn mgmt_frame(&self, octets: usize) -> (u32, usize) {
        if self.cfg.sim.standard == Standard::Ah {
            let low = self.lowest_ah();
            (
                round_us(ppdu_duration(&self.t, PreambleFormat::S1g, &low, octets, 1)),
                mcs_family(&low).unwrap_or(0),
            )
        } else {
            let rate = self.t.basic_rates_bps.first().copied().unwrap_or(6e6);
            (round_us(legacy_frame_us(&self.t, octets, rate)), legacy_rate_family(rate))
        }
    }

    fn uses_ba(&self, max_agg: usize) -> bool {
        match self.cfg.sim.standard {
            Standard::Ac => true,
            Standard::N => max_agg > 1,
            _ => false,
        }
    }

    fn txop_limit(&self) -> u32 {
        self.cfg.mac.txop_us.unwrap_or_else(|| self.t.txop_limit(self.cfg.mac.ac))
    }

    fn spans(&self, pre: f64, mcs: &Mcs, octets: &[usize]) -> Vec<(f64, f64)> {
        let sym = if self.cfg.sim.standard == Standard::Ah {
            self.t.symbol_us * if mcs.gi == Gi::Short { 0.9 } else { 1.0 }
        } else {
            mcs.symbol_us()
        };
        let nd = mcs.n_dbps as f64;
        let service = self.t.service_bits as f64;
        let mut cum = 0.0;
        let mut out = Vec::with_capacity(octets.len());
        for &o in octets {
            let sub = if octets.len() > 1 || self.uses_ba(2) { ampdu_subframe_octets(o) } else { o } as f64;
            let from = pre + libm::floor((service + 8.0 * cum) / nd) * sym;
            let to = pre + libm::ceil((service + 8.0 * (cum + sub)) / nd) * sym;
            out.push((from, to));
            cum += sub;
        }
        out
    }

    fn new_exchange(&mut self, initiator: usize, steps: Vec<Step>, kind: ExKind) {
        let now = self.now();
        let id = self.next_ex;
        self.next_ex += 1;
        let end = steps.last().map(|s| s.start + s.dur as u64).unwrap_or(now);
        for (i, s) in steps.iter().enumerate() {
            self.q.push(s.start, EventKind::StepStart { ex: id, step: i });
        }
        self.q.push(end, EventKind::ExchangeEnd { ex: id });
        let n = steps.len();
        self.exchanges.insert(
            id,
            Exchange {
                initiator,
                start: now,
                steps,
                decoded: vec![Vec::new(); n],
                kind,
            },
        );
        self.nodes[initiator].in_exchange = true;
        self.n_exchanges += 1;
    }

    /// Lay out steps back to back with SIFS gaps, starting now.
    fn chain(&self, parts: Vec<(usize, Vec<usize>, FrameKind, u32, usize)>, n_rts: usize) -> Vec<Step> {
        let mut t = self.now();
        let mut out = Vec::with_capacity(parts.len());
        for (i, (src, dst, kind, dur, octets)) in parts.into_iter().enumerate() {
            if i > 0 {
                t += self.t.sifs_us as u64;
            }
            out.push(Step {
                src,
                dst,
                kind,
                start: t,
                dur,
                octets,
                rts: i < n_rts,
            });
            t += dur as u64;
        }
        out
    }

    fn on_access(&mut self, n: usize) {
        {
            let node = &mut self.nodes[n];
            node.access_at = None;
            node.edca.consume();
        }
        if self.cfg.channel.reseed_per_txop {
            for ch in self.chans.iter_mut() {
                ch.redraw();
            }
        }
        if n == AP && self.beacon_pending {
            self.beacon_pending = false;
            self.beacon_count += 1;
            let octets = if self.cfg.sim.standard == Standard::Ah {
                if self.beacon_count % 100 == 1 {
                    S1G_LONG_BEACON_OCTETS
                } else {
                    S1G_SHORT_BEACON_OCTETS
                }
            } else {
                BEACON_BODY_OCTETS + mac_header_octets(self.cfg.sim.standard, false) + FCS_OCTETS
            };
            let (dur, _) = self.mgmt_frame(octets);
            let steps = self.chain(vec![(AP, vec![], FrameKind::Beacon, dur, octets)], 0);
            self.new_exchange(AP, steps, ExKind::Beacon);
            return;
        }
        if n == AP && self.try_sounding() {
            return;
        }
        if n == AP {
            self.ap_data();
        } else if self.nodes[n].queues.get(&AP).is_some_and(|q| !q.is_empty()) {
            self.su_data(n, AP, Direction::Up);
        }
        if !self.nodes[n].in_exchange {
            self.check_idle(n);
        }
    }

    fn streams_for(&self, sta: usize) -> usize {
        (self.cfg.mac.n_ss as usize).min(self.nodes[sta].antennas).min(self.nodes[AP].antennas).max(1)
    }

    fn try_sounding(&mut self) -> bool {
        let Some(sched) = self.sched.as_ref() else {
            return false;
        };
        let now = self.now();
        let mut pick = None;
        for (g, members) in sched.groups.iter().enumerate() {
            let wants = members
                .iter()
                .any(|&m| self.nodes[AP].queues.get(&m).is_some_and(|q| !q.is_empty()));
            if wants && sched.due(g, now) {
                pick = Some(g);
                break;
            }
        }
        let Some(g) = pick else {
            return false;
        };
        let members = self.sched.as_ref().unwrap().groups[g].clone();
        let fb = self.sched.as_ref().unwrap().feedback;
        let mu = self.cfg.mimo.scheme != MimoScheme::SuBf;
        let streams = members.iter().map(|&m| self.streams_for(m)).max().unwrap_or(1);
        let ctrl = self.control_rate(24e6);
        let frames = sounding_frames(&self.t, AP, self.nodes[AP].antennas, &members, streams, &fb, mu, ctrl);
        let mut steps = Vec::with_capacity(frames.len());
        let mut t = now;
        for f in frames {
            t += f.gap_us as u64;
            let dst = match f.frame.kind {
                FrameKind::Ndpa | FrameKind::Ndp => members.clone(),
                _ => f.frame.dst.into_iter().collect(),
            };
            steps.push(Step {
                src: f.frame.src,
                dst,
                kind: f.frame.kind,
                start: t,
                dur: f.frame.duration_us,
                octets: f.frame.octets,
                rts: false,
            });
            t += f.frame.duration_us as u64;
        }
        self.soundings += 1;
        self.new_exchange(
            AP,
            steps,
            ExKind::Sounding {
                group: g,
                members,
                snapshots: BTreeMap::new(),
            },
        );
        true
    }

    fn ap_data(&mut self) {
        let n_sta = self.cfg.stations.len();
        let mut dst = None;
        for i in 0..n_sta {
            let s = (self.rr + i) % n_sta + 1;
            if self.nodes[AP].queues.get(&s).is_some_and(|q| !q.is_empty()) {
                dst = Some(s);
                break;
            }
        }
        let Some(dst) = dst else {
            return;
        };
        self.rr = dst % n_sta;
        if matches!(self.cfg.mimo.scheme, MimoScheme::MuCti | MimoScheme::MuNoCti) {
            let g = self.group_of[dst];
            let members: Vec<usize> = self.sched.as_ref().unwrap().groups[g]
                .iter()
                .copied()
                .filter(|&m| {
                    self.nodes[AP].queues.get(&m).is_some_and(|q| !q.is_empty())
                        && (self.csi[m].is_some() || !self.fine())
                })
                .collect();
            if members.len() >= 2 {
                self.mu_data(members);
                return;
            }
        }
        self.su_data(AP, dst, Direction::Down);
    }

    fn rate_of(&self, src: usize, dst: usize) -> Mcs {
        let link = &self.links[&(src, dst)];
        let head = self.nodes[src].queues[&dst].front().map_or(0, |m| m.failures);
        let r = link.amrr.rate_for_attempt(head).unwrap_or(0);
        link.ladder[r]
    }

    fn max_agg_for(&self, sta: usize) -> usize {
        let s = self.cfg.stations[sta - 1].max_agg;
        if s > 0 {
            s
        } else {
            self.cfg.mac.max_agg
        }
    }

    fn su_data(&mut self, src: usize, dst: usize, dir: Direction) {
        let sta = if src == AP { dst } else { src };
        let mcs = self.rate_of(src, dst);
        let n_ltf = ltf_count(mcs.n_ss as usize);
        let max_agg = self.max_agg_for(sta);
        let ba = self.uses_ba(max_agg);
        let resp_kind = if ba { FrameKind::BlockAck } else { FrameKind::Ack };
        let head_msdu = self.nodes[src].queues[&dst].front().map_or(0, |m| m.msdu);
        let (resp_dur, _, _) = self.response(resp_kind, &mcs, head_msdu);
        let count = if ba {
            let limits = AggLimits {
                txop_limit_us: self.txop_limit(),
                max_mpdus: max_agg,
                response_us: self.t.sifs_us as f64 + resp_dur as f64,
            };
            let sizes: Vec<usize> = self.nodes[src].queues[&dst].iter().map(|m| m.octets).collect();
            assemble_ampdu(&self.t, self.format, &mcs, n_ltf, &sizes, &limits)
        } else {
            1
        };
        let q = self.nodes[src].queues.get_mut(&dst).unwrap();
        let mpdus: Vec<Mpdu> = q.drain(..count.min(q.len())).collect();
        if mpdus.is_empty() {
            return;
        }
        let octets: usize = if ba {
            mpdus.iter().map(|m| ampdu_subframe_octets(m.octets)).sum()
        } else {
            mpdus[0].octets
        };
        let dur = round_us(ppdu_duration(&self.t, self.format, &mcs, octets, n_ltf));
        let kind = if ba { FrameKind::Ampdu } else { FrameKind::Data };
        let mut parts = Vec::new();
        if self.cfg.mac.rts {
            let rate = self.control_rate(mcs.data_rate_bps);
            let rts = round_us(legacy_frame_us(&self.t, RTS_OCTETS, rate));
            let cts = round_us(legacy_frame_us(&self.t, CTS_OCTETS, rate));
            parts.push((src, vec![dst], FrameKind::Data, rts, RTS_OCTETS));
            parts.push((dst, vec![src], FrameKind::Ack, cts, CTS_OCTETS));
        }
        parts.push((src, vec![dst], kind, dur, octets));
        parts.push((dst, vec![src], resp_kind, resp_dur, 0));
        let n_rts = if self.cfg.mac.rts { 2 } else { 0 };
        let steps = self.chain(parts, n_rts);
        let n = mpdus.len();
        let precoders = if dir == Direction::Down && self.fine() && self.cfg.mimo.scheme != MimoScheme::Open {
            self.precoders(&[sta], &[mcs.n_ss as usize])
        } else {
            None
        };
        self.new_exchange(
            src,
            steps,
            ExKind::Data {
                dir,
                src,
                users: vec![DataUser {
                    sta,
                    mpdus,
                    mcs,
                    ok: vec![false; n],
                    acked: false,
                }],
                mu: false,
                precoders,
            },
        );
    }

    fn mu_data(&mut self, members: Vec<usize>) {
        let mcs: Vec<Mcs> = members.iter().map(|&m| self.rate_of(AP, m)).collect();
        let streams: Vec<usize> = mcs.iter().map(|m| m.n_ss as usize).collect();
        let total: usize = streams.iter().sum();
        let n_ltf = ltf_count(total);
        let ba_rate = self.control_rate(mcs.iter().map(|m| m.data_rate_bps).fold(f64::INFINITY, f64::min));
        let ba = round_us(legacy_frame_us(&self.t, BA_OCTETS, ba_rate));
        let bar = round_us(legacy_frame_us(&self.t, BAR_OCTETS, ba_rate));
        let k = members.len() as f64;
        let sifs = self.t.sifs_us as f64;
        let limits = AggLimits {
            txop_limit_us: self.txop_limit(),
            max_mpdus: self.cfg.mac.mu_max_agg,
            response_us: sifs + ba as f64 + (k - 1.0) * (2.0 * sifs + bar as f64 + ba as f64),
        };
        let sizes: Vec<Vec<usize>> = members
            .iter()
            .map(|m| self.nodes[AP].queues[m].iter().map(|x| x.octets).collect())
            .collect();
        let refs: Vec<&[usize]> = sizes.iter().map(|v| v.as_slice()).collect();
        let (counts, dur) = assemble_mu(&self.t, &mcs, n_ltf, &refs, &limits);
        let mut users = Vec::new();
        for ((&m, &c), &r) in members.iter().zip(&counts).zip(&mcs) {
            let q = self.nodes[AP].queues.get_mut(&m).unwrap();
            let mpdus: Vec<Mpdu> = q.drain(..c.min(q.len())).collect();
            let n = mpdus.len();
            users.push(DataUser {
                sta: m,
                mpdus,
                mcs: r,
                ok: vec![false; n],
                acked: false,
            });
        }
        let mut parts = vec![(AP, members.clone(), FrameKind::MuPpdu, round_us(dur), 0)];
        for (i, &m) in members.iter().enumerate() {
            if i > 0 {
                parts.push((AP, vec![m], FrameKind::BlockAckReq, bar, BAR_OCTETS));
            }
            parts.push((m, vec![AP], FrameKind::BlockAck, ba, BA_OCTETS));
        }
        let steps = self.chain(parts, 0);
        let precoders = if self.fine() {
            self.precoders(&members, &streams)
        } else {
            None
        };
        self.new_exchange(
            AP,
            steps,
            ExKind::Data {
                dir: Direction::Down,
                src: AP,
                users,
                mu: true,
                precoders,
            },
        );
    }

    // ---- air ----

    fn step_allowed(&self, ex: &Exchange, i: usize) -> bool {
        let s = &ex.steps[i];
        if s.src == ex.initiator {
            // data after an unanswered RTS is not sent
            if i > 0 && ex.steps[i - 1].rts && ex.steps[i - 1].src != ex.initiator {
                return ex.decoded[i - 1].contains(&ex.initiator);
            }
            return true;
        }
        let me = s.src;
        match (&ex.kind, s.kind) {
            (ExKind::Data { mu, .. }, FrameKind::Ack | FrameKind::BlockAck) => {
                if s.rts {
                    return ex.decoded[i - 1].contains(&me);
                }
                let data_step = ex.steps.iter().position(|x| x.kind.is_data()).unwrap();
                let got = ex.decoded[data_step].contains(&me);
                if *mu && i >= 2 && ex.steps[i - 1].kind == FrameKind::BlockAckReq {
                    got && ex.decoded[i - 1].contains(&me)
                } else {
                    got
                }
            }
            (ExKind::Sounding { .. }, FrameKind::BfReport) => {
                let prev = &ex.steps[i - 1];
                if prev.kind == FrameKind::BfPoll {
                    ex.decoded[i - 1].contains(&me)
                } else {
                    // first report answers the NDP announcement
                    ex.decoded[0].contains(&me) && ex.decoded[1].contains(&me)
                }
            }
            _ => true,
        }
    }

    fn on_step(&mut self, exid: u64, i: usize) {
        let now = self.now();
        let allowed = {
            let ex = &self.exchanges[&exid];
            self.step_allowed(ex, i) && self.nodes[ex.steps[i].src].tx_until <= now
        };
        if !allowed {
            return;
        }
        let (src, kind, dur, octets, exk_data) = {
            let ex = &self.exchanges[&exid];
            let s = &ex.steps[i];
            (s.src, s.kind, s.dur, s.octets, s.kind.is_data())
        };
        if kind == FrameKind::Ndp {
            self.take_snapshots(exid);
        }
        let payload = if exk_data && !self.is_rts(exid, i) {
            self.data_payload(exid)
        } else {
            let fam = match kind {
                FrameKind::Ndp => 1,
                _ => {
                    if self.cfg.sim.standard == Standard::Ah {
                        mcs_family(&self.lowest_ah()).unwrap_or(0)
                    } else {
                        legacy_rate_family(self.control_rate(24e6))
                    }
                }
            };
            let (family, octets) = match (&self.exchanges[&exid].kind, kind) {
                (ExKind::Data { users, .. }, FrameKind::Ack | FrameKind::BlockAck) if !self.is_rts(exid, i) => {
                    let (_, f, o) = self.response(kind, &users[0].mcs, users[0].mpdus.first().map_or(0, |m| m.msdu));
                    (f, o)
                }
                _ => (fam, octets.max(1)),
            };
            Payload::Control { family, octets }
        };
        let pre = match &payload {
            Payload::Data { users } => preamble_us(&self.t, self.format, users[0].mcs.bandwidth_mhz, ltf_count(users.iter().map(|u| u.mcs.n_ss as usize).sum())),
            Payload::Control { .. } => {
                if self.cfg.sim.standard == Standard::Ah {
                    preamble_us(&self.t, PreambleFormat::S1g, self.cfg.sim.bandwidth_mhz, 1)
                } else {
                    preamble_us(&self.t, PreambleFormat::Legacy, 20, 1)
                }
            }
        };
        let id = self.next_tx;
        self.next_tx += 1;
        let rx_dbm: Vec<f64> = (0..self.nodes.len()).map(|n| if n == src { 0.0 } else { self.rx_dbm(src, n) }).collect();
        let end = now + dur as u64;
        let nav_end = {
            let ex = &self.exchanges[&exid];
            ex.steps.last().map(|s| s.start + s.dur as u64).unwrap_or(end)
        };
        let initiator = self.exchanges[&exid].initiator;
        self.txs.push_back(Tx {
            id,
            src,
            start: now,
            end,
            preamble_us: pre.min(dur as f64),
            rx_dbm: rx_dbm.clone(),
            payload,
            ex: exid,
            step: i,
        });
        if let Some(tr) = self.trace.as_mut() {
            tr.frames.push(AirFrame {
                start_us: now,
                end_us: end,
                src,
                kind,
                exchange: exid,
            });
        }
        self.nodes[src].tx_until = end;
        self.go_busy(src);
        let sens = self.cfg.phy.sensitivity_dbm;
        for (n, &p) in rx_dbm.iter().enumerate() {
            if n == src || p < sens {
                continue;
            }
            self.nodes[n].busy += 1;
            if n != initiator && kind != FrameKind::Beacon {
                let node = &mut self.nodes[n];
                node.nav_until = node.nav_until.max(nav_end);
            }
            self.go_busy(n);
        }
        self.q.push(end, EventKind::TxEnd { tx: id });
    }

    fn is_rts(&self, exid: u64, i: usize) -> bool {
        self.exchanges[&exid].steps[i].rts
    }

    fn take_snapshots(&mut self, exid: u64) {
        if !self.fine() {
            return;
        }
        let now = self.now();
        let members = match &self.exchanges[&exid].kind {
            ExKind::Sounding { members, .. } => members.clone(),
            _ => return,
        };
        let mut snaps = BTreeMap::new();
        for m in members {
            snaps.insert(m, self.downlink(m, now));
        }
        if let Some(Exchange {
            kind: ExKind::Sounding { snapshots, .. },
            ..
        }) = self.exchanges.get_mut(&exid)
        {
            *snapshots = snaps;
        }
    }

    /// Effective SINR per served user for the data PPDU of `exid`, at now.
    fn data_payload(&mut self, exid: u64) -> Payload {
        let now = self.now();
        let (dir, users_info, precoders, mu): (Direction, Vec<(usize, Mcs, Vec<usize>)>, Option<Vec<PrecoderSet>>, bool) = {
            let ex = &self.exchanges[&exid];
            match &ex.kind {
                ExKind::Data {
                    dir, users, precoders, mu, ..
                } => (
                    *dir,
                    users.iter().map(|u| (u.sta, u.mcs, u.mpdus.iter().map(|m| m.octets).collect())).collect(),
                    precoders.clone(),
                    *mu,
                ),
                _ => unreachable!(),
            }
        };
        let noise = self.noise_dbm();
        let k_users = users_info.len();
        let total_ss: usize = users_info.iter().map(|u| u.1.n_ss as usize).sum();
        let pre = preamble_us(&self.t, self.format, users_info[0].1.bandwidth_mhz, ltf_count(total_ss));
        let mut out = Vec::with_capacity(k_users);
        let snr_db: Vec<f64> = users_info
            .iter()
            .map(|u| self.rx_dbm(AP, u.0) - noise)
            .collect();
        let (sinr, sig, cti): (Vec<f64>, Vec<f64>, Vec<f64>) = if !self.fine() {
            let n_ap = self.nodes[AP].antennas as f64;
            let v: Vec<(f64, f64, f64)> = users_info
                .iter()
                .zip(&snr_db)
                .map(|(u, &s)| {
                    let n_sta = self.nodes[u.0].antennas as f64;
                    let g = 10.0 * libm::log10(n_ap * n_sta / u.1.n_ss as f64) - 10.0 * libm::log10(k_users as f64);
                    (s + g, s + g, f64::NEG_INFINITY)
                })
                .collect();
            (v.iter().map(|x| x.0).collect(), v.iter().map(|x| x.1).collect(), v.iter().map(|x| x.2).collect())
        } else {
            if let Some(tr) = self.trace.as_mut() {
                tr.fine_evaluations += 1;
            }
            let mode = if self.cfg.mimo.scheme == MimoScheme::MuNoCti {
                CtiMode::NoCti
            } else {
                CtiMode::WithCti
            };
            let hs: Vec<Vec<CMat>> = users_info
                .iter()
                .zip(&snr_db)
                .map(|(u, &s)| {
                    let h = if dir == Direction::Down { self.downlink(u.0, now) } else { self.uplink_h(u.0, now) };
                    let n_t = h[0].cols as f64;
                    let a = libm::sqrt(db_to_lin(s) / n_t);
                    h.iter().map(|m| m.scale_re(a)).collect()
                })
                .collect();
            let n_sc = hs[0].len();
            let mut per_user: Vec<Vec<f64>> = vec![Vec::new(); k_users];
            let mut useful = vec![0.0; k_users];
            let mut leak = vec![0.0; k_users];
            for k in 0..n_sc {
                let set = match &precoders {
                    Some(p) if mu || p.len() == n_sc => p[k].clone(),
                    _ => open_loop(hs[0][k].cols, users_info[0].1.n_ss as usize),
                };
                let hk: Vec<CMat> = hs.iter().map(|h| h[k].clone()).collect();
                let r = crate::precoding::evaluate_sinr(&hk, &set, 1.0, mode);
                for (u, s) in r.into_iter().enumerate() {
                    per_user[u].extend(s.streams);
                    useful[u] += s.useful / hk[u].rows as f64;
                    leak[u] += s.cti / hk[u].rows as f64;
                }
            }
            let mut a = Vec::new();
            let mut b = Vec::new();
            let mut c = Vec::new();
            for u in 0..k_users {
                a.push(effective_sinr_db(&per_user[u]));
                b.push(lin_to_db(useful[u] / n_sc as f64));
                c.push(if mode == CtiMode::NoCti { f64::NEG_INFINITY } else { lin_to_db(leak[u] / n_sc as f64) });
            }
            (a, b, c)
        };
        for (i, (sta, mcs, octets)) in users_info.into_iter().enumerate() {
            out.push(UserPayload {
                sta,
                spans: self.spans(pre, &mcs, &octets),
                mcs,
                octets,
                sinr_db: sinr[i],
                signal_db: sig[i],
                cti_db: cti[i],
            });
        }
        Payload::Data { users: out }
    }

    fn on_tx_end(&mut self, id: u64) {
        let now = self.now();
        let tx = self.txs.iter().find(|t| t.id == id).cloned().expect("tx record");
        let (exid, step) = (tx.ex, tx.step);
        let sens = self.cfg.phy.sensitivity_dbm;
        // receivers first, so that decoded state is known before anyone reacts
        let dsts = self.exchanges[&exid].steps[step].dst.clone();
        let mut decoded = Vec::new();
        for &r in &dsts {
            if self.receive(&tx, r) {
                decoded.push(r);
            }
        }
        if let Some(ex) = self.exchanges.get_mut(&exid) {
            ex.decoded[step] = decoded;
        }
        for (n, &p) in tx.rx_dbm.iter().enumerate() {
            if n != tx.src && p >= sens {
                self.nodes[n].busy -= 1;
                self.check_idle(n);
            }
        }
        self.check_idle(tx.src);
        while self.txs.front().is_some_and(|t| t.end + TX_HISTORY_US < now) {
            self.txs.pop_front();
        }
    }

    /// Decide reception of `tx` at `r`; data MPDU outcomes are written into the exchange.
    fn receive(&mut self, tx: &Tx, r: usize) -> bool {
        let sens = self.cfg.phy.sensitivity_dbm;
        let signal = tx.rx_dbm[r];
        if signal < sens {
            return false;
        }
        let mut specs = Vec::new();
        let mut collided = false;
        for o in self.txs.iter() {
            if o.id == tx.id || o.end <= tx.start || o.start >= tx.end {
                continue;
            }
            if o.src == r {
                return false;
            }
            let p = o.rx_dbm[r];
            let earlier = o.start < tx.start || (o.start == tx.start && (p > signal || (p == signal && o.id < tx.id)));
            if earlier && p >= sens {
                self.collisions += 1;
                return false;
            }
            collided |= p >= sens;
            let start = o.start.saturating_sub(tx.start) as f64;
            specs.push(CollisionSpec {
                start_us: start,
                end_us: (o.end.min(tx.end) - tx.start) as f64,
                interferer_dbm: p,
                channels: vec![0],
                hits_header: start < tx.preamble_us,
            });
        }
        if collided {
            self.collisions += 1;
        }
        let control_snr = signal - self.control_noise_dbm();
        match &tx.payload {
            Payload::Control { family, octets } => {
                let rx = Reception {
                    signal_dbm: signal,
                    block_sinr_db: vec![control_snr],
                    block_channels: vec![vec![0]],
                    preamble_us: tx.preamble_us,
                    duration_us: (tx.end - tx.start) as f64,
                    beta_over_alpha: self.cfg.phy.beta_over_alpha,
                };
                let v = apply_collision(&rx, &specs, self.lut);
                let sinr = v.mpdu_sinr_db(0, tx.preamble_us, (tx.end - tx.start) as f64);
                let p_ok = (1.0 - v.frame_loss_prob) * (1.0 - self.lut.per_family(*family, sinr, *octets));
                self.link_rng.random::<f64>() < p_ok
            }
            Payload::Data { users } => {
                let Some(u) = users.iter().find(|u| u.sta == r || (r == AP)) else {
                    return false;
                };
                let fam = mcs_family(&u.mcs).unwrap_or(0);
                let rx = Reception {
                    signal_dbm: signal,
                    block_sinr_db: vec![u.sinr_db],
                    block_channels: vec![vec![0]],
                    preamble_us: tx.preamble_us,
                    duration_us: (tx.end - tx.start) as f64,
                    beta_over_alpha: self.cfg.phy.beta_over_alpha,
                };
                let v = apply_collision(&rx, &specs, self.lut);
                let slots: Vec<MpduSlot> = u
                    .spans
                    .iter()
                    .zip(&u.octets)
                    .map(|(&(from_us, to_us), &octets)| MpduSlot {
                        block: 0,
                        from_us,
                        to_us,
                        octets,
                    })
                    .collect();
                let (lost, oks) = draw_fcs(&v, &slots, fam, self.lut, &mut self.link_rng);
                let now = tx.end;
                let (station, dir) = if r == AP { (tx.src, Direction::Up) } else { (r, Direction::Down) };
                self.log.push(tx.start, station, dir, Metric::SinrDb, u.sinr_db);
                if self.cfg.mimo.scheme != MimoScheme::Open && users.len() > 1 || u.cti_db.is_finite() {
                    self.log.push(tx.start, station, dir, Metric::SignalDb, u.signal_db);
                    if u.cti_db.is_finite() {
                        self.log.push(tx.start, station, dir, Metric::CtiDb, u.cti_db);
                    }
                }
                if collided {
                    let worst = specs.iter().map(|c| c.interferer_dbm).fold(f64::NEG_INFINITY, f64::max);
                    self.log.push(tx.start, station, dir, Metric::Collision, signal - worst);
                }
                let sta = u.sta;
                let any = oks.iter().any(|&x| x);
                self.record_rx(tx.ex, sta, &oks, now, station, dir);
                any || !lost
            }
        }
    }

    fn record_rx(&mut self, exid: u64, sta: usize, oks: &[bool], now: u64, station: usize, dir: Direction) {
        let mut bits = 0u64;
        if let Some(Exchange {
            kind: ExKind::Data { users, .. },
            ..
        }) = self.exchanges.get_mut(&exid)
        {
            if let Some(u) = users.iter_mut().find(|u| u.sta == sta) {
                for ((m, ok), &o) in u.mpdus.iter_mut().zip(u.ok.iter_mut()).zip(oks) {
                    *ok = o;
                    if o && !m.received {
                        m.received = true;
                        bits += 8 * m.msdu as u64;
                    }
                }
            }
        }
        for &o in oks {
            self.log.push(now, station, dir, Metric::Fcs, if o { 1.0 } else { 0.0 });
        }
        if bits > 0 {
            self.log.push(now, station, dir, Metric::DeliveredBits, bits as f64);
        }
    }

    fn on_exchange_end(&mut self, exid: u64) {
        let now = self.now();
        let Some(ex) = self.exchanges.remove(&exid) else {
            return;
        };
        let init = ex.initiator;
        let mut success = true;
        match ex.kind {
            ExKind::Beacon => {}
            ExKind::Sounding {
                group,
                members,
                snapshots,
            } => {
                for (i, s) in ex.steps.iter().enumerate() {
                    if s.kind == FrameKind::BfReport && ex.decoded[i].contains(&AP) {
                        if let Some(h) = snapshots.get(&s.src) {
                            self.csi[s.src] = Some(Csi {
                                h: h.clone(),
                                time_us: ex.steps[1].start,
                            });
                        }
                    } else if s.kind == FrameKind::BfReport {
                        success = false;
                    }
                }
                if !self.fine() {
                    for m in members {
                        self.csi[m] = Some(Csi {
                            h: Vec::new(),
                            time_us: ex.start,
                        });
                    }
                }
                if let Some(sched) = self.sched.as_mut() {
                    sched.fired(group, ex.start);
                }
            }
            ExKind::Data {
                dir,
                src,
                mut users,
                mu,
                ..
            } => {
                // which responses reached the initiator
                for (i, s) in ex.steps.iter().enumerate() {
                    if matches!(s.kind, FrameKind::BlockAck | FrameKind::Ack) && !s.rts {
                        if let Some(u) = users.iter_mut().find(|u| u.sta == s.src || (s.src == AP && !mu)) {
                            u.acked = ex.decoded[i].contains(&init);
                        }
                    }
                }
                let mut any = false;
                for u in users.iter_mut() {
                    let peer = if src == AP { u.sta } else { AP };
                    let station = u.sta;
                    let outcomes: Vec<bool> = u.ok.iter().map(|&ok| ok && u.acked).collect();
                    any |= outcomes.iter().any(|&x| x);
                    let retries = u.mpdus.iter().filter(|m| m.failures > 0).count();
                    self.log.push(ex.start, station, dir, Metric::PhyRate, u.mcs.data_rate_bps);
                    self.log.push(ex.start, station, dir, Metric::Retry, retries as f64 / u.mpdus.len().max(1) as f64);
                    let link = self.links.get_mut(&(src, peer)).unwrap();
                    link.amrr.on_result(&outcomes);
                    link.amrr.tick(now);
                    let mut back = Vec::new();
                    for (m, ok) in u.mpdus.drain(..).zip(outcomes) {
                        if ok {
                            self.counters.delivered += 1;
                            continue;
                        }
                        let mut m = m;
                        m.failures += 1;
                        if link.amrr.rate_for_attempt(m.failures).is_none() {
                            if m.received {
                                self.counters.delivered += 1;
                            } else {
                                self.counters.dropped += 1;
                                *self.flow_drops.entry((station, dir)).or_default() += 1;
                                self.log.push(now, station, dir, Metric::Drop, 1.0);
                            }
                        } else {
                            back.push(m);
                        }
                    }
                    let q = self.nodes[src].queues.entry(peer).or_default();
                    for m in back.into_iter().rev() {
                        q.push_front(m);
                    }
                }
                success = any;
            }
        }
        let node = &mut self.nodes[init];
        node.in_exchange = false;
        if success {
            node.edca.on_success();
        } else {
            node.edca.on_failure();
        }
        self.check_idle(init);
    }

    fn snapshot_counters(&self) -> Counters {
        let queued: u64 = self.nodes.iter().flat_map(|n| n.queues.values()).map(|q| q.len() as u64).sum();
        let in_flight: u64 = self
            .exchanges
            .values()
            .map(|e| match &e.kind {
                ExKind::Data { users, .. } => users.iter().map(|u| u.mpdus.len() as u64).sum(),
                _ => 0,
            })
            .sum();
        Counters {
            queued,
            in_flight,
            ..self.counters
        }
    }

    fn finish(mut self) -> MetricsLog {
        let c = self.snapshot_counters();
        if !c.balanced() {
            self.violations += 1;
        }
        let mut log = core::mem::take(&mut self.log);
        let step = self.cfg.sim.sample_ms * 1000;
        let window = self.cfg.sim.window_ms * 1000;
        log.add_throughput_series(self.horizon, window, step);
        let dur_s = self.horizon as f64 * 1e-6;
        let mut flows: BTreeMap<(usize, Direction), FlowSummary> = BTreeMap::new();
        for a in &self.apps {
            flows.entry((a.station, a.dir)).or_insert(FlowSummary {
                station: a.station,
                direction: a.dir,
                delivered_bits: 0,
                throughput_bps: 0.0,
                mean_phy_rate_bps: 0.0,
                retry_ratio: 0.0,
                drops: 0,
            });
        }
        let mut rates: BTreeMap<(usize, Direction), (f64, f64)> = BTreeMap::new();
        let mut fcs: BTreeMap<(usize, Direction), (f64, f64)> = BTreeMap::new();
        for r in &log.records {
            let key = (r.station, r.direction);
            match r.metric {
                Metric::DeliveredBits => {
                    if let Some(f) = flows.get_mut(&key) {
                        f.delivered_bits += r.value as u64;
                    }
                }
                Metric::PhyRate => {
                    let e = rates.entry(key).or_default();
                    e.0 += r.value;
                    e.1 += 1.0;
                }
                Metric::Fcs => {
                    let e = fcs.entry(key).or_default();
                    e.0 += 1.0 - r.value;
                    e.1 += 1.0;
                }
                _ => {}
            }
        }
        let mut total_bits = 0;
        for (key, f) in flows.iter_mut() {
            f.throughput_bps = f.delivered_bits as f64 / dur_s;
            if let Some((s, n)) = rates.get(key) {
                f.mean_phy_rate_bps = s / n;
            }
            if let Some((s, n)) = fcs.get(key) {
                f.retry_ratio = s / n;
            }
            f.drops = self.flow_drops.get(key).copied().unwrap_or(0);
            total_bits += f.delivered_bits;
        }
        log.summary.duration_s = dur_s;
        log.summary.counters = c;
        log.summary.delivered_bits = total_bits;
        log.summary.throughput_bps = total_bits as f64 / dur_s;
        log.summary.flows = flows.into_values().collect();
        log.summary.collisions = self.collisions;
        log.summary.exchanges = self.n_exchanges;
        log.summary.soundings = self.soundings;
        log.summary.beacons = self.beacon_count;
        log.summary.conservation_violations = self.violations;
        log
    }
}
