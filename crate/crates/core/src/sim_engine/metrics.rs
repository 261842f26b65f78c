//! Time-stamped output series and run totals.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::config::Direction;
use crate::mac_protocol::FrameKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    DeliveredBits,
    Throughput,
    PhyRate,
    Retry,
    Fcs,
    SinrDb,
    SignalDb,
    CtiDb,
    Collision,
    Drop,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::DeliveredBits => "delivered_bits",
            Metric::Throughput => "throughput_bps",
            Metric::PhyRate => "phy_rate_bps",
            Metric::Retry => "retry_ratio",
            Metric::Fcs => "fcs_ok",
            Metric::SinrDb => "sinr_db",
            Metric::SignalDb => "signal_db",
            Metric::CtiDb => "cti_db",
            Metric::Collision => "collision_sir_db",
            Metric::Drop => "drop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub time_us: u64,
    /// 0 aggregates every station.
    pub station: usize,
    pub direction: Direction,
    pub metric: Metric,
    pub value: f64,
}

/// MSDU accounting buckets; `generated` equals the sum of the other four.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub generated: u64,
    pub delivered: u64,
    pub queued: u64,
    pub in_flight: u64,
    pub dropped: u64,
}

impl Counters {
    pub fn balanced(&self) -> bool {
        self.generated == self.delivered + self.queued + self.in_flight + self.dropped
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSummary {
    pub station: usize,
    pub direction: Direction,
    pub delivered_bits: u64,
    pub throughput_bps: f64,
    pub mean_phy_rate_bps: f64,
    pub retry_ratio: f64,
    pub drops: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub duration_s: f64,
    pub counters: Counters,
    pub delivered_bits: u64,
    pub throughput_bps: f64,
    pub flows: Vec<FlowSummary>,
    pub collisions: u64,
    pub exchanges: u64,
    pub soundings: u64,
    pub beacons: u64,
    pub conservation_violations: u64,
    /// TxOP-level runs: number of TxOPs simulated.
    pub txops: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsLog {
    pub records: Vec<Record>,
    pub summary: Summary,
}

/// One transmission on air.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AirFrame {
    pub start_us: u64,
    pub end_us: u64,
    /// 0 is the AP.
    pub src: usize,
    pub kind: FrameKind,
    /// Frames of one exchange share this id.
    pub exchange: u64,
}

/// Event-level record of a run, collected only on request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunTrace {
    pub frames: Vec<AirFrame>,
    /// `(app index, time)` of every MSDU arrival.
    pub arrivals: Vec<(usize, u64)>,
    /// Data PPDUs whose SINR came from the channel and precoders.
    pub fine_evaluations: u64,
}

fn fmt_time(out: &mut String, us: u64) {
    let _ = write!(out, "{}.{:06}", us / 1_000_000, us % 1_000_000);
}

impl MetricsLog {
    pub fn push(&mut self, time_us: u64, station: usize, direction: Direction, metric: Metric, value: f64) {
        self.records.push(Record {
            time_us,
            station,
            direction,
            metric,
            value,
        });
    }

    pub fn series(&self, station: usize, direction: Direction, metric: Metric) -> Vec<(u64, f64)> {
        self.records
            .iter()
            .filter(|r| r.station == station && r.direction == direction && r.metric == metric)
            .map(|r| (r.time_us, r.value))
            .collect()
    }

    /// `time_s,station,direction,metric,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,station,direction,metric,value\n");
        for r in &self.records {
            fmt_time(&mut out, r.time_us);
            let _ = writeln!(out, ",{},{},{},{}", r.station, r.direction.name(), r.metric.name(), r.value);
        }
        out
    }

    /// Sliding throughput over `window_us`, every `step_us`, from the
    /// delivered-bit records, per flow and summed over stations (station 0).
    pub fn add_throughput_series(&mut self, horizon_us: u64, window_us: u64, step_us: u64) {
        let mut flows: BTreeMap<(usize, Direction), Vec<(u64, f64)>> = BTreeMap::new();
        for r in &self.records {
            if r.metric == Metric::DeliveredBits {
                flows.entry((r.station, r.direction)).or_default().push((r.time_us, r.value));
                flows.entry((0, r.direction)).or_default().push((r.time_us, r.value));
            }
        }
        let mut out = Vec::new();
        for ((sta, dir), events) in flows.iter_mut() {
            events.sort_by_key(|e| e.0);
            let (mut a, mut b) = (0, 0);
            let mut t = window_us;
            while t <= horizon_us {
                let lo = t - window_us;
                while b < events.len() && events[b].0 <= t {
                    b += 1;
                }
                while a < b && events[a].0 <= lo {
                    a += 1;
                }
                let bits: f64 = events[a..b].iter().map(|e| e.1).sum();
                out.push(Record {
                    time_us: t,
                    station: *sta,
                    direction: *dir,
                    metric: Metric::Throughput,
                    value: bits / (window_us as f64 * 1e-6),
                });
                t += step_us;
            }
        }
        self.records.extend(out);
    }

    /// Per-window throughput values of one flow.
    pub fn windows(&self, station: usize, direction: Direction) -> Vec<f64> {
        self.series(station, direction, Metric::Throughput)
            .into_iter()
            .map(|(_, v)| v)
            .collect()
    }
}
