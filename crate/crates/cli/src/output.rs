//! Run-directory artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use xlwifi_core::sim_engine::{MetricsLog, ScenarioConfig};

use crate::error::CliResult;
use crate::scenario;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.scn";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FlowJson {
    pub station: usize,
    pub direction: &'static str,
    pub delivered_bits: u64,
    pub throughput_bps: f64,
    pub mean_phy_rate_bps: f64,
    pub retry_ratio: f64,
    pub drops: u64,
}

#[derive(Debug, Serialize)]
pub struct CountersJson {
    pub generated: u64,
    pub delivered: u64,
    pub queued: u64,
    pub in_flight: u64,
    pub dropped: u64,
    pub balanced: bool,
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub mode: &'static str,
    pub standard: &'static str,
    pub seed: Option<u64>,
    pub duration_s: f64,
    pub delivered_bits: u64,
    pub throughput_bps: f64,
    pub counters: CountersJson,
    pub flows: Vec<FlowJson>,
    pub collisions: u64,
    pub exchanges: u64,
    pub soundings: u64,
    pub beacons: u64,
    pub txops: u64,
    pub conservation_violations: u64,
    /// Every resolved `section.key` entry, in canonical order.
    pub config: Vec<(String, String)>,
}

pub fn summary_json(cfg: &ScenarioConfig, log: &MetricsLog) -> SummaryJson {
    let s = &log.summary;
    let c = &s.counters;
    SummaryJson {
        mode: match cfg.sim.mode {
            xlwifi_core::sim_engine::Mode::Des => "des",
            xlwifi_core::sim_engine::Mode::Multichannel => "multichannel",
        },
        standard: cfg.sim.standard.name(),
        seed: cfg.sim.seed,
        duration_s: s.duration_s,
        delivered_bits: s.delivered_bits,
        throughput_bps: s.throughput_bps,
        counters: CountersJson {
            generated: c.generated,
            delivered: c.delivered,
            queued: c.queued,
            in_flight: c.in_flight,
            dropped: c.dropped,
            balanced: c.balanced(),
        },
        flows: s
            .flows
            .iter()
            .map(|f| FlowJson {
                station: f.station,
                direction: f.direction.name(),
                delivered_bits: f.delivered_bits,
                throughput_bps: f.throughput_bps,
                mean_phy_rate_bps: f.mean_phy_rate_bps,
                retry_ratio: f.retry_ratio,
                drops: f.drops,
            })
            .collect(),
        collisions: s.collisions,
        exchanges: s.exchanges,
        soundings: s.soundings,
        beacons: s.beacons,
        txops: s.txops,
        conservation_violations: s.conservation_violations,
        config: cfg.entries(),
    }
}

/// Write metrics, summary and config echo of one run into `dir`.
pub fn write_run(dir: &Path, cfg: &ScenarioConfig, log: &MetricsLog) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let files = [
        (METRICS_FILE, log.to_csv()),
        (SUMMARY_FILE, serde_json::to_string_pretty(&summary_json(cfg, log))? + "\n"),
        (CONFIG_FILE, scenario::serialize(cfg)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct PointJson {
    pub dir: String,
    pub value: Option<String>,
    pub throughput_bps: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub output_dir: String,
    pub sweep: Option<SweepAxis>,
    pub parallelism: usize,
    pub seed_override: Option<String>,
    pub lut_sha256: String,
    pub points: Vec<PointJson>,
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(MANIFEST_FILE);
    std::fs::write(&p, serde_json::to_string_pretty(m)? + "\n")?;
    Ok(p)
}
