//! Scenario runs: the event-driven simulator and the TxOP-level
//! multichannel experiment.

pub mod config;
mod des;
pub mod events;
pub mod metrics;
mod multichannel;

pub use config::{
    Direction, LinkMode, MimoScheme, Mode, PrecoderKind, ScenarioConfig, StationCfg, AppCfg,
};
pub use des::build_ladder;
pub use metrics::{AirFrame, Counters, FlowSummary, Metric, MetricsLog, Record, RunTrace, Summary};

use crate::error::Result;
use crate::link_abstraction::PerLut;

/// Validate `cfg` and run it to completion.
pub fn run(cfg: &ScenarioConfig, lut: &PerLut) -> Result<MetricsLog> {
    cfg.validate()?;
    match cfg.sim.mode {
        Mode::Des => Ok(des::Engine::new(cfg, lut)?.run()),
        Mode::Multichannel => multichannel::run(cfg, lut),
    }
}

/// Like [`run`], also returning the event-level trace. TxOP-level runs
/// have no events and return an empty trace.
pub fn run_traced(cfg: &ScenarioConfig, lut: &PerLut) -> Result<(MetricsLog, RunTrace)> {
    cfg.validate()?;
    match cfg.sim.mode {
        Mode::Des => Ok(des::Engine::new(cfg, lut)?.run_traced()),
        Mode::Multichannel => Ok((multichannel::run(cfg, lut)?, RunTrace::default())),
    }
}

/// One channel coefficient of a downlink trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub time_us: u64,
    pub station: usize,
    pub rx: usize,
    pub tx: usize,
    pub subcarrier: usize,
    pub value: crate::cmat::C64,
}

/// Downlink responses the simulator would see, sampled every `step_us`
/// over the scenario horizon, built from the same seeds as a run.
pub fn channel_trace(cfg: &ScenarioConfig, step_us: u64) -> Result<alloc::vec::Vec<TraceEntry>> {
    cfg.validate()?;
    let (mut chans, _, mut shared) = des::build_channels(cfg);
    let horizon = (cfg.sim.duration_s * 1e6) as u64;
    let mix = cfg.channel.inter_user_mix;
    let mut out = alloc::vec::Vec::new();
    let mut t = 0;
    while t <= horizon {
        for (i, ch) in chans.iter_mut().enumerate() {
            ch.advance_to(t);
            let h = match shared.get_mut(&ch.n_rx) {
                Some(sh) if mix > 0.0 => {
                    sh.advance_to(t);
                    crate::channel::mix_responses(&ch.h, &sh.h, mix)
                }
                _ => ch.h.clone(),
            };
            for (k, m) in h.iter().enumerate() {
                for r in 0..m.rows {
                    for c in 0..m.cols {
                        out.push(TraceEntry {
                            time_us: t,
                            station: i + 1,
                            rx: r,
                            tx: c,
                            subcarrier: k,
                            value: m[(r, c)],
                        });
                    }
                }
            }
        }
        t += step_us.max(1);
    }
    Ok(out)
}
