//! Subcommand implementations. Each returns text or writes files; `main`
//! only maps errors to exit codes.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use xlwifi_core::analytics::{
    ah_capacity_table, appendix_c_grid, ch6_saturation_grid, exchange_duration, mac_efficiency, SoundingScheme,
};
use xlwifi_core::cmat::CMat;
use xlwifi_core::link_abstraction::PerLut;
use xlwifi_core::precoding::{bd_precoders, max_leakage, mmse_precoders, svd, zf_precoders};
use xlwifi_core::rates_framing::{catalog, Standard, TimingParams};
use xlwifi_core::rng::{cn, stream};
use xlwifi_core::sim_engine::{self, ScenarioConfig};

use crate::error::{CliError, CliResult};
use crate::output::{self, Manifest, PointJson, SweepAxis};
use crate::{lut_io, scenario};

/// Options shared by `run` and `sweep`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub scenario: String,
    pub out_dir: String,
    pub lut: Option<String>,
    pub lut_sha256: Option<String>,
    /// Value of the seed environment variable, if set.
    pub seed_env: Option<String>,
    pub channel_trace: Option<String>,
    pub trace_step_ms: u64,
}

fn prepare(opts: &RunOptions) -> CliResult<(String, ScenarioConfig, PerLut, String)> {
    let (label, mut cfg) = scenario::load(&opts.scenario)?;
    scenario::seed_override(&mut cfg, opts.seed_env.clone())?;
    cfg.validate()?;
    let (lut, sha) = lut_io::load(opts.lut.as_deref(), opts.lut_sha256.as_deref())?;
    Ok((label, cfg, lut, sha))
}

pub fn cmd_run(opts: &RunOptions) -> CliResult<String> {
    let (label, cfg, lut, sha) = prepare(opts)?;
    let dir = Path::new(&opts.out_dir);
    let log = sim_engine::run(&cfg, &lut)?;
    output::write_run(dir, &cfg, &log)?;
    if let Some(p) = &opts.channel_trace {
        write_trace(Path::new(p), &cfg, opts.trace_step_ms.max(1) * 1000)?;
    }
    output::write_manifest(
        dir,
        &Manifest {
            tool: "xlwifi",
            version: env!("CARGO_PKG_VERSION"),
            scenario: label,
            output_dir: opts.out_dir.clone(),
            sweep: None,
            parallelism: 1,
            seed_override: opts.seed_env.clone(),
            lut_sha256: sha,
            points: vec![PointJson {
                dir: ".".into(),
                value: None,
                throughput_bps: log.summary.throughput_bps,
            }],
        },
    )?;
    Ok(format!(
        "throughput {:.3} Mbit/s, delivered {} bits, {} exchanges; outputs in {}\n",
        log.summary.throughput_bps / 1e6,
        log.summary.delivered_bits,
        log.summary.exchanges,
        opts.out_dir
    ))
}

/// `a:b:step` (inclusive) or a comma list.
pub fn sweep_values(spec: &str) -> CliResult<Vec<String>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config("sweep.values", format!("bad number {s:?}")))
        };
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(CliError::config("sweep.values", "need a <= b and step > 0"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| (a + i as f64 * step).to_string()).collect());
    }
    let v: Vec<String> = spec.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if v.is_empty() {
        return Err(CliError::config("sweep.values", "empty value list"));
    }
    Ok(v)
}

pub fn cmd_sweep(opts: &RunOptions, param: &str, values: &str, jobs: usize) -> CliResult<String> {
    let (label, base, lut, sha) = prepare(opts)?;
    let values = sweep_values(values)?;
    // type-check every point before running any
    let mut cfgs = Vec::with_capacity(values.len());
    for v in &values {
        let mut c = base.clone();
        c.set(param, v)?;
        c.validate()?;
        cfgs.push(c);
    }
    let dir = Path::new(&opts.out_dir);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let results: Vec<CliResult<f64>> = pool.install(|| {
        cfgs.par_iter()
            .enumerate()
            .map(|(i, c)| {
                let log = sim_engine::run(c, &lut)?;
                output::write_run(&dir.join(point_dir(i)), c, &log)?;
                Ok(log.summary.throughput_bps)
            })
            .collect()
    });
    let mut points = Vec::new();
    let mut text = String::new();
    for (i, (r, v)) in results.into_iter().zip(&values).enumerate() {
        let thr = r?;
        let _ = writeln!(text, "{param} = {v}: {:.3} Mbit/s", thr / 1e6);
        points.push(PointJson {
            dir: point_dir(i),
            value: Some(v.clone()),
            throughput_bps: thr,
        });
    }
    output::write_manifest(
        dir,
        &Manifest {
            tool: "xlwifi",
            version: env!("CARGO_PKG_VERSION"),
            scenario: label,
            output_dir: opts.out_dir.clone(),
            sweep: Some(SweepAxis {
                path: param.to_string(),
                values,
            }),
            parallelism: jobs.max(1),
            seed_override: opts.seed_env.clone(),
            lut_sha256: sha,
            points,
        },
    )?;
    Ok(text)
}

fn point_dir(i: usize) -> String {
    format!("point_{i:03}")
}

fn write_trace(path: &Path, cfg: &ScenarioConfig, step_us: u64) -> CliResult<()> {
    let rows = sim_engine::channel_trace(cfg, step_us)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_us", "pair", "subcarrier", "re", "im"])?;
    for e in rows {
        w.write_record([
            e.time_us.to_string(),
            format!("0>{}:r{}:t{}", e.station, e.rx, e.tx),
            e.subcarrier.to_string(),
            e.value.re.to_string(),
            e.value.im.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn analytics_appendix_c() -> CliResult<String> {
    let mut rows = Vec::new();
    for g in appendix_c_grid() {
        let t = TimingParams::new(g.spec.standard);
        let d = exchange_duration(&t, &g.spec)?;
        let e = mac_efficiency(&t, &g.spec)?;
        rows.push(vec![
            g.label,
            g.spec.mcs.data_rate_bps.to_string(),
            g.spec.msdu_octets.to_string(),
            g.spec.aggregation.to_string(),
            d.access_us.to_string(),
            d.data_us.to_string(),
            d.ack_us.to_string(),
            d.total_us.to_string(),
            e.throughput_bps.to_string(),
            e.efficiency.to_string(),
        ]);
    }
    csv_string(
        &[
            "exchange",
            "rate_bps",
            "msdu_octets",
            "mpdus",
            "access_us",
            "data_us",
            "ack_us",
            "duration_us",
            "throughput_bps",
            "efficiency",
        ],
        rows,
    )
}

pub fn analytics_ah_capacity(msdu: usize, cycle_s: f64, bandwidths: &[u16]) -> CliResult<String> {
    let t = TimingParams::new(Standard::Ah);
    let mut rows = Vec::new();
    for &bw in bandwidths {
        for r in ah_capacity_table(&t, bw, msdu, cycle_s)? {
            rows.push(vec![
                bw.to_string(),
                r.mcs_index.to_string(),
                r.scheme.name().to_string(),
                r.duration_us.to_string(),
                r.max_stations.to_string(),
            ]);
        }
    }
    csv_string(&["bandwidth_mhz", "mcs_index", "scheme", "duration_us", "max_stations"], rows)
}

pub fn analytics_saturation(preset: &str) -> CliResult<String> {
    if preset != "ch6" {
        return Err(CliError::config("preset", format!("unknown saturation preset {preset:?} (known: ch6)")));
    }
    let t = TimingParams::new(Standard::Ac);
    let rows = ch6_saturation_grid(&t)
        .into_iter()
        .map(|c| {
            vec![
                c.scenario.to_string(),
                match c.scheme {
                    SoundingScheme::Su => "su",
                    SoundingScheme::Mu => "mu",
                }
                .to_string(),
                c.interval_ms.to_string(),
                c.throughput_mbps.to_string(),
            ]
        })
        .collect();
    csv_string(&["scenario", "scheme", "interval_ms", "throughput_mbps"], rows)
}

pub fn dump_mcs() -> CliResult<String> {
    let rows = catalog()
        .into_iter()
        .map(|m| {
            vec![
                m.standard.name().to_string(),
                m.bandwidth_mhz.to_string(),
                m.index.to_string(),
                m.n_ss.to_string(),
                m.gi.name().to_string(),
                m.data_rate_bps.to_string(),
            ]
        })
        .collect();
    csv_string(&["standard", "bandwidth_mhz", "index", "n_ss", "gi", "rate_bps"], rows)
}

/// Leakage and reconstruction norms for one seeded random multi-user channel.
pub fn precode_check(seed: u64, n_tx: usize, users: usize, n_rx: usize) -> CliResult<String> {
    if n_tx == 0 || users == 0 || n_rx == 0 || n_tx > 8 || users * n_rx > n_tx {
        return Err(CliError::config(
            "precode-check",
            "need 1 <= users*rx <= tx <= 8",
        ));
    }
    let mut rng = stream(seed, "precode-check", 0);
    let hs: Vec<CMat> = (0..users)
        .map(|_| CMat::from_fn(n_rx, n_tx, |_, _| cn(&mut rng, 1.0)))
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "seed {seed}, {users} users x {n_rx} rx, {n_tx} tx");
    for (i, h) in hs.iter().enumerate() {
        let s = svd(h)?;
        let rec = s.reconstruct().sub(h).frobenius() / h.frobenius();
        let _ = writeln!(out, "svd user {}: relative reconstruction error {rec:.3e}", i + 1);
    }
    let zf = zf_precoders(&hs, 0)?;
    let _ = writeln!(out, "zf   max leakage {:.3e}", max_leakage(&hs, &zf));
    let streams = vec![n_rx; users];
    let (bd, inter) = bd_precoders(&hs, &streams, 0)?;
    let null_res = inter
        .iter()
        .filter(|b| b.h_tilde.rows > 0)
        .map(|b| b.h_tilde.mul(&b.null_basis).frobenius())
        .fold(0.0, f64::max);
    let _ = writeln!(out, "bd   max leakage {:.3e}, null-space residual {null_res:.3e}", max_leakage(&hs, &bd));
    let mmse = mmse_precoders(&hs, 0.0, 0)?;
    let _ = writeln!(out, "mmse(rho=0) max leakage {:.3e}", max_leakage(&hs, &mmse));
    Ok(out)
}

pub fn export_lut(path: Option<&str>) -> CliResult<String> {
    let text = lut_io::to_csv(&PerLut::generate())?;
    let sha = lut_io::sha256_hex(&text);
    match path {
        Some(p) => {
            std::fs::write(p, &text)?;
            Ok(format!("{sha}  {p}\n"))
        }
        None => Ok(text),
    }
}
