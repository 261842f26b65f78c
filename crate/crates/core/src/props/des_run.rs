//! Whole-run properties of the event-driven simulator.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::link_abstraction::PerLut;
use crate::mac_protocol::FrameKind;
use crate::sim_engine::{run, run_traced, AirFrame, Direction, ScenarioConfig};

fn scenario(text: &str) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line.split_once('=').unwrap();
        c.set(k.trim(), v.trim()).unwrap();
    }
    c
}

const MU: &str = "
    sim.seed = 11
    sim.duration_s = 0.5
    sim.standard = ac
    ap.antennas = 3
    station.1.x = 5
    station.1.client_index = 1
    station.2.x = -5
    station.2.client_index = 2
    app.1.station = 1
    app.1.rate_bps = 80e6
    app.2.station = 2
    app.2.rate_bps = 80e6
    mac.txop_us = 3008
    mac.max_agg = 18
    mac.mu_max_agg = 18
    mac.mcs_max = 8
    mimo.scheme = mu_cti
    mimo.sounding_ms = 20
    mimo.group.1 = 1,2
";

const CONTENDED: &str = "
    sim.seed = 5
    sim.duration_s = 1
    sim.standard = n
    ap.antennas = 2
    station.1.x = 20
    station.1.antennas = 2
    station.2.x = -30
    station.3.x = 8
    station.3.y = 8
    app.1.station = 1
    app.1.rate_bps = 30e6
    app.2.station = 2
    app.2.direction = up
    app.2.rate_bps = 10e6
    app.3.station = 3
    app.3.direction = up
    app.3.rate_bps = 20e6
    app.3.msdu_octets = 500
    app.4.station = 3
    app.4.rate_bps = 5e6
    mac.max_agg = 16
    mac.queue_limit = 200
";

fn lut() -> PerLut {
    PerLut::generate()
}

#[test]
fn same_seed_gives_identical_log() {
    let lut = lut();
    for text in [MU, CONTENDED] {
        let c = scenario(text);
        let a = run(&c, &lut).unwrap();
        let b = run(&c, &lut).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let mut c2 = c.clone();
        c2.set("sim.seed", "12345").unwrap();
        assert_ne!(run(&c2, &lut).unwrap().to_csv(), a.to_csv());
    }
}

#[test]
fn msdus_are_conserved_at_every_sample() {
    let lut = lut();
    let variants: [(&str, &[(&str, &str)]); 5] = [
        (MU, &[]),
        (MU, &[("mimo.scheme", "su_bf")]),
        (MU, &[("mimo.precoder", "bd"), ("mac.queue_limit", "20")]),
        (CONTENDED, &[]),
        (CONTENDED, &[("mac.queue_limit", "5"), ("mac.rts", "true"), ("sim.link_mode", "lut")]),
    ];
    for (text, edits) in variants {
        let mut c = scenario(text);
        for (k, v) in edits {
            c.set(k, v).unwrap();
        }
        c.set("sim.sample_ms", "1").unwrap();
        let s = run(&c, &lut).unwrap().summary;
        assert_eq!(s.conservation_violations, 0, "{edits:?}");
        assert!(s.counters.balanced(), "{:?}", s.counters);
        assert!(s.counters.delivered > 0);
        let drops: u64 = s.flows.iter().map(|f| f.drops).sum();
        assert!(drops <= s.counters.dropped);
    }
}

#[test]
fn zero_applications_put_only_beacons_on_air() {
    let c = scenario(
        "sim.seed = 1
         sim.duration_s = 1
         station.1.x = 3
         station.2.x = -3",
    );
    let (log, trace) = run_traced(&c, &lut()).unwrap();
    assert!(!trace.frames.is_empty());
    assert!(trace.frames.iter().all(|f| f.kind == FrameKind::Beacon && f.src == 0));
    assert!((10..=11).contains(&trace.frames.len()), "{}", trace.frames.len());
    assert_eq!(log.summary.beacons as usize, trace.frames.len());
    assert_eq!(log.summary.throughput_bps, 0.0);
    assert_eq!(log.summary.delivered_bits, 0);
    assert_eq!(log.summary.counters.generated, 0);
}

#[test]
fn cbr_arrivals_have_the_nominal_spacing() {
    let c = scenario(
        "sim.seed = 4
         sim.duration_s = 1
         station.1.x = 3
         station.2.x = -3
         app.1.station = 1
         app.1.rate_bps = 80e6
         app.1.msdu_octets = 1500
         app.1.start_s = 0.01
         app.2.station = 2
         app.2.rate_bps = 80e6
         app.2.msdu_octets = 1500
         app.2.start_s = 0.01",
    );
    let (_, trace) = run_traced(&c, &lut()).unwrap();
    let per_app = |i: usize| -> Vec<u64> { trace.arrivals.iter().filter(|a| a.0 == i).map(|a| a.1).collect() };
    let (a, b) = (per_app(0), per_app(1));
    let interval = 150.0;
    for times in [&a, &b] {
        let mean = (times[times.len() - 1] - times[0]) as f64 / (times.len() - 1) as f64;
        assert!((mean - interval).abs() < 1.0, "{mean}");
        // arrival k lands inside its own period, jittered by less than one interval
        for (k, &t) in times.iter().enumerate() {
            let lo = 10_000.0 + k as f64 * interval;
            assert!(t as f64 >= lo - 1.0 && (t as f64) < lo + interval, "{k}: {t}");
        }
    }
    assert_eq!(a.len(), b.len());
    assert_ne!(a, b, "separate traffic streams should interleave differently");
    let (_, again) = run_traced(&c, &lut()).unwrap();
    assert_eq!(again.arrivals, trace.arrivals);
}

fn by_source(frames: &[AirFrame]) -> BTreeMap<usize, Vec<AirFrame>> {
    let mut m: BTreeMap<usize, Vec<AirFrame>> = BTreeMap::new();
    for f in frames {
        m.entry(f.src).or_default().push(*f);
    }
    m
}

#[test]
fn radios_are_half_duplex() {
    let lut = lut();
    for text in [MU, CONTENDED] {
        let (_, trace) = run_traced(&scenario(text), &lut).unwrap();
        assert!(trace.frames.len() > 100);
        for (src, mut fs) in by_source(&trace.frames) {
            fs.sort_by_key(|f| f.start_us);
            for w in fs.windows(2) {
                assert!(w[1].start_us >= w[0].end_us, "node {src}: {:?} overlaps {:?}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn exchanges_are_atomic_when_everyone_hears_everyone() {
    let c = scenario(
        "sim.seed = 8
         sim.duration_s = 1
         sim.standard = n
         station.1.x = 4
         station.2.x = -4
         station.3.y = 4
         app.1.station = 1
         app.1.rate_bps = 20e6
         app.2.station = 2
         app.2.direction = up
         app.2.rate_bps = 20e6
         app.3.station = 3
         app.3.direction = up
         app.3.rate_bps = 20e6
         mac.max_agg = 8",
    );
    let (_, trace) = run_traced(&c, &lut()).unwrap();
    let mut span: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for f in &trace.frames {
        let e = span.entry(f.exchange).or_insert((f.start_us, f.end_us));
        e.0 = e.0.min(f.start_us);
        e.1 = e.1.max(f.end_us);
    }
    let spans: Vec<(u64, u64)> = span.into_values().collect();
    assert!(spans.len() > 200);
    let mut checked = 0;
    for (i, a) in spans.iter().enumerate() {
        for b in &spans[i + 1..] {
            if a.0 != b.0 && a.0 < b.1 && b.0 < a.1 {
                // only simultaneous starts (equal backoff expiry) may overlap
                panic!("exchange {a:?} interleaved with {b:?}");
            }
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn sounding_keeps_its_interval() {
    let c = scenario(MU);
    let (_, trace) = run_traced(&c, &lut()).unwrap();
    let ndpa: Vec<u64> = trace.frames.iter().filter(|f| f.kind == FrameKind::Ndpa).map(|f| f.start_us).collect();
    assert!(ndpa.len() >= 20, "{}", ndpa.len());
    let interval = 20_000;
    let grain = 3008 + 2_000;
    for w in ndpa.windows(2) {
        let gap = w[1] - w[0];
        assert!(gap + grain >= interval && gap <= interval + grain, "gap {gap}");
    }
}

#[test]
fn saturated_mac_keeps_a_backlog() {
    let c = scenario(
        "sim.seed = 50
         sim.duration_s = 1
         sim.standard = n
         ap.antennas = 2
         station.1.x = 1
         station.1.antennas = 2
         app.1.station = 1
         app.1.rate_bps = 130e6
         mac.txop_us = 3008
         mac.max_agg = 20
         mac.mcs_max = 7
         mac.n_ss = 2",
    );
    let log = run(&c, &lut()).unwrap();
    let s = &log.summary;
    assert!(s.counters.queued > 0);
    assert!(s.throughput_bps < 130e6);
    let thr = log.windows(1, Direction::Down);
    // once rate adaptation has climbed, every window runs near the MAC ceiling
    let tail = &thr[thr.len() / 2..];
    assert!(tail.iter().all(|&w| w > 100e6), "{thr:?}");
}

#[test]
fn lut_mode_skips_the_fine_channel() {
    let lut = lut();
    let mut c = scenario(MU);
    c.set("ap.antennas", "8").unwrap();
    c.set("sim.bandwidth_mhz", "80").unwrap();
    c.set("channel.rms_delay_ns", "50").unwrap();
    c.set("mimo.sounding_ms", "10").unwrap();
    c.set("sim.link_mode", "lut").unwrap();
    let t0 = Instant::now();
    let (fast, tr_lut) = run_traced(&c, &lut).unwrap();
    let t_lut = t0.elapsed();
    c.set("sim.link_mode", "hybrid").unwrap();
    let t0 = Instant::now();
    let (slow, tr_fine) = run_traced(&c, &lut).unwrap();
    let t_fine = t0.elapsed();
    assert_eq!(tr_lut.fine_evaluations, 0);
    assert!(tr_fine.fine_evaluations > 0);
    assert!(fast.summary.delivered_bits > 0 && slow.summary.delivered_bits > 0);
    assert!(t_lut < t_fine, "lut {t_lut:?} vs fine {t_fine:?}");
}
