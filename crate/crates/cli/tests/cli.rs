use std::path::Path;
use std::process::{Command, Output};

use xlwifi::{presets, scenario};

const SMALL: &str = "
sim.seed = 4
sim.duration_s = 0.3
sim.standard = n
station.1.x = 8
app.1.station = 1
app.1.rate_bps = 20e6
";

fn xlwifi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlwifi"))
        .args(args)
        .env_remove(scenario::SEED_ENV)
        .output()
        .unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let p = dir.join("s.scn");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn presets_round_trip_through_text() {
    for name in presets::names() {
        let c = scenario::parse(presets::get(name).unwrap()).unwrap();
        let text = scenario::serialize(&c);
        assert_eq!(scenario::parse(&text).unwrap(), c, "{name}");
        assert_eq!(scenario::serialize(&scenario::parse(&text).unwrap()), text);
        c.validate().unwrap();
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), "station.1.x = 5\napp.1.station = 1\n");
    let out = tmp.path().join("out");
    let o = xlwifi(&["run", &s, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sim.seed"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), "sim.seed = 1\nsim.bogus = 3\n");
    let o = xlwifi(&["run", &s, "-o", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let dirs = ["a", "b"].map(|d| tmp.path().join(d));
    for d in &dirs {
        let o = xlwifi(&["run", &s, "-o", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["metrics.csv", "summary.json", "config.scn"] {
        assert_eq!(read(dirs[0].join(f)), read(dirs[1].join(f)), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&read(dirs[0].join("summary.json"))).unwrap();
    assert_eq!(summary["counters"]["balanced"], true);
    assert!(read(dirs[0].join("metrics.csv")).starts_with("time_s,station,direction,metric,value\n"));
    let echoed = scenario::parse(&read(dirs[0].join("config.scn"))).unwrap();
    assert_eq!(echoed, scenario::parse(SMALL).unwrap());
}

#[test]
fn seed_from_environment_overrides_file() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let out = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_xlwifi"))
        .args(["run", &s, "-o", out.to_str().unwrap()])
        .env(scenario::SEED_ENV, "99")
        .output()
        .unwrap();
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&read(out.join("summary.json"))).unwrap();
    assert_eq!(summary["seed"], 99);
    let manifest: serde_json::Value = serde_json::from_str(&read(out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed_override"], "99");
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let out = tmp.path().join("sweep");
    let o = xlwifi(&[
        "sweep",
        &s,
        "-o",
        out.to_str().unwrap(),
        "--param",
        "station.1.x",
        "--values",
        "5:15:5",
        "-j",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&read(out.join("manifest.json"))).unwrap();
    let points = manifest["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    for (p, v) in points.iter().zip(["5", "10", "15"]) {
        assert_eq!(p["value"], v);
        let dir = out.join(p["dir"].as_str().unwrap());
        assert!(dir.join("metrics.csv").is_file());
        let c = scenario::parse(&read(dir.join("config.scn"))).unwrap();
        assert_eq!(c.stations[0].x, v.parse::<f64>().unwrap());
    }
}

#[test]
fn sweep_rejects_bad_values_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write_scenario(tmp.path(), SMALL);
    let out = tmp.path().join("bad");
    let o = xlwifi(&["sweep", &s, "-o", out.to_str().unwrap(), "--param", "station.1.x", "--values", "1,abc"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("point_000").exists());
}

#[test]
fn analytics_tables() {
    let o = xlwifi(&["analytics", "appendix-c"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.contains("189.5"));

    let o = xlwifi(&["analytics", "ah-capacity"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bandwidth_mhz,mcs_index,scheme,duration_us,max_stations"));
    assert!(lines.count() > 0);

    let o = xlwifi(&["analytics", "saturation"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 25);
}

#[test]
fn dump_mcs_and_lut_export() {
    let tmp = tempfile::tempdir().unwrap();
    let mcs = tmp.path().join("mcs.csv");
    assert!(xlwifi(&["dump-mcs", "-o", mcs.to_str().unwrap()]).status.success());
    let mut rdr = csv::Reader::from_path(&mcs).unwrap();
    assert!(rdr.records().count() > 100);

    let lut = tmp.path().join("lut.csv");
    let o = xlwifi(&["export-lut", "-o", lut.to_str().unwrap()]);
    assert!(o.status.success());
    let sha = String::from_utf8(o.stdout).unwrap().split_whitespace().next().unwrap().to_string();
    let s = write_scenario(tmp.path(), SMALL);
    let run = |expect: &str| {
        xlwifi(&[
            "run",
            &s,
            "-o",
            tmp.path().join("r").to_str().unwrap(),
            "--lut",
            lut.to_str().unwrap(),
            "--lut-sha256",
            expect,
        ])
    };
    assert!(run(&sha).status.success());
    assert!(!run(&"0".repeat(64)).status.success());
}
