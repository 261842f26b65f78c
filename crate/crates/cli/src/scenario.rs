//! Scenario text format.
//!
//! ```text
//! # comment to end of line
//! section.key = value
//! station.1.x = 5          # indexed entries start at 1
//! mimo.group.1 = 1,2       # lists are comma separated
//! ```
//!
//! Blank lines are ignored, later assignments override earlier ones, and
//! every key not mentioned keeps its default.

use std::path::Path;

use xlwifi_core::sim_engine::ScenarioConfig;

use crate::error::{CliError, CliResult};
use crate::presets;

pub const SEED_ENV: &str = "XLWIFI_SEED";

pub fn parse(text: &str) -> CliResult<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!("line {}", n + 1), "expected `section.key = value`"));
        };
        cfg.set(key.trim(), value.trim())?;
    }
    Ok(cfg)
}

/// Canonical text form; `parse(serialize(c)) == c`.
pub fn serialize(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut section = String::new();
    for (k, v) in cfg.entries() {
        let head = k.split('.').next().unwrap_or("").to_string();
        if head != section {
            if !section.is_empty() {
                out.push('\n');
            }
            section = head;
        }
        out.push_str(&k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    }
    out
}

/// A preset name or a path to a scenario file.
pub fn load(spec: &str) -> CliResult<(String, ScenarioConfig)> {
    if let Some(text) = presets::get(spec) {
        return Ok((format!("preset:{spec}"), parse(text)?));
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("scenario", format!("cannot read {spec}: {e}")))?;
    Ok((spec.to_string(), parse(&text)?))
}

/// Apply the seed from the environment, if set.
pub fn seed_override(cfg: &mut ScenarioConfig, env: Option<String>) -> CliResult<()> {
    if let Some(v) = env {
        cfg.set("sim.seed", &v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let c = parse("# head\n\nsim.seed = 7 # trailing\n station.2.x=3\n").unwrap();
        assert_eq!(c.sim.seed, Some(7));
        assert_eq!(c.stations.len(), 2);
        assert_eq!(c.stations[1].x, 3.0);
    }

    #[test]
    fn bad_line_reports_line() {
        match parse("sim.seed = 1\nnonsense\n") {
            Err(CliError::Config { path, .. }) => assert_eq!(path, "line 2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_path() {
        match parse("mac.bogus = 1\n") {
            Err(CliError::Config { path, .. }) => assert_eq!(path, "mac.bogus"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn env_seed_wins() {
        let mut c = parse("sim.seed = 1\n").unwrap();
        seed_override(&mut c, Some("99".into())).unwrap();
        assert_eq!(c.sim.seed, Some(99));
        assert!(seed_override(&mut c, Some("x".into())).is_err());
    }
}
