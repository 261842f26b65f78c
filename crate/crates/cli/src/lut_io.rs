//! PER table files: CSV `mcs_id,snr_db,per`, where `mcs_id` is the
//! modulation/code-rate family index.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xlwifi_core::link_abstraction::PerLut;

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    mcs_id: usize,
    snr_db: f64,
    per: f64,
}

pub fn to_csv(lut: &PerLut) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (mcs_id, snr_db, per) in lut.rows() {
        w.serialize(Row { mcs_id, snr_db, per })?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn from_csv(text: &str) -> CliResult<PerLut> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize::<Row>().enumerate() {
        let row = rec.map_err(|e| CliError::config(format!("lut row {}", i + 1), e.to_string()))?;
        rows.push((row.mcs_id, row.snr_db, row.per));
    }
    Ok(PerLut::from_rows(&rows)?)
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// The table to use plus the checksum of its CSV form. A file is verified
/// against `expect_sha` when one is given.
pub fn load(path: Option<&str>, expect_sha: Option<&str>) -> CliResult<(PerLut, String)> {
    let (lut, text) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::config("lut", format!("{p}: {e}")))?;
            (from_csv(&text)?, text)
        }
        None => {
            let lut = PerLut::generate();
            let text = to_csv(&lut)?;
            (lut, text)
        }
    };
    let sha = sha256_hex(&text);
    if let Some(want) = expect_sha {
        if !want.eq_ignore_ascii_case(&sha) {
            return Err(CliError::config("lut", format!("checksum mismatch: file {sha}, expected {want}")));
        }
    }
    Ok((lut, sha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let lut = PerLut::generate();
        let text = to_csv(&lut).unwrap();
        assert!(text.starts_with("mcs_id,snr_db,per\n"));
        let back = from_csv(&text).unwrap();
        assert_eq!(back, lut);
        assert_eq!(to_csv(&back).unwrap(), text);
    }

    #[test]
    fn checksum_mismatch_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lut.csv");
        std::fs::write(&p, to_csv(&PerLut::generate()).unwrap()).unwrap();
        let p = p.to_str().unwrap();
        let (_, sha) = load(Some(p), None).unwrap();
        assert!(load(Some(p), Some(&sha)).is_ok());
        assert_eq!(load(Some(p), Some("00")).unwrap_err().exit_code(), 2);
    }
}
