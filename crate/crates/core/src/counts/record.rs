use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::setting::MeasurementSetting;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 5] = [
    "setting",
    "duration_s",
    "raw_counts",
    "accidental_estimate",
    "seed",
];

/// Coincidences observed in one setting window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: MeasurementSetting,
    pub duration_s: f64,
    pub raw_counts: u64,
    pub accidental_estimate: f64,
    pub seed: u64,
}

impl CountRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::OutOfRange {
                name: "duration_s",
                value: self.duration_s,
                range: "(0, inf)",
            });
        }
        if !(self.accidental_estimate >= 0.0 && self.accidental_estimate.is_finite()) {
            return Err(Error::OutOfRange {
                name: "accidental_estimate",
                value: self.accidental_estimate,
                range: "[0, inf)",
            });
        }
        Ok(())
    }
}

/// Count data as seen by the reconstructions: integer draws in sampled mode,
/// expectation values in exact mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub setting: MeasurementSetting,
    pub counts: f64,
    pub accidental_estimate: f64,
}

impl Observation {
    pub fn new(setting: MeasurementSetting, counts: f64, accidental_estimate: f64) -> Self {
        Self {
            setting,
            counts,
            accidental_estimate,
        }
    }

    /// Counts with the accidental estimate removed, floored at zero.
    pub fn subtracted(&self) -> f64 {
        (self.counts - self.accidental_estimate).max(0.0)
    }
}

impl From<&CountRecord> for Observation {
    fn from(r: &CountRecord) -> Self {
        Self {
            setting: r.setting.clone(),
            counts: r.raw_counts as f64,
            accidental_estimate: r.accidental_estimate,
        }
    }
}

pub fn observations(records: &[CountRecord]) -> Vec<Observation> {
    records.iter().map(Observation::from).collect()
}

/// Renders records as CSV text.
pub fn to_csv(records: &[CountRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in records {
        r.validate()?;
        w.write_record([
            r.setting.label(),
            r.duration_s.to_string(),
            r.raw_counts.to_string(),
            r.accidental_estimate.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Writes the CSV next to `path` and renames it into place.
pub fn persist(records: &[CountRecord], path: &Path) -> Result<()> {
    let bytes = to_csv(records)?;
    write_atomic(path, &bytes)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_path(path);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

/// Parses CSV text; any malformed row fails the whole load.
pub fn from_csv(text: &[u8]) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text);
    let header = rdr.headers().map_err(csv_error)?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let fail = |message: String| Error::Parse { line, message };
        if row.len() != CSV_HEADER.len() {
            return Err(fail(format!("expected {} fields, got {}", CSV_HEADER.len(), row.len())));
        }
        let setting: MeasurementSetting = row[0].parse().map_err(|e: Error| fail(e.to_string()))?;
        let duration_s: f64 = row[1]
            .parse()
            .map_err(|_| fail(format!("bad duration `{}`", &row[1])))?;
        let raw_counts: u64 = row[2]
            .parse()
            .map_err(|_| fail(format!("raw_counts `{}` is not a nonnegative integer", &row[2])))?;
        let accidental_estimate: f64 = row[3]
            .parse()
            .map_err(|_| fail(format!("bad accidental_estimate `{}`", &row[3])))?;
        let seed: u64 = row[4]
            .parse()
            .map_err(|_| fail(format!("bad seed `{}`", &row[4])))?;
        let record = CountRecord {
            setting,
            duration_s,
            raw_counts,
            accidental_estimate,
            seed,
        };
        record.validate().map_err(|e| fail(e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<CountRecord>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_csv(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::setting::tomographic_settings;

    fn records(n: usize) -> Vec<CountRecord> {
        let settings = tomographic_settings();
        (0..n)
            .map(|i| CountRecord {
                setting: settings[i % 16].clone(),
                duration_s: 10.0,
                raw_counts: (i * 37 % 1000) as u64,
                accidental_estimate: 0.1 * i as f64 + 1.0 / 3.0,
                seed: i as u64 * 0x9E37_79B9,
            })
            .collect()
    }

    #[test]
    fn round_trip_256_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.csv");
        let recs = records(256);
        persist(&recs, &path).unwrap();
        assert_eq!(load(&path).unwrap(), recs);
        // no temp files left behind
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn header_and_quoting() {
        let text = String::from_utf8(to_csv(&records(1)).unwrap()).unwrap();
        assert!(text.starts_with("setting,duration_s,raw_counts,accidental_estimate,seed\n"));
        assert!(text.contains("\"q1:0, q4:0\",10,0,"));
    }

    #[test]
    fn negative_counts_fail_at_their_line() {
        let text = "setting,duration_s,raw_counts,accidental_estimate,seed\n\
                    \"q1:0, q4:0\",10,5,0,1\n\
                    \"q1:0, q4:1\",10,-3,0,2\n";
        match from_csv(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("-3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_malformed_rows() {
        let head = "setting,duration_s,raw_counts,accidental_estimate,seed\n";
        for row in [
            "\"q1:0, q4:0\",0,5,0,1",
            "\"q1:0, q4:0\",10,5,-1,1",
            "\"q1:z\",10,5,0,1",
            "\"q1:0\",10,5,0",
        ] {
            let text = format!("{head}{row}\n");
            assert!(from_csv(text.as_bytes()).is_err(), "{row}");
        }
        assert!(from_csv(b"a,b,c,d,e\n").is_err());
    }
}
