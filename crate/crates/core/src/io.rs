//! File formats of the observables and the run manifest.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back yields the exact binary values that were written. Every file is
//! written to a temporary sibling first and then renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::simulator::{
    ActivityHistogram, MsdSeries, RunLengthLedger, ScalingParams, SimulationOutput,
};

pub const RUNS_FILE: &str = "runs.csv";
pub const MSD_FILE: &str = "msd.csv";
pub const ACTIVITY_FILE: &str = "activity_hist.csv";
pub const POSITIONS_FILE: &str = "positions.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

pub const RUNS_HEADER: &[&str] = &["run_length_mm"];
pub const MSD_HEADER: &[&str] = &["t_s", "msd_mm2"];
pub const ACTIVITY_HEADER: &[&str] = &["bin_center", "count"];
pub const POSITIONS_HEADER: &[&str] = &["x_mm"];

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn csv_bytes<R: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: R) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(&row).map_err(to_io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

#[inline]
fn float(x: f64) -> String {
    format!("{x:?}")
}

pub fn runs_csv(ledger: &RunLengthLedger) -> Result<Vec<u8>> {
    csv_bytes(RUNS_HEADER, ledger.lengths().map(|l| vec![float(l)]))
}

pub fn msd_csv(msd: &MsdSeries) -> Result<Vec<u8>> {
    csv_bytes(
        MSD_HEADER,
        msd.times
            .iter()
            .zip(&msd.msd)
            .map(|(t, m)| vec![float(*t), float(*m)]),
    )
}

pub fn activity_csv(h: &ActivityHistogram) -> Result<Vec<u8>> {
    csv_bytes(
        ACTIVITY_HEADER,
        h.centers
            .iter()
            .zip(&h.counts)
            .map(|(c, n)| vec![float(*c), n.to_string()]),
    )
}

pub fn positions_csv(positions: &[f64]) -> Result<Vec<u8>> {
    csv_bytes(POSITIONS_HEADER, positions.iter().map(|x| vec![float(*x)]))
}

/// Reads a numeric CSV with exactly the given header.
fn read_columns(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let file = path.display().to_string();
    let schema = |message: String| Error::Schema {
        file: file.clone(),
        message,
    };
    let bytes = std::fs::read(path)?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let found: Vec<String> = r
        .headers()
        .map_err(|e| schema(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if found.iter().map(String::as_str).ne(header.iter().copied()) {
        return Err(schema(format!(
            "expected header {:?}, found {:?}",
            header.join(","),
            found.join(",")
        )));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| schema(e.to_string()))?;
        if record.len() != header.len() {
            return Err(schema(format!(
                "row {} has {} fields",
                line + 2,
                record.len()
            )));
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| schema(format!("row {}: '{field}' is not a number", line + 2)))?;
            if !v.is_finite() {
                return Err(schema(format!("row {}: non-finite value", line + 2)));
            }
            col.push(v);
        }
    }
    Ok(columns)
}

/// Reads `runs.csv`. An empty ledger is reported as empty data.
pub fn read_runs(path: &Path) -> Result<RunLengthLedger> {
    let lengths = read_columns(path, RUNS_HEADER)?.remove(0);
    if lengths.is_empty() {
        return Err(Error::EmptyData(format!(
            "{} holds no run lengths",
            path.display()
        )));
    }
    Ok(RunLengthLedger::from_lengths(lengths))
}

pub fn read_msd(path: &Path) -> Result<MsdSeries> {
    let mut cols = read_columns(path, MSD_HEADER)?;
    let msd = cols.pop().unwrap_or_default();
    let times = cols.pop().unwrap_or_default();
    if times.is_empty() {
        return Err(Error::EmptyData(format!(
            "{} holds no MSD samples",
            path.display()
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Schema {
            file: path.display().to_string(),
            message: "times must be strictly increasing".into(),
        });
    }
    Ok(MsdSeries { times, msd })
}

pub fn read_positions(path: &Path) -> Result<Vec<f64>> {
    let xs = read_columns(path, POSITIONS_HEADER)?.remove(0);
    if xs.is_empty() {
        return Err(Error::EmptyData(format!(
            "{} holds no positions",
            path.display()
        )));
    }
    Ok(xs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub seed: u64,
    pub version: String,
    pub runtime_s: f64,
}

/// Scales and regime of a run, derived from its config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub epsilon: f64,
    pub s: f64,
    pub mu: f64,
    #[serde(rename = "T_a")]
    pub t_adaptation: f64,
    #[serde(rename = "T_t")]
    pub t_observation: f64,
    pub regime: String,
}

impl ScalingReport {
    pub fn new(scaling: &ScalingParams, regime: &str) -> Self {
        Self {
            epsilon: scaling.epsilon,
            s: scaling.s,
            mu: scaling.mu,
            t_adaptation: scaling.t_adaptation,
            t_observation: scaling.t_observation,
            regime: regime.to_string(),
        }
    }
}

/// Config echo plus run metadata. Loading it as a config reproduces the run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: RunConfig,
    pub run: RunInfo,
    pub report: ScalingReport,
}

impl RunManifest {
    pub fn to_toml_string(&self) -> String {
        let mut table = self.config.to_table();
        table.insert("run".into(), to_value(&self.run));
        table.insert("report".into(), to_value(&self.report));
        toml::to_string(&table).expect("manifest always serializes")
    }

    pub fn from_toml_str(text: &str, source: &str) -> Result<Self> {
        let config = RunConfig::from_toml_str(text, source)?;
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            field: source.to_string(),
            message: e.message().to_string(),
        })?;
        let mut take = |name: &str| {
            table.remove(name).ok_or_else(|| Error::Config {
                field: format!("{source}: {name}"),
                message: "section missing from manifest".into(),
            })
        };
        let (run, report) = (take("run")?, take("report")?);
        let de = |e: toml::de::Error| Error::Config {
            field: source.to_string(),
            message: e.message().to_string(),
        };
        Ok(Self {
            config,
            run: RunInfo::deserialize(run).map_err(de)?,
            report: ScalingReport::deserialize(report).map_err(de)?,
        })
    }
}

fn to_value<T: Serialize>(v: &T) -> toml::Value {
    toml::Value::try_from(v).expect("plain struct serializes")
}

/// Paths of everything `write_outputs` produced.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub runs: PathBuf,
    pub msd: PathBuf,
    pub activity: PathBuf,
    pub positions: PathBuf,
    pub manifest: PathBuf,
}

/// Writes the four CSVs and the manifest into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    out: &SimulationOutput,
    manifest: &RunManifest,
) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir)?;
    let files = OutputFiles {
        runs: dir.join(RUNS_FILE),
        msd: dir.join(MSD_FILE),
        activity: dir.join(ACTIVITY_FILE),
        positions: dir.join(POSITIONS_FILE),
        manifest: dir.join(MANIFEST_FILE),
    };
    write_atomic(&files.runs, &runs_csv(&out.ledger)?)?;
    write_atomic(&files.msd, &msd_csv(&out.msd)?)?;
    write_atomic(&files.activity, &activity_csv(&out.activity_histogram)?)?;
    write_atomic(&files.positions, &positions_csv(&out.final_positions)?)?;
    write_atomic(&files.manifest, manifest.to_toml_string().as_bytes())?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(MSD_FILE);
        let series = MsdSeries {
            times: vec![0.0, 0.1, 1.0 / 3.0, 1e-300],
            msd: vec![0.0, 0.1 + 0.2, std::f64::consts::PI, 5e-324],
        };
        let mut sorted = series.clone();
        sorted.times = vec![0.0, 1e-300, 0.1, 1.0 / 3.0];
        write_atomic(&path, &msd_csv(&sorted).unwrap()).unwrap();
        let back = read_msd(&path).unwrap();
        assert_eq!(back, sorted);
    }

    #[test]
    fn runs_header_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RUNS_FILE);
        std::fs::write(&path, "length\n0.1\n").unwrap();
        assert!(matches!(read_runs(&path), Err(Error::Schema { .. })));
        std::fs::write(&path, "run_length_mm\n").unwrap();
        assert!(matches!(read_runs(&path), Err(Error::EmptyData(_))));
        std::fs::write(&path, "run_length_mm\nabc\n").unwrap();
        assert!(matches!(read_runs(&path), Err(Error::Schema { .. })));
        std::fs::write(&path, "run_length_mm\n0.002\n0.004\n").unwrap();
        assert_eq!(read_runs(&path).unwrap().lengths, vec![0.002, 0.004]);
    }

    #[test]
    fn csv_layout() {
        let ledger = RunLengthLedger::from_lengths(vec![0.002, 0.1]);
        assert_eq!(runs_csv(&ledger).unwrap(), b"run_length_mm\n0.002\n0.1\n");
        let h = ActivityHistogram {
            centers: vec![0.25, 0.75],
            counts: vec![3, 4],
        };
        assert_eq!(
            activity_csv(&h).unwrap(),
            b"bin_center,count\n0.25,3\n0.75,4\n"
        );
    }

    #[test]
    fn manifest_round_trip() {
        let m = RunManifest {
            config: RunConfig::default(),
            run: RunInfo {
                seed: 0,
                version: "0.1.0".into(),
                runtime_s: 1.25,
            },
            report: ScalingReport {
                epsilon: 0.02,
                s: 1.35,
                mu: 0.46,
                t_adaptation: 200.0,
                t_observation: 300.0,
                regime: "levy-eligible".into(),
            },
        };
        let text = m.to_toml_string();
        assert_eq!(RunManifest::from_toml_str(&text, "m").unwrap(), m);
        assert_eq!(RunConfig::from_toml_str(&text, "m").unwrap(), m.config);
    }
}
