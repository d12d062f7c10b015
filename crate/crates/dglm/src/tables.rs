//! CSV output for simulation runs, and readers for the same files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back reproduces every value bit for bit.

use std::fs::File;
use std::path::{Path, PathBuf};

use dglm_core::sim::{MetricSeries, RoundRecord};

use crate::error::{Error, Result};

pub const ROUNDS_HEADER: [&str; 6] = [
    "round",
    "chosen_arm",
    "optimal_arm",
    "reward",
    "regret",
    "random_regret",
];
pub const METRICS_HEADER: [&str; 4] = [
    "round",
    "error_fraction",
    "regret_rate",
    "random_regret_rate",
];

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// `<base>.rounds.csv`
pub fn rounds_path(base: &Path) -> PathBuf {
    with_suffix(base, ".rounds.csv")
}

/// `<base>.metrics.csv`
pub fn metrics_path(base: &Path) -> PathBuf {
    with_suffix(base, ".metrics.csv")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(Error::io(path))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.into_inner()
        .map(drop)
        .map_err(|e| Error::io(path)(e.into_error()))
}

pub fn write_rounds(records: &[RoundRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(ROUNDS_HEADER).map_err(Error::csv(path))?;
    for r in records {
        w.write_record([
            r.round.to_string(),
            r.chosen_arm.to_string(),
            r.optimal_arm.to_string(),
            r.reward.to_string(),
            r.regret.to_string(),
            r.random_regret.to_string(),
        ])
        .map_err(Error::csv(path))?;
    }
    finish(w, path)
}

pub fn write_metrics(series: &MetricSeries, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(METRICS_HEADER).map_err(Error::csv(path))?;
    for t in 0..series.len() {
        w.write_record([
            (t + 1).to_string(),
            series.error_fraction[t].to_string(),
            series.regret_rate[t].to_string(),
            series.random_regret_rate[t].to_string(),
        ])
        .map_err(Error::csv(path))?;
    }
    finish(w, path)
}

/// Writes `<base>.rounds.csv` and `<base>.metrics.csv`.
pub fn emit_csv(series: &MetricSeries, records: &[RoundRecord], base: &Path) -> Result<()> {
    write_rounds(records, &rounds_path(base))?;
    write_metrics(series, &metrics_path(base))
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(Error::csv(path))?;
    let found = r.headers().map_err(Error::csv(path))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::parse(
            path.display().to_string(),
            format!("expected header {}, found {}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    r.records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(Error::csv(path))
}

fn field<T: std::str::FromStr>(path: &Path, row: usize, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        Error::parse(
            format!("{} row {row}", path.display()),
            format!("cannot parse {raw:?}"),
        )
    })
}

pub fn read_rounds(path: &Path) -> Result<Vec<RoundRecord>> {
    read_table(path, &ROUNDS_HEADER)?
        .iter()
        .enumerate()
        .map(|(row, rec)| {
            Ok(RoundRecord {
                round: field(path, row + 1, rec, 0)?,
                chosen_arm: field(path, row + 1, rec, 1)?,
                optimal_arm: field(path, row + 1, rec, 2)?,
                reward: field(path, row + 1, rec, 3)?,
                regret: field(path, row + 1, rec, 4)?,
                random_regret: field(path, row + 1, rec, 5)?,
            })
        })
        .collect()
}

pub fn read_metrics(path: &Path) -> Result<MetricSeries> {
    let rows = read_table(path, &METRICS_HEADER)?;
    let mut series = MetricSeries::default();
    for (row, rec) in rows.iter().enumerate() {
        let round: usize = field(path, row + 1, rec, 0)?;
        if round != row + 1 {
            return Err(Error::parse(
                format!("{} row {}", path.display(), row + 1),
                format!("expected round {}, found {round}", row + 1),
            ));
        }
        series.error_fraction.push(field(path, row + 1, rec, 1)?);
        series.regret_rate.push(field(path, row + 1, rec, 2)?);
        series.random_regret_rate.push(field(path, row + 1, rec, 3)?);
    }
    Ok(series)
}

/// Writes a plain CSV with the given header and pre-formatted rows.
pub fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(Error::csv(path))?;
    for row in rows {
        w.write_record(row).map_err(Error::csv(path))?;
    }
    finish(w, path)
}
