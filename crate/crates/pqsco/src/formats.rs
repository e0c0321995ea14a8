//! On-disk formats: benchmark records (CSV or JSON), rule tables, scenarios
//! and the host metadata sidecar.
//!
//! Every writer is deterministic, so save → load → save reproduces the
//! same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use pqsco_core::{BenchmarkRecord, Method, MethodPlan, RuleTable};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "method",
    "k",
    "workers",
    "base_cutoff",
    "degree",
    "load_pct",
    "run_index",
    "elapsed_ns",
    "mult_count",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Json,
}

impl RecordFormat {
    /// `.json` means JSON; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => RecordFormat::Json,
            _ => RecordFormat::Csv,
        }
    }
}

/// Flat on-disk layout of a [`BenchmarkRecord`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct RecordRow {
    method: Method,
    k: u32,
    workers: u32,
    base_cutoff: u32,
    degree: usize,
    load_pct: u32,
    run_index: u32,
    elapsed_ns: u64,
    mult_count: u64,
}

impl From<&BenchmarkRecord> for RecordRow {
    fn from(r: &BenchmarkRecord) -> Self {
        RecordRow {
            method: r.plan.method,
            k: r.plan.k,
            workers: r.plan.workers,
            base_cutoff: r.plan.base_cutoff,
            degree: r.degree,
            load_pct: r.load_pct,
            run_index: r.run_index,
            elapsed_ns: r.elapsed_ns,
            mult_count: r.mult_count,
        }
    }
}

impl RecordRow {
    fn into_record(self) -> pqsco_core::Result<BenchmarkRecord> {
        let plan = MethodPlan {
            method: self.method,
            k: self.k,
            workers: self.workers,
            base_cutoff: self.base_cutoff,
        };
        plan.validate()?;
        Ok(BenchmarkRecord {
            plan,
            degree: self.degree,
            load_pct: self.load_pct,
            run_index: self.run_index,
            elapsed_ns: self.elapsed_ns,
            mult_count: self.mult_count,
        })
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn records_to_csv(records: &[BenchmarkRecord]) -> Result<String> {
    let path = Path::new("<memory>");
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    w.write_record(CSV_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.serialize(RecordRow::from(r)).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

fn parse_csv(text: &str, path: &Path) -> Result<Vec<BenchmarkRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidInput(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize::<RecordRow>()
        .map(|row| Ok(row.map_err(csv_err(path))?.into_record()?))
        .collect()
}

pub fn records_to_json(records: &[BenchmarkRecord]) -> String {
    let rows: Vec<RecordRow> = records.iter().map(RecordRow::from).collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("records serialize");
    s.push('\n');
    s
}

/// Parses JSON, reporting the field path of the first error.
pub fn from_json_str<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        reason: e.inner().to_string(),
    })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn export_records(records: &[BenchmarkRecord], format: RecordFormat, path: &Path) -> Result<()> {
    let text = match format {
        RecordFormat::Csv => records_to_csv(records)?,
        RecordFormat::Json => records_to_json(records),
    };
    write(path, &text)
}

pub fn import_records(path: &Path, format: RecordFormat) -> Result<Vec<BenchmarkRecord>> {
    let text = read(path)?;
    match format {
        RecordFormat::Csv => parse_csv(&text, path),
        RecordFormat::Json => {
            let rows: Vec<RecordRow> = from_json_str(&text, path)?;
            Ok(rows
                .into_iter()
                .map(RecordRow::into_record)
                .collect::<pqsco_core::Result<_>>()?)
        }
    }
}

pub fn save_rules(table: &RuleTable, path: &Path) -> Result<()> {
    table.validate()?;
    write(path, &to_json_string(table))
}

/// Reads and validates a rule table.
pub fn load_rules(path: &Path) -> Result<RuleTable> {
    let table: RuleTable = from_json_str(&read(path)?, path)?;
    table.validate()?;
    Ok(table)
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write(path, &to_json_string(value))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json_str(&read(path)?, path)
}

/// Host description written next to benchmark output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostMetadata {
    pub logical_cores: usize,
    pub os: String,
    pub arch: String,
}

impl HostMetadata {
    pub fn current() -> Self {
        Self {
            logical_cores: crate::loadgen::host_logical_cores(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

/// `records.csv` → `records.csv.meta.json`.
pub fn metadata_path(records_path: &Path) -> PathBuf {
    let mut s = records_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}
