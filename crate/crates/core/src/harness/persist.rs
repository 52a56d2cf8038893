//! CSV and JSON persistence for grids and curves.
//!
//! Grid CSV: one row per trial, header
//! `rule,N,p,k,trial,seed,overlap,iterations,converged`, overlaps written
//! with 17 significant digits. Curve CSV: header `k,p_eps`, one row per `k`.
//! JSON documents are the serde form of [`GridResult`] / [`CurveResult`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::RuleKind;

use super::curve::CurveResult;
use super::run::{GridResult, TrialRecord};

pub const GRID_HEADER: [&str; 9] = ["rule", "N", "p", "k", "trial", "seed", "overlap", "iterations", "converged"];
pub const CURVE_HEADER: [&str; 2] = ["k", "p_eps"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` is JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::invalid(format!("unknown format `{s}`; expected csv or json"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Persisted {
    Grid(GridResult),
    Curve(CurveResult),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl ToString) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => io_err(path)(source),
            other => format_err(path, format!("{other:?}")),
        }
    } else {
        format_err(path, e)
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| format_err(path, e))?;
    out.write_all(b"\n").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn persist_grid(grid: &GridResult, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Json => write_json(grid, path),
        Format::Csv => {
            let rule = grid.rule.name();
            let rows = grid.records.iter().map(|r| {
                vec![
                    rule.to_string(),
                    grid.n.to_string(),
                    r.p.to_string(),
                    r.k_flips.to_string(),
                    r.trial_index.to_string(),
                    r.seed.to_string(),
                    format!("{:.16e}", r.overlap),
                    r.iterations.to_string(),
                    r.converged.to_string(),
                ]
            });
            write_rows(path, &GRID_HEADER, rows)
        }
    }
}

pub fn persist_curve(curve: &CurveResult, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Json => write_json(curve, path),
        Format::Csv => {
            let rows = curve.points.iter().map(|(k, p)| vec![k.to_string(), p.to_string()]);
            write_rows(path, &CURVE_HEADER, rows)
        }
    }
}

pub fn persist(result: &Persisted, path: &Path, format: Format) -> Result<()> {
    match result {
        Persisted::Grid(g) => persist_grid(g, path, format),
        Persisted::Curve(c) => persist_curve(c, path, format),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(path))?;
    Ok(text)
}

#[derive(Deserialize)]
struct Probe {
    records: Option<IgnoredAny>,
    points: Option<IgnoredAny>,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes())
}

fn header_of(path: &Path, reader: &mut csv::Reader<&[u8]>) -> Result<Vec<String>> {
    Ok(reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect())
}

fn field<T: FromStr>(path: &Path, record: &csv::StringRecord, idx: usize, line: usize) -> Result<T> {
    let raw = record.get(idx).unwrap_or_default();
    raw.parse()
        .map_err(|_| format_err(path, format!("line {line}: cannot parse `{raw}` in column {}", idx + 1)))
}

fn parse_grid_csv(path: &Path, text: &str) -> Result<GridResult> {
    let mut reader = csv_reader(text);
    let header = header_of(path, &mut reader)?;
    if header != GRID_HEADER {
        return Err(format_err(path, format!("unexpected grid header {header:?}")));
    }
    let mut rule = None;
    let mut n = None;
    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let line = idx + 2;
        let row_rule: RuleKind = field(path, &row, 0, line)?;
        let row_n: usize = field(path, &row, 1, line)?;
        if *rule.get_or_insert(row_rule) != row_rule || *n.get_or_insert(row_n) != row_n {
            return Err(format_err(path, format!("line {line}: mixed rules or network sizes")));
        }
        records.push(TrialRecord {
            p: field(path, &row, 2, line)?,
            k_flips: field(path, &row, 3, line)?,
            trial_index: field(path, &row, 4, line)?,
            seed: field(path, &row, 5, line)?,
            overlap: field(path, &row, 6, line)?,
            iterations: field(path, &row, 7, line)?,
            converged: field(path, &row, 8, line)?,
        });
    }
    match (rule, n) {
        (Some(rule), Some(n)) => GridResult::from_records(rule, n, records).map_err(|e| format_err(path, e)),
        _ => Err(format_err(path, "grid file has no records")),
    }
}

fn parse_curve_csv(path: &Path, text: &str, epsilon: f64) -> Result<CurveResult> {
    let mut reader = csv_reader(text);
    let header = header_of(path, &mut reader)?;
    if header != CURVE_HEADER {
        return Err(format_err(path, format!("unexpected curve header {header:?}")));
    }
    let mut points = BTreeMap::new();
    for (idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        points.insert(field(path, &row, 0, idx + 2)?, field(path, &row, 1, idx + 2)?);
    }
    Ok(CurveResult { epsilon, points })
}

/// Loads a JSON grid or curve, or a grid CSV. Curve CSVs carry no epsilon;
/// read those with [`load_curve_csv`].
pub fn load(path: &Path) -> Result<Persisted> {
    let text = read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let probe: Probe = serde_json::from_str(&text).map_err(|e| format_err(path, e))?;
        return match (probe.records, probe.points) {
            (Some(_), _) => serde_json::from_str(&text).map(Persisted::Grid),
            (None, Some(_)) => serde_json::from_str(&text).map(Persisted::Curve),
            (None, None) => return Err(format_err(path, "neither a grid nor a curve document")),
        }
        .map_err(|e| format_err(path, e));
    }
    if text.starts_with(&CURVE_HEADER.join(",")) {
        return Err(format_err(path, "curve CSV files need an epsilon; use load_curve_csv"));
    }
    parse_grid_csv(path, &text).map(Persisted::Grid)
}

pub fn load_grid(path: &Path) -> Result<GridResult> {
    match load(path)? {
        Persisted::Grid(g) => Ok(g),
        Persisted::Curve(_) => Err(format_err(path, "expected a grid, found a curve")),
    }
}

pub fn load_curve_csv(path: &Path, epsilon: f64) -> Result<CurveResult> {
    parse_curve_csv(path, &read_to_string(path)?, epsilon)
}
