//! Series and table I/O.
//!
//! Series are single-column comma-separated files with an optional header
//! line, detected by a non-numeric first token. Floats are written with 17
//! significant digits so that every value round-trips exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Preprocessing applied after reading a series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Preprocess {
    /// Natural logarithm; nonpositive values are rejected.
    pub log_transform: bool,
    /// Subtract the sample mean (after the log, if both are set).
    pub center: bool,
}

/// Formats a float with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a single-column series from CSV text.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let Some(field) = rec.get(0) else { continue };
        if field.is_empty() && rec.len() == 1 {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => return Err(Error::Parse(format!("line {}: non-finite value {v}", i + 1))),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::Parse(format!("line {}: cannot parse '{field}' as a number", i + 1))),
        }
    }
    Ok(out)
}

pub fn apply_preprocess(mut xs: Vec<f64>, pre: Preprocess) -> Result<Vec<f64>> {
    if pre.log_transform {
        if let Some(bad) = xs.iter().find(|&&v| v <= 0.0) {
            return invalid(format!("log transform needs positive values, found {bad}"));
        }
        xs.iter_mut().for_each(|v| *v = v.ln());
    }
    if pre.center && !xs.is_empty() {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(xs)
}

pub fn read_series(path: &Path, pre: Preprocess) -> Result<Vec<f64>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    apply_preprocess(parse_series(&text)?, pre)
}

pub fn series_to_string(xs: &[f64], header: Option<&str>) -> String {
    let mut s = String::with_capacity(xs.len() * 24);
    if let Some(h) = header {
        s.push_str(h);
        s.push('\n');
    }
    for x in xs {
        s.push_str(&format_f64(*x));
        s.push('\n');
    }
    s
}

pub fn write_series(path: &Path, xs: &[f64], header: Option<&str>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(series_to_string(xs, header).as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Two-column CSV with a header line.
pub fn pairs_to_string(header: (&str, &str), rows: &[(f64, f64)]) -> String {
    let mut s = format!("{},{}\n", header.0, header.1);
    for (x, y) in rows {
        s.push_str(&format_f64(*x));
        s.push(',');
        s.push_str(&format_f64(*y));
        s.push('\n');
    }
    s
}

pub fn write_pairs(path: &Path, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(pairs_to_string(header, rows).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}
