//! Sample ingestion from CSV and JSON text.
//!
//! CSV: one point per record, one column per dimension, optional header row.
//! JSON: an array of arrays of numbers, or a flat array of numbers for scalar
//! data.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Parses CSV text. The first record is taken as a header when any of its
/// fields is not a number; every later record must be fully numeric.
pub fn parse_csv(text: &str) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut dim = None;
    let mut values = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    message: format!("non-numeric field: {e}"),
                })
            }
        };
        first = false;
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {v}"),
            });
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {d} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        values.extend(row);
    }
    let dim = dim.ok_or(Error::EmptySample)?;
    Sample::from_flat(dim, values)
}

/// Parses JSON text holding `[[x, ...], ...]` or `[x, ...]`.
pub fn parse_json(text: &str) -> Result<Sample> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let items = value
        .as_array()
        .ok_or_else(|| Error::InvalidInput("expected a JSON array of points".into()))?;
    if items.is_empty() {
        return Err(Error::EmptySample);
    }
    let number = |v: &Value, index: usize| {
        v.as_f64()
            .ok_or_else(|| Error::InvalidInput(format!("point {index}: expected a number, found {v}")))
    };
    if items.iter().all(Value::is_number) {
        let points = items
            .iter()
            .enumerate()
            .map(|(i, v)| number(v, i))
            .collect::<Result<Vec<_>>>()?;
        return Sample::scalar(points);
    }
    let rows = items
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.as_array()
                .ok_or_else(|| Error::InvalidInput(format!("point {i}: expected an array")))?
                .iter()
                .map(|v| number(v, i))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Sample::from_rows(rows)
}

/// Reads a sample file, choosing JSON for a `.json` extension and CSV
/// otherwise.
pub fn read_sample(path: &Path) -> Result<Sample> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        parse_json(&text)
    } else {
        parse_csv(&text)
    }
}
