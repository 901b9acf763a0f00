// SPDX-License-Identifier: Apache-2.0

//! Plain-text dataset files: one unsigned integer per line, or `a,b` pairs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn parse_id(path: &Path, line: usize, token: &str) -> Result<u64> {
    token
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("not an unsigned integer: {:?}", token.trim())))
}

/// Reads newline-delimited values. Blank lines are skipped.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<u64>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        values.push(parse_id(path, i + 1, &line)?);
    }
    Ok(values)
}

/// Reads two-column CSV tuples without a header.
pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<(u64, u64)>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(parse_error(path, line, format!("expected 2 columns, found {}", record.len())));
        }
        pairs.push((parse_id(path, line, &record[0])?, parse_id(path, line, &record[1])?));
    }
    Ok(pairs)
}

pub fn write_dataset(path: impl AsRef<Path>, values: &[u64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_pairs(path: impl AsRef<Path>, pairs: &[(u64, u64)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (a, b) in pairs {
        writeln!(out, "{a},{b}")?;
    }
    out.flush()?;
    Ok(())
}
