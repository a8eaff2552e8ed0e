//! Headerless matrix CSV: one row per line, '.'-decimal.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

fn ingestion(path: &Path, message: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Parses a headerless CSV matrix. Blank lines are ignored; every row must
/// have the same number of fields.
pub fn parse_matrix_csv<R: Read>(reader: R, path: &Path) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| ingestion(path, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(ingestion(
                    path,
                    format!("row {} has {} fields, expected {c}", line + 1, record.len()),
                ))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                ingestion(path, format!("row {}: cannot parse {field:?} as a number", line + 1))
            })?;
            if !v.is_finite() {
                return Err(ingestion(path, format!("row {}: non-finite value", line + 1)));
            }
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| ingestion(path, "empty matrix file"))?;
    Ok(Matrix::from_row_slice(rows, cols, &data))
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(|e| ingestion(path, e.to_string()))?;
    parse_matrix_csv(file, path)
}

/// Values are written with shortest round-trip formatting, so a write/read
/// cycle is lossless.
pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_matrix_to(&mut out, m)?;
    out.flush()?;
    Ok(())
}

pub fn write_matrix_to<W: Write>(out: &mut W, m: &Matrix) -> Result<()> {
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:?}", m[(i, j)]));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
