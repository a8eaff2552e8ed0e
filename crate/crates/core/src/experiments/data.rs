use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::reservoir::InputStream;

const DAYS_PER_MONTH: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dataset {
    /// ETTm2, 15-minute sampling, 12/4/4 months.
    Ett,
    /// Electricity load, hourly, 15/3/4 months.
    Ecl,
}

impl Dataset {
    pub fn default_column(self) -> &'static str {
        match self {
            Dataset::Ett => "OT",
            Dataset::Ecl => "MT_320",
        }
    }

    pub fn samples_per_day(self) -> usize {
        match self {
            Dataset::Ett => 96,
            Dataset::Ecl => 24,
        }
    }

    pub fn splits(self) -> Splits {
        let months = match self {
            Dataset::Ett => [12, 4, 4],
            Dataset::Ecl => [15, 3, 4],
        };
        let per_month = DAYS_PER_MONTH * self.samples_per_day();
        Splits {
            train: months[0] * per_month,
            val: months[1] * per_month,
            test: months[2] * per_month,
        }
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ett" | "ettm2" => Ok(Dataset::Ett),
            "ecl" => Ok(Dataset::Ecl),
            _ => Err(Error::invalid(format!("unknown dataset `{s}` (expected ett or ecl)"))),
        }
    }
}

/// Consecutive train / validation / test lengths starting at sample 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Splits {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Splits {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    /// 60/20/20 split of `len` samples.
    pub fn proportional(len: usize) -> Self {
        let train = len * 3 / 5;
        let val = len / 5;
        Splits {
            train,
            val,
            test: len - train - val,
        }
    }
}

/// A univariate series standardized on its training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub values: Vec<f64>,
    pub splits: Splits,
    pub mean: f64,
    pub std: f64,
    /// Largest standardized magnitude, used as the input bound.
    pub bound: f64,
}

impl Series {
    pub fn standardize(raw: Vec<f64>, splits: Splits) -> Result<Self> {
        if splits.train < 2 || raw.len() < splits.total() {
            return Err(Error::invalid(format!(
                "series of length {} is too short for splits {}/{}/{}",
                raw.len(),
                splits.train,
                splits.val,
                splits.test
            )));
        }
        let mut values = raw;
        values.truncate(splits.total());
        let train = &values[..splits.train];
        let mean = train.iter().sum::<f64>() / train.len() as f64;
        let var = train.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / train.len() as f64;
        let std = var.sqrt();
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::invalid(
                "training split has zero variance; cannot standardize",
            ));
        }
        for v in &mut values {
            *v = (*v - mean) / std;
        }
        let bound = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(Self {
            values,
            splits,
            mean,
            std,
            bound,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn stream(&self) -> Result<InputStream> {
        InputStream::from_scalars(&self.values)
    }

    pub fn train(&self) -> &[f64] {
        &self.values[..self.splits.train]
    }
}

fn ingestion(path: &Path, message: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Loads one column of a dataset CSV. The delimiter is `;` when the header
/// has more semicolons than commas, and then `,` is read as decimal comma.
pub fn load_series(path: &Path, dataset: Dataset, column: Option<&str>) -> Result<Series> {
    let file = File::open(path).map_err(|e| ingestion(path, e.to_string()))?;
    let raw = read_column(BufReader::new(file), path, column.unwrap_or(dataset.default_column()))?;
    Series::standardize(raw, dataset.splits()).map_err(|e| ingestion(path, e.to_string()))
}

pub fn read_column<R: Read>(reader: R, path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut reader = BufReader::new(reader);
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| ingestion(path, e.to_string()))?;
    let semicolon = header.matches(';').count() > header.matches(',').count();
    let delimiter = if semicolon { b';' } else { b',' };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(header.as_bytes().chain(reader));
    let headers = rdr.headers().map_err(|e| ingestion(path, e.to_string()))?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| ingestion(path, format!("column `{column}` not found in header")))?;

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| ingestion(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = record
            .get(idx)
            .ok_or_else(|| ingestion(path, format!("line {line}: missing column `{column}`")))?;
        let text = if semicolon { cell.replace(',', ".") } else { cell.to_string() };
        let v: f64 = text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| ingestion(path, format!("line {line}: `{cell}` is not a number")))?;
        out.push(v);
    }
    Ok(out)
}

/// Deterministic bounded test series: daily and weekly tones plus AR(1)
/// noise, split 60/20/20.
pub fn synthetic_series(len: usize, seed: u64) -> Result<Series> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = 0.0;
    let raw: Vec<f64> = (0..len)
        .map(|t| {
            noise = 0.9 * noise + 0.2 * (2.0 * rng.random::<f64>() - 1.0);
            let t = t as f64;
            (std::f64::consts::TAU * t / 96.0).sin()
                + 0.5 * (std::f64::consts::TAU * t / 672.0).cos()
                + noise
        })
        .collect();
    Series::standardize(raw, Splits::proportional(len))
}
