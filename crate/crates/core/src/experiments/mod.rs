//! The two numerical experiments: state error of the dilation-plus-cycle
//! construction across dilation orders, and minimal cycle dimensions of
//! random orthogonal matrices against the guaranteed bound.

pub mod data;
pub mod dilation_sweep;
pub mod matching_sweep;
pub mod plot;
pub mod reference;

use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub use data::{load_series, synthetic_series, Dataset, Series, Splits};
pub use dilation_sweep::{
    evaluation_stream, run_dilation_cell, run_dilation_experiment, DilationConfig, DilationRow, DilationSummary,
    PAPER_ORDERS,
};
pub use matching_sweep::{run_matching_experiment, MatchingConfig, MatchingRow, MatchingSummary};
pub use reference::{make_reference_system, reference_untrained, ReferenceConfig};

/// Mean and two-sided 95% Student-t interval. A single sample gives a
/// zero-width interval.
pub fn mean_ci95(values: &[f64]) -> Option<(f64, f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, mean, mean));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * (var / n as f64).sqrt();
    Some((mean, mean - half, mean + half))
}

pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    Some((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// Lower median.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => None,
        n if n % 2 == 1 => Some(v[n / 2]),
        n => Some(0.5 * (v[n / 2 - 1] + v[n / 2])),
    }
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Io(e.into()))?;
    w.write_record(header).map_err(|e| Error::Io(e.into()))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}
