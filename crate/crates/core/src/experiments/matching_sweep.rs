use std::path::Path;

use super::plot::{fmt_value, line_chart, ChartSpec, PlotPoint, PlotSeries};
use super::{geometric_mean, median, write_csv};
use crate::cyclic::{min_cycle_dimension, theoretical_dimension};
use crate::error::{Error, Result};
use crate::linalg::{canonical_form, random_orthogonal};

const CANONICAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingConfig {
    pub sizes: Vec<usize>,
    pub samples: usize,
    pub delta: f64,
    pub seed: u64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            sizes: (20..=160).step_by(20).collect(),
            samples: 10,
            delta: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingRow {
    pub n: usize,
    pub sample: usize,
    /// Number of rotation blocks.
    pub k: usize,
    pub n_c: usize,
    pub n1: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingSummary {
    pub n: usize,
    pub samples: usize,
    pub geomean_n_c: f64,
    pub geomean_n1: f64,
    pub median_n_c: f64,
    pub median_n1: f64,
}

/// Seed of the Haar sample `(n, sample)`.
pub fn sample_seed(base: u64, n: usize, sample: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add(n as u64 * 10_007)
        .wrapping_add(sample as u64)
}

pub fn matching_cell(n: usize, sample: usize, cfg: &MatchingConfig) -> Result<MatchingRow> {
    let u = random_orthogonal(n, sample_seed(cfg.seed, n, sample))?;
    let cf = canonical_form(&u, CANONICAL_TOL)?;
    let (n_c, _) = min_cycle_dimension(&cf.angles, cfg.delta)?;
    Ok(MatchingRow {
        n,
        sample,
        k: cf.angles.len(),
        n_c,
        n1: theoretical_dimension(cf.angles.len(), cfg.delta)?,
    })
}

pub fn run_matching_experiment(cfg: &MatchingConfig) -> Result<(Vec<MatchingRow>, Vec<MatchingSummary>)> {
    if cfg.sizes.is_empty() || cfg.samples == 0 || cfg.sizes.contains(&0) {
        return Err(Error::invalid("matching experiment needs positive sizes and samples"));
    }
    let mut sizes = cfg.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for n in sizes {
        let cell: Vec<MatchingRow> = (0..cfg.samples)
            .map(|s| matching_cell(n, s, cfg))
            .collect::<Result<_>>()?;
        let n_c: Vec<f64> = cell.iter().map(|r| r.n_c as f64).collect();
        let n1: Vec<f64> = cell.iter().map(|r| r.n1 as f64).collect();
        summary.push(MatchingSummary {
            n,
            samples: cell.len(),
            geomean_n_c: geometric_mean(&n_c).unwrap_or(f64::NAN),
            geomean_n1: geometric_mean(&n1).unwrap_or(f64::NAN),
            median_n_c: median(&n_c).unwrap_or(f64::NAN),
            median_n1: median(&n1).unwrap_or(f64::NAN),
        });
        rows.extend(cell);
    }
    Ok((rows, summary))
}

pub fn write_matching_rows(rows: &[MatchingRow], path: &Path) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.sample.to_string(),
                r.k.to_string(),
                r.n_c.to_string(),
                r.n1.to_string(),
            ]
        })
        .collect();
    write_csv(path, &["n", "sample", "rotation_blocks", "n_c", "n1"], &body)
}

pub fn write_matching_summary(summary: &[MatchingSummary], path: &Path) -> Result<()> {
    let body: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.n.to_string(),
                s.samples.to_string(),
                fmt_value(s.geomean_n_c),
                fmt_value(s.geomean_n1),
                fmt_value(s.median_n_c),
                fmt_value(s.median_n1),
            ]
        })
        .collect();
    write_csv(
        path,
        &["n", "samples", "geomean_n_c", "geomean_n1", "median_n_c", "median_n1"],
        &body,
    )
}

/// Geometric means of `n_C` and `n1` against `n` on a log axis.
pub fn matching_chart(summary: &[MatchingSummary]) -> Result<Option<String>> {
    if summary.is_empty() {
        return Ok(None);
    }
    let series = |name: &str, f: fn(&MatchingSummary) -> f64| PlotSeries {
        name: name.into(),
        points: summary
            .iter()
            .map(|s| PlotPoint {
                x: s.n as f64,
                y: f(s),
                band: None,
            })
            .collect(),
    };
    line_chart(
        &ChartSpec {
            title: "Cycle dimension vs initial dimension".into(),
            x_label: "initial dimension n".into(),
            y_label: "dimension".into(),
            log_y: true,
        },
        &[
            series("n_C (matching)", |s| s.geomean_n_c),
            series("n1 (bound)", |s| s.geomean_n1),
        ],
    )
    .map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run() {
        let cfg = MatchingConfig {
            sizes: vec![20, 8],
            samples: 3,
            ..MatchingConfig::default()
        };
        let (rows, summary) = run_matching_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].n, 8);
        for r in &rows {
            assert!(r.n_c <= r.n1);
            assert_eq!(r.n1, 2 * 32 * (r.k + 1));
        }
        let svg = matching_chart(&summary).unwrap().unwrap();
        assert!(svg.contains("(log scale)"));
        for s in &summary {
            assert!(svg.contains(&format!("data-y=\"{}\"", fmt_value(s.geomean_n1))));
        }
    }

    #[test]
    fn tighter_delta_never_shrinks_n_c() {
        let cfg = MatchingConfig {
            sizes: vec![12],
            samples: 4,
            ..MatchingConfig::default()
        };
        let half = MatchingConfig { delta: 0.05, ..cfg.clone() };
        let (a, _) = run_matching_experiment(&cfg).unwrap();
        let (b, _) = run_matching_experiment(&half).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(y.n_c >= x.n_c);
        }
    }
}
