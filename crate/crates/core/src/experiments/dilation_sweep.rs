use std::path::Path;

use super::data::Series;
use super::plot::{fmt_value, line_chart, ChartSpec, PlotPoint, PlotSeries};
use super::reference::{make_reference_system, ReferenceConfig};
use super::{mean_ci95, write_csv};
use crate::cyclic::cyclic_approximate;
use crate::dilation::dilate_with_order;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::reservoir::{InputStream, LinearReservoir};

pub const PAPER_ORDERS: [usize; 10] = [2, 6, 10, 15, 19, 24, 28, 33, 37, 42];

#[derive(Debug, Clone, PartialEq)]
pub struct DilationConfig {
    pub reference: ReferenceConfig,
    pub orders: Vec<usize>,
    pub seeds: Vec<u64>,
    /// The cycle stage gets tolerance `kappa` times the dilation bound.
    pub kappa: f64,
    /// Defaults to the reference system's washout.
    pub washout: Option<usize>,
}

impl Default for DilationConfig {
    fn default() -> Self {
        Self {
            reference: ReferenceConfig::default(),
            orders: PAPER_ORDERS.to_vec(),
            seeds: (0..15).collect(),
            kappa: 0.1,
            washout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationRow {
    pub seed: u64,
    pub order: usize,
    pub n_u: usize,
    pub n_c: usize,
    pub n1: usize,
    /// Mean over time and coordinates of the squared state difference.
    pub mse: f64,
    pub max_gap: f64,
    /// Analytic sup-norm bound on the state difference.
    pub state_bound: f64,
    pub error: Option<String>,
}

impl DilationRow {
    fn failed(seed: u64, order: usize, msg: String) -> Self {
        Self {
            seed,
            order,
            n_u: 0,
            n_c: 0,
            n1: 0,
            mse: f64::NAN,
            max_gap: f64::NAN,
            state_bound: f64::NAN,
            error: Some(msg),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationSummary {
    pub order: usize,
    pub count: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_n_c: f64,
}

/// Simulation input for the held-out window (validation and test splits),
/// preceded by `washout` samples from the end of the training split.
pub fn evaluation_stream(series: &Series, washout: usize) -> Result<InputStream> {
    let start = series.splits.train;
    if washout > start {
        return Err(Error::invalid(format!(
            "washout {washout} is longer than the training split ({start} samples)"
        )));
    }
    let samples = series.values[start - washout..]
        .iter()
        .map(|&v| Vector::from_element(1, v))
        .collect();
    InputStream::new(samples, series.bound)
}

/// One (order, seed) cell: dilate `r`, approximate by a cycle, drive both
/// over the held-out window and compare `x_t` with the mapped cycle states.
pub fn run_dilation_cell(
    cfg: &DilationConfig,
    r: &LinearReservoir,
    series: &Series,
    seed: u64,
    order: usize,
) -> Result<DilationRow> {
    let n = r.state_dim();
    let (r_u, plan) = dilate_with_order(r, order)?;
    let cyc = cyclic_approximate(&r_u, cfg.kappa * plan.delta_state)?;
    let g = cyc.transform().state_map(n)?;
    let rows: Vec<Vec<f64>> = (0..n).map(|i| g.row(i).iter().copied().collect()).collect();
    let washout = match cfg.washout {
        Some(w) => w,
        None => r.default_washout()?,
    };
    let stream = &evaluation_stream(series, washout)?;
    let xs = r.drive(stream, washout)?;
    let rc = cyc.reservoir()?;
    let (mut sum, mut sup, mut idx) = (0.0, 0.0f64, 0usize);
    rc.for_each_state(stream, washout, |_, xc| {
        let x = &xs[idx];
        idx += 1;
        let mut sq = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let mapped: f64 = row.iter().zip(xc).map(|(a, b)| a * b).sum();
            sq += (x[i] - mapped).powi(2);
        }
        sum += sq;
        sup = sup.max(sq.sqrt());
    })?;
    Ok(DilationRow {
        seed,
        order,
        n_u: plan.n_dilated,
        n_c: cyc.n_c(),
        n1: cyc.theoretical_bound(),
        mse: sum / (idx * n) as f64,
        max_gap: sup,
        state_bound: plan.delta_state + cyc.analytic_state_bound(),
        error: None,
    })
}

/// Rows sorted by (order, seed) and per-order summaries. Cell failures are
/// recorded in the rows; the run continues.
pub fn run_dilation_experiment(
    cfg: &DilationConfig,
    series: &Series,
) -> Result<(Vec<DilationRow>, Vec<DilationSummary>)> {
    let mut rows = Vec::with_capacity(cfg.orders.len() * cfg.seeds.len());
    for &seed in &cfg.seeds {
        match make_reference_system(&cfg.reference, seed, series) {
            Ok(r) => {
                for &order in &cfg.orders {
                    rows.push(
                        run_dilation_cell(cfg, &r, series, seed, order)
                            .unwrap_or_else(|e| DilationRow::failed(seed, order, e.to_string())),
                    );
                }
            }
            Err(e) => {
                for &order in &cfg.orders {
                    rows.push(DilationRow::failed(seed, order, e.to_string()));
                }
            }
        }
    }
    rows.sort_by_key(|r| (r.order, r.seed));
    Ok((rows.clone(), summarize(&cfg.orders, &rows)))
}

fn summarize(orders: &[usize], rows: &[DilationRow]) -> Vec<DilationSummary> {
    let mut orders = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();
    orders
        .into_iter()
        .filter_map(|order| {
            let ok: Vec<&DilationRow> = rows.iter().filter(|r| r.order == order && r.ok()).collect();
            let mses: Vec<f64> = ok.iter().map(|r| r.mse).collect();
            let (mean, ci_low, ci_high) = mean_ci95(&mses)?;
            Some(DilationSummary {
                order,
                count: ok.len(),
                mean,
                ci_low,
                ci_high,
                mean_n_c: ok.iter().map(|r| r.n_c as f64).sum::<f64>() / ok.len() as f64,
            })
        })
        .collect()
}

pub fn write_dilation_rows(rows: &[DilationRow], path: &Path) -> Result<()> {
    let opt = |ok: bool, v: String| if ok { v } else { String::new() };
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                r.order.to_string(),
                opt(r.ok(), r.n_u.to_string()),
                opt(r.ok(), r.n_c.to_string()),
                opt(r.ok(), r.n1.to_string()),
                opt(r.ok(), fmt_value(r.mse)),
                opt(r.ok(), fmt_value(r.max_gap)),
                opt(r.ok(), fmt_value(r.state_bound)),
                match &r.error {
                    None => "ok".into(),
                    Some(e) => format!("failed: {e}"),
                },
            ]
        })
        .collect();
    write_csv(
        path,
        &["seed", "order", "n_u", "n_c", "n1", "state_mse", "max_state_gap", "state_bound", "status"],
        &body,
    )
}

pub fn write_dilation_summary(summary: &[DilationSummary], path: &Path) -> Result<()> {
    let body: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.order.to_string(),
                s.count.to_string(),
                fmt_value(s.mean),
                fmt_value(s.ci_low),
                fmt_value(s.ci_high),
                fmt_value(s.mean_n_c),
            ]
        })
        .collect();
    write_csv(
        path,
        &["order", "count", "mean_state_mse", "ci95_low", "ci95_high", "mean_n_c"],
        &body,
    )
}

/// Mean MSE with 95% intervals against the dilation order. Log scale when
/// every interval is positive. Returns `None` for an empty summary.
pub fn dilation_chart(summary: &[DilationSummary]) -> Result<Option<String>> {
    if summary.is_empty() {
        return Ok(None);
    }
    let log_y = summary.iter().all(|s| s.ci_low > 0.0);
    let points = summary
        .iter()
        .map(|s| PlotPoint {
            x: s.order as f64,
            y: s.mean,
            band: Some((s.ci_low, s.ci_high)),
        })
        .collect();
    line_chart(
        &ChartSpec {
            title: "State MSE vs dilation order".into(),
            x_label: "dilation order N".into(),
            y_label: "mean state MSE".into(),
            log_y,
        },
        &[PlotSeries {
            name: "mean ± 95% CI".into(),
            points,
        }],
    )
    .map(Some)
}
