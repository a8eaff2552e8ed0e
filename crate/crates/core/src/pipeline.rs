//! Dilation, cycle approximation and binarization chained under one output
//! tolerance.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binarize::{scr_construct_capped, SCRSystem, DEFAULT_MAX_SCR_DIM};
use crate::cyclic::{cyclic_approximate_capped, DEFAULT_MAX_CYCLE_DIM};
use crate::dilation::{choose_order, dilate_with_order};
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, Vector};
use crate::reservoir::{output_distances, InputStream, LinearReservoir};

/// Synthetic validation streams: i.i.d. coordinates uniform in
/// `[-M/√m, M/√m]`, so every sample respects the input bound `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub streams: usize,
    pub length: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            streams: 20,
            length: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Shares of ε given to dilation, cycle approximation and binarization.
    pub budget: [f64; 3],
    /// Largest dilated dimension `(N + 1) n` attempted.
    pub max_dilated_dim: usize,
    pub max_cycle_dim: usize,
    pub max_scr_dim: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            budget: [0.5, 0.25, 0.25],
            max_dilated_dim: 2048,
            max_cycle_dim: DEFAULT_MAX_CYCLE_DIM,
            max_scr_dim: DEFAULT_MAX_SCR_DIM,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimings {
    pub dilation: f64,
    pub cyclic: f64,
    pub binarize: f64,
    pub validation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationReport {
    pub epsilon_requested: f64,
    pub lambda: f64,
    pub input_bound: f64,
    pub lipschitz: f64,
    /// State tolerances handed to the three stages.
    pub delta_dil: f64,
    pub delta_cyc: f64,
    pub delta_bin: f64,
    /// State gaps guaranteed by what each stage actually built.
    pub bound_dil: f64,
    pub bound_cyc: f64,
    pub bound_bin: f64,
    pub output_bound: f64,
    pub n: usize,
    pub order: usize,
    pub n_u: usize,
    pub n_c: usize,
    pub n1: usize,
    pub k: usize,
    pub n_avg: usize,
    pub n_scr: usize,
    pub binarize_entry_error: f64,
    pub binarize_operator_error: f64,
    pub validation_streams: usize,
    pub washout: usize,
    pub empirical_output_gap: f64,
    pub timings: StageTimings,
}

fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

impl ApproximationReport {
    /// Deterministic fields, in output order.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("epsilon_requested", fmt_f(self.epsilon_requested)),
            ("lambda", fmt_f(self.lambda)),
            ("input_bound", fmt_f(self.input_bound)),
            ("lipschitz", fmt_f(self.lipschitz)),
            ("delta_dil", fmt_f(self.delta_dil)),
            ("delta_cyc", fmt_f(self.delta_cyc)),
            ("delta_bin", fmt_f(self.delta_bin)),
            ("bound_dil", fmt_f(self.bound_dil)),
            ("bound_cyc", fmt_f(self.bound_cyc)),
            ("bound_bin", fmt_f(self.bound_bin)),
            ("output_bound", fmt_f(self.output_bound)),
            ("n", self.n.to_string()),
            ("order", self.order.to_string()),
            ("n_u", self.n_u.to_string()),
            ("n_c", self.n_c.to_string()),
            ("n1", self.n1.to_string()),
            ("k", self.k.to_string()),
            ("n_avg", self.n_avg.to_string()),
            ("n_scr", self.n_scr.to_string()),
            ("binarize_entry_error", fmt_f(self.binarize_entry_error)),
            ("binarize_operator_error", fmt_f(self.binarize_operator_error)),
            ("validation_streams", self.validation_streams.to_string()),
            ("washout", self.washout.to_string()),
            ("empirical_output_gap", fmt_f(self.empirical_output_gap)),
        ]
    }

    /// `key = value` lines, wall-clock timings included.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k} = {v}");
        }
        let t = &self.timings;
        for (k, v) in [
            ("seconds_dilation", t.dilation),
            ("seconds_cyclic", t.cyclic),
            ("seconds_binarize", t.binarize),
            ("seconds_validation", t.validation),
        ] {
            let _ = writeln!(out, "{k} = {v:.6}");
        }
        out
    }

    /// CSV header matching [`Self::csv_row`]. Timings are left out so that
    /// rows are reproducible.
    pub fn csv_header() -> String {
        let dummy = ApproximationReport::placeholder();
        dummy
            .fields()
            .iter()
            .map(|(k, _)| *k)
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(_, v)| v)
            .collect::<Vec<_>>()
            .join(",")
    }

    fn placeholder() -> Self {
        Self {
            epsilon_requested: 0.0,
            lambda: 0.0,
            input_bound: 0.0,
            lipschitz: 0.0,
            delta_dil: 0.0,
            delta_cyc: 0.0,
            delta_bin: 0.0,
            bound_dil: 0.0,
            bound_cyc: 0.0,
            bound_bin: 0.0,
            output_bound: 0.0,
            n: 0,
            order: 0,
            n_u: 0,
            n_c: 0,
            n1: 0,
            k: 0,
            n_avg: 0,
            n_scr: 0,
            binarize_entry_error: 0.0,
            binarize_operator_error: 0.0,
            validation_streams: 0,
            washout: 0,
            empirical_output_gap: 0.0,
            timings: StageTimings::default(),
        }
    }
}

pub fn uniform_streams(
    input_dim: usize,
    bound: f64,
    cfg: &ValidationConfig,
) -> Result<Vec<InputStream>> {
    if input_dim == 0 || cfg.length == 0 {
        return Err(Error::invalid("validation streams need a positive dimension and length"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = bound / (input_dim as f64).sqrt();
    (0..cfg.streams)
        .map(|_| {
            let samples = (0..cfg.length)
                .map(|_| Vector::from_fn(input_dim, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0)))
                .collect();
            InputStream::new(samples, bound)
        })
        .collect()
}

/// Runs the pipeline validating on the default synthetic streams.
pub fn approximate_scr_default(
    r: &LinearReservoir,
    epsilon: f64,
    validation: &ValidationConfig,
) -> Result<(SCRSystem, ApproximationReport)> {
    let streams = uniform_streams(r.input_dim(), r.input_bound(), validation)?;
    approximate_scr(r, epsilon, &streams)
}

pub fn approximate_scr(
    r: &LinearReservoir,
    epsilon: f64,
    validation: &[InputStream],
) -> Result<(SCRSystem, ApproximationReport)> {
    approximate_scr_with(r, epsilon, validation, &PipelineConfig::default())
}

pub fn approximate_scr_with(
    r: &LinearReservoir,
    epsilon: f64,
    validation: &[InputStream],
    cfg: &PipelineConfig,
) -> Result<(SCRSystem, ApproximationReport)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let share: f64 = cfg.budget.iter().sum();
    if cfg.budget.iter().any(|b| !(*b > 0.0)) || share > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "stage budget {:?} must be positive and sum to at most 1",
            cfg.budget
        )));
    }
    for (i, u) in validation.iter().enumerate() {
        if u.bound() > r.input_bound() || u.dim() != r.input_dim() {
            return Err(Error::invalid(format!(
                "validation stream {i} does not respect the reservoir's input bound or dimension"
            )));
        }
    }
    let lip = r.readout().lipschitz()?;
    // A zero readout makes every state tolerance acceptable.
    let per_unit = if lip > 0.0 { epsilon / lip } else { epsilon };
    let [delta_dil, delta_cyc, delta_bin] = cfg.budget.map(|b| b * per_unit);
    let lambda = r.lambda();
    let m = r.input_bound();
    let v_norm = operator_norm(r.input_matrix())?;

    let t0 = Instant::now();
    let (r_u, plan) = (|| {
        if v_norm == 0.0 {
            return Err(Error::invalid(
                "input matrix is zero; every reservoir with zero input coupling is equivalent",
            ));
        }
        let order = choose_order(lambda, m, v_norm, delta_dil)?;
        let size = (order as u128 + 1) * r.state_dim() as u128;
        if size > cfg.max_dilated_dim as u128 {
            return Err(Error::ResourceLimit(format!(
                "dilation order N = {order} gives dimension {size} above the limit {}",
                cfg.max_dilated_dim
            )));
        }
        dilate_with_order(r, order)
    })()
    .map_err(|e| e.in_stage("dilation"))?;
    let t1 = Instant::now();
    let cyc = cyclic_approximate_capped(&r_u, delta_cyc, cfg.max_cycle_dim)
        .map_err(|e| e.in_stage("cyclic"))?;
    let t2 = Instant::now();
    let scr = scr_construct_capped(&cyc, delta_bin, cfg.max_scr_dim)
        .map_err(|e| e.in_stage("binarize"))?;
    let t3 = Instant::now();

    let (gap, washout) = (|| {
        let rs = scr.reservoir()?;
        let shortest = validation.iter().map(InputStream::len).min().unwrap_or(0);
        let washout = r.default_washout()?.min(shortest / 2);
        // Per-stream gaps come back in stream order, so the sup is
        // deterministic.
        let gaps = output_distances(r, &rs, validation, washout)?;
        Ok::<_, Error>((gaps.into_iter().fold(0.0, f64::max), washout))
    })()
    .map_err(|e| e.in_stage("validation"))?;
    let t4 = Instant::now();

    let bound_bin = m * scr.operator_error() / (1.0 - lambda);
    let bound_cyc = cyc.analytic_state_bound();
    let report = ApproximationReport {
        epsilon_requested: epsilon,
        lambda,
        input_bound: m,
        lipschitz: lip,
        delta_dil,
        delta_cyc,
        delta_bin,
        bound_dil: plan.delta_state,
        bound_cyc,
        bound_bin,
        output_bound: lip * (plan.delta_state + bound_cyc + bound_bin),
        n: r.state_dim(),
        order: plan.order,
        n_u: plan.n_dilated,
        n_c: cyc.n_c(),
        n1: cyc.theoretical_bound(),
        k: scr.k(),
        n_avg: scr.n_avg(),
        n_scr: scr.n_scr(),
        binarize_entry_error: scr.entry_error(),
        binarize_operator_error: scr.operator_error(),
        validation_streams: validation.len(),
        washout,
        empirical_output_gap: gap,
        timings: StageTimings {
            dilation: (t1 - t0).as_secs_f64(),
            cyclic: (t2 - t1).as_secs_f64(),
            binarize: (t3 - t2).as_secs_f64(),
            validation: (t4 - t3).as_secs_f64(),
        },
    };
    Ok((scr, report))
}
