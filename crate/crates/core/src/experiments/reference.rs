use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::Series;
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, Matrix, Vector};
use crate::reservoir::{train_ridge, InputStream, LinearReadout, LinearReservoir};

/// Leading decimal digits of π, the integer digit included.
pub const PI_DIGITS: &str = "3141592653589793238462643383279502884197169399375105820974944592307816406286208998628034825342117067";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub n: usize,
    /// Operator norm of the coupling.
    pub rho: f64,
    pub input_scale: f64,
    pub horizon: usize,
    pub ridge: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            n: 5,
            rho: 0.9,
            input_scale: 0.05,
            horizon: 300,
            ridge: 1e-9,
        }
    }
}

/// `+1` for digits 5..=9 of π, `-1` for 0..=4.
pub fn pi_signs(count: usize) -> Result<Vec<f64>> {
    if count > PI_DIGITS.len() {
        return Err(Error::invalid(format!(
            "only {} digits of π are tabulated, {count} requested",
            PI_DIGITS.len()
        )));
    }
    Ok(PI_DIGITS
        .bytes()
        .take(count)
        .map(|d| if d >= b'5' { 1.0 } else { -1.0 })
        .collect())
}

/// `W` with i.i.d. U(0,1) entries rescaled to norm `rho`; `V` the scaled π
/// sign column.
pub fn reference_matrices(cfg: &ReferenceConfig, seed: u64) -> Result<(Matrix, Matrix)> {
    if cfg.n == 0 || !(cfg.rho > 0.0 && cfg.rho < 1.0) {
        return Err(Error::invalid(format!(
            "reference system needs n > 0 and 0 < rho < 1, got n = {}, rho = {}",
            cfg.n, cfg.rho
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Matrix::from_fn(cfg.n, cfg.n, |_, _| rng.random::<f64>());
    let w = &raw * (cfg.rho / operator_norm(&raw)?);
    let v = Matrix::from_column_slice(cfg.n, 1, &pi_signs(cfg.n)?) * cfg.input_scale;
    Ok((w, v))
}

/// Reference system with an identity readout.
pub fn reference_untrained(cfg: &ReferenceConfig, seed: u64, input_bound: f64) -> Result<LinearReservoir> {
    let (w, v) = reference_matrices(cfg, seed)?;
    LinearReservoir::new(w, v, LinearReadout::identity(cfg.n), input_bound)
}

/// Reference system whose readout predicts `u_{t + horizon}` from `x_t`,
/// fitted by ridge regression on the training split.
pub fn make_reference_system(cfg: &ReferenceConfig, seed: u64, series: &Series) -> Result<LinearReservoir> {
    let r = reference_untrained(cfg, seed, series.bound)?;
    let train = series.train();
    let washout = r.default_washout()?;
    if washout + cfg.horizon >= train.len() {
        return Err(Error::invalid(format!(
            "training split of {} samples is too short for washout {washout} and horizon {}",
            train.len(),
            cfg.horizon
        )));
    }
    let usable = train.len() - cfg.horizon;
    let stream = InputStream::new(
        train[..usable].iter().map(|&v| Vector::from_element(1, v)).collect(),
        series.bound,
    )?;
    let states = r.drive(&stream, washout)?;
    let targets: Vec<Vector> = (washout..usable)
        .map(|t| Vector::from_element(1, train[t + cfg.horizon]))
        .collect();
    let readout = train_ridge(&states, &targets, cfg.ridge)?;
    r.with_readout(readout)
}
