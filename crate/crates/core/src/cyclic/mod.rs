//! Approximation of an orthogonal coupling by a scaled full-cycle
//! permutation.

mod fourier;
mod matching;
mod perturb;

pub use fourier::{cycle_canonical_basis, FourierBasis};
pub use matching::{
    build_completion, chord, l0_bound, match_roots, matched_blocks, maximum_matching,
    min_cycle_dimension, min_cycle_dimension_capped, theoretical_dimension, RootMatching,
    DEFAULT_MAX_CYCLE_DIM,
};
pub use perturb::{
    cyclic_perturbation, cyclic_perturbation_capped, CyclicPerturbation, CyclicTransform,
    DENSE_TRANSFORM_LIMIT,
};

use crate::dilation::{choose_order, dilation_state_bound};
use crate::error::{Error, Result};
use crate::linalg::{operator_norm, orthogonality_defect, Matrix};
use crate::reservoir::{LinearReadout, LinearReservoir};

/// `M ||V|| Σ_{k=0}^{N} ((λ + δ0)^k - λ^k)`.
pub fn perturbation_sum(lambda: f64, mv: f64, order: usize, delta0: f64) -> f64 {
    let mut total = 0.0;
    let (mut a, mut b) = (1.0f64, 1.0f64);
    for _ in 1..=order {
        a *= lambda + delta0;
        b *= lambda;
        total += a - b;
    }
    mv * total
}

/// Largest `δ0` (to relative precision 1e-12) with
/// `M ||V|| Σ_{k=0}^{N} ((λ + δ0)^k - λ^k) < δ/2`.
pub fn solve_delta0(lambda: f64, mv: f64, order: usize, delta: f64) -> Result<f64> {
    if mv == 0.0 || order == 0 {
        return Ok(f64::INFINITY);
    }
    let target = delta / 2.0;
    let f = |d: f64| perturbation_sum(lambda, mv, order, d);
    let mut hi = 1.0;
    while f(hi) < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(Error::numerical(
            "no positive δ0 satisfies the perturbation budget",
            hi,
        ));
    }
    Ok(lo)
}

/// The cycle system `(λ C, P [V_U; 0], h_U ∘ P_n ∘ P^T)` approximating an
/// orthogonal-coupling reservoir.
#[derive(Debug, Clone)]
pub struct CyclicApproximation {
    perturbation: CyclicPerturbation,
    lambda: f64,
    input_bound: f64,
    v_c: Matrix,
    readout_c: LinearReadout,
    state_tolerance: f64,
    order: usize,
    delta0: f64,
    root_tolerance: f64,
    input_scale: f64,
}

impl CyclicApproximation {
    pub fn n_c(&self) -> usize {
        self.perturbation.n_c()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn input_bound(&self) -> f64 {
        self.input_bound
    }

    pub fn input_matrix(&self) -> &Matrix {
        &self.v_c
    }

    pub fn readout(&self) -> &LinearReadout {
        &self.readout_c
    }

    pub fn perturbation(&self) -> &CyclicPerturbation {
        &self.perturbation
    }

    pub fn transform(&self) -> &CyclicTransform {
        self.perturbation.transform()
    }

    /// `n1 = 2 l0 (k + 1)` at the root tolerance actually used.
    pub fn theoretical_bound(&self) -> usize {
        self.perturbation.theoretical_bound()
    }

    /// The state tolerance `δ` requested.
    pub fn state_tolerance(&self) -> f64 {
        self.state_tolerance
    }

    /// Horizon `N` splitting the state error into head and tail.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// `min(δ, δ0) / λ`, the root-matching tolerance.
    pub fn root_tolerance(&self) -> f64 {
        self.root_tolerance
    }

    /// State gap guaranteed by the matching actually found:
    /// the head sum at perturbation `λ ||E||` plus the tail past the horizon.
    pub fn analytic_state_bound(&self) -> f64 {
        if self.input_scale == 0.0 {
            return 0.0;
        }
        let e = self.lambda * self.perturbation.perturbation_norm();
        perturbation_sum(self.lambda, self.input_scale, self.order, e)
            + dilation_state_bound(self.lambda, 1.0, self.input_scale, self.order)
    }

    pub fn reservoir(&self) -> Result<LinearReservoir> {
        LinearReservoir::cycle(
            self.n_c(),
            self.lambda,
            self.v_c.clone(),
            self.readout_c.clone(),
            self.input_bound,
        )
    }
}

/// Replaces the orthogonal coupling `λ U` of `r_u` by `λ C` with `C` a
/// full cycle, keeping states within `delta` after the transform `P`.
pub fn cyclic_approximate(r_u: &LinearReservoir, delta: f64) -> Result<CyclicApproximation> {
    cyclic_approximate_capped(r_u, delta, DEFAULT_MAX_CYCLE_DIM)
}

pub fn cyclic_approximate_capped(
    r_u: &LinearReservoir,
    delta: f64,
    max_dim: usize,
) -> Result<CyclicApproximation> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {delta}")));
    }
    let lambda = r_u.lambda();
    if lambda <= 0.0 {
        return Err(Error::invalid("coupling is zero; nothing to approximate"));
    }
    let u = r_u.coupling().to_dense() / lambda;
    let defect = orthogonality_defect(&u)?;
    if defect > 1e-8 {
        return Err(Error::invalid(format!(
            "coupling is not a scaled orthogonal matrix (defect {defect:.3e})"
        )));
    }
    let m = r_u.input_bound();
    let mv = m * operator_norm(r_u.input_matrix())?;
    let (order, delta0) = if mv == 0.0 {
        (0, f64::INFINITY)
    } else {
        let order = choose_order(lambda, m, mv / m, delta / 2.0)?;
        (order, solve_delta0(lambda, mv, order, delta)?)
    };
    let root_tolerance = delta.min(delta0) / lambda;
    let perturbation = cyclic_perturbation_capped(&u, root_tolerance, max_dim)?;
    let transform = perturbation.transform();
    let v_c = transform.forward(r_u.input_matrix())?;
    let readout_c = LinearReadout::composed_from(transform.pullback(r_u.readout().matrix())?);
    Ok(CyclicApproximation {
        perturbation,
        lambda,
        input_bound: m,
        v_c,
        readout_c,
        state_tolerance: delta,
        order,
        delta0,
        root_tolerance,
        input_scale: mv,
    })
}
