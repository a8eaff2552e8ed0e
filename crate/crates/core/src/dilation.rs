//! Orthogonal dilation of a contraction and the dilated reservoir.

use nalgebra::linalg::SVD;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, operator_norm, orthogonality_defect, Matrix};
use crate::reservoir::{LinearReadout, LinearReservoir};

/// Norm slack allowed for the rescaled coupling `W / λ`.
const CONTRACTION_SLACK: f64 = 1e-12;
/// Defect above which the assembled dilation is re-orthonormalized.
const REORTHONORMALIZE_ABOVE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationPlan {
    /// Dilation order `N`.
    pub order: usize,
    /// State tolerance the order was chosen for.
    pub delta_state: f64,
    /// `(N + 1) n`.
    pub n_dilated: usize,
}

/// `2 M ||V|| λ^{N+1} / (1 - λ)`: how far the dilated states can drift from
/// the original ones.
pub fn dilation_state_bound(lambda: f64, m: f64, v_norm: f64, order: usize) -> f64 {
    2.0 * m * v_norm * lambda.powi(order as i32 + 1) / (1.0 - lambda)
}

/// Smallest `N >= 1` with `2 M ||V|| λ^{N+1} / (1 - λ) < δ`.
pub fn choose_order(lambda: f64, m: f64, v_norm: f64, delta: f64) -> Result<usize> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(format!("dilation needs 0 < λ < 1, got {lambda}")));
    }
    for (name, v) in [("input bound", m), ("input norm", v_norm), ("tolerance", delta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    // Closed-form estimate, then walk to the exact smallest order.
    let ratio = delta * (1.0 - lambda) / (2.0 * m * v_norm);
    let guess = (ratio.ln() / lambda.ln() - 1.0).floor();
    let mut order = if guess.is_finite() && guess > 1.0 {
        guess as usize
    } else {
        1
    };
    while dilation_state_bound(lambda, m, v_norm, order) >= delta {
        order += 1;
    }
    while order > 1 && dilation_state_bound(lambda, m, v_norm, order - 1) < delta {
        order -= 1;
    }
    Ok(order)
}

/// Orthogonal `U` of size `(N+1) n` whose upper-left `n x n` block of `U^k`
/// is `W1^k` for every `1 <= k <= N`.
///
/// ```text
/// [ W1    0  ...  0  D_{W1^T} ]
/// [ D_W1  0  ...  0  -W1^T    ]
/// [ 0     I               0   ]
/// [          ...              ]
/// [ 0     ...     I       0   ]
/// ```
pub fn egervary_dilation(w1: &Matrix, order: usize) -> Result<Matrix> {
    ensure_finite(w1, "coupling")?;
    let n = w1.nrows();
    if n == 0 || !w1.is_square() {
        return Err(Error::invalid("dilation needs a non-empty square matrix"));
    }
    if order == 0 {
        return Err(Error::invalid("dilation order must be at least 1"));
    }
    let svd = SVD::try_new(w1.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("SVD of the coupling did not converge", f64::NAN))?;
    let smax = svd.singular_values.max();
    if smax > 1.0 + CONTRACTION_SLACK {
        return Err(Error::invalid(format!(
            "dilation needs a contraction, got norm {smax}"
        )));
    }
    let x = svd.u.as_ref().expect("requested U");
    let yt = svd.v_t.as_ref().expect("requested V^T");
    // Both defect operators come from the same SVD so that the intertwining
    // W D_W = D_{W^T} W holds to rounding.
    let roots = svd
        .singular_values
        .map(|s| ((1.0 - s.min(1.0)) * (1.0 + s.min(1.0))).max(0.0).sqrt());
    let sq = Matrix::from_diagonal(&roots);
    let d_w = yt.transpose() * &sq * yt;
    let d_wt = x * &sq * x.transpose();

    let size = (order + 1) * n;
    let mut u = Matrix::zeros(size, size);
    let last = order * n;
    u.view_mut((0, 0), (n, n)).copy_from(w1);
    u.view_mut((0, last), (n, n)).copy_from(&d_wt);
    u.view_mut((n, 0), (n, n)).copy_from(&d_w);
    u.view_mut((n, last), (n, n)).copy_from(&(-w1.transpose()));
    for r in 2..=order {
        u.view_mut((r * n, (r - 1) * n), (n, n))
            .fill_with_identity();
    }

    if orthogonality_defect(&u)? > REORTHONORMALIZE_ABOVE {
        u = polar_factor(u)?;
    }
    Ok(u)
}

fn polar_factor(m: Matrix) -> Result<Matrix> {
    let svd = SVD::try_new(m, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("SVD for re-orthonormalization did not converge", f64::NAN))?;
    Ok(svd.u.expect("requested U") * svd.v_t.expect("requested V^T"))
}

/// Dilated system for a state tolerance `delta`.
pub fn dilate_system(r: &LinearReservoir, delta: f64) -> Result<(LinearReservoir, DilationPlan)> {
    let v_norm = operator_norm(r.input_matrix())?;
    if v_norm == 0.0 {
        return Err(Error::invalid(
            "input matrix is zero; every reservoir with zero input coupling is equivalent",
        ));
    }
    let order = choose_order(r.lambda(), r.input_bound(), v_norm, delta)?;
    let mut plan = dilate_with_order(r, order)?;
    plan.1.delta_state = delta;
    Ok(plan)
}

/// Dilated system `(λ U, [V; 0], h ∘ P_n)` for a fixed order.
///
/// The returned plan's `delta_state` is the analytic state bound for that
/// order.
pub fn dilate_with_order(
    r: &LinearReservoir,
    order: usize,
) -> Result<(LinearReservoir, DilationPlan)> {
    let lambda = r.lambda();
    if lambda <= 0.0 {
        return Err(Error::invalid(
            "coupling is zero; use the memoryless system directly instead of a dilation",
        ));
    }
    let n = r.state_dim();
    let w1 = r.coupling().to_dense() / lambda;
    let u = egervary_dilation(&w1, order)?;
    let size = u.nrows();

    let mut v_u = Matrix::zeros(size, r.input_dim());
    v_u.view_mut((0, 0), (n, r.input_dim()))
        .copy_from(r.input_matrix());
    let a = r.readout().matrix();
    let mut a_u = Matrix::zeros(a.nrows(), size);
    a_u.view_mut((0, 0), (a.nrows(), n)).copy_from(a);

    let dilated = LinearReservoir::new(
        u * lambda,
        v_u,
        LinearReadout::composed_from(a_u),
        r.input_bound(),
    )?
    .with_exact_norm(lambda)?;
    let v_norm = operator_norm(r.input_matrix())?;
    let plan = DilationPlan {
        order,
        delta_state: dilation_state_bound(lambda, r.input_bound(), v_norm, order),
        n_dilated: size,
    };
    Ok((dilated, plan))
}
