//! Dense real matrix kernels.
//!
//! Matrices are plain `nalgebra::DMatrix<f64>` values; this module adds the
//! operations the approximation stages need on top of them: operator norms,
//! PSD square roots, Haar sampling, permutation utilities and the canonical
//! form of an orthogonal matrix.

mod canonical;
pub mod csv;
mod perm;
pub mod schur;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub use canonical::{canonical_block_matrix, canonical_form, rotation, CanonicalForm};
pub use perm::{
    cycle_lengths, cycle_matrix, cycle_structure, is_full_cycle, permutation_of, CyclePermutation,
    CycleStructure,
};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Largest dimension for which `operator_norm` uses a dense SVD.
pub const SVD_DIM_LIMIT: usize = 512;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} has non-finite entries")))
    }
}

/// Largest singular value.
///
/// Dense SVD when both dimensions are at most [`SVD_DIM_LIMIT`]; when only
/// the smaller one is, the square root of the top eigenvalue of the smaller
/// Gram matrix; otherwise power iteration on `M^T M`.
pub fn operator_norm(m: &Matrix) -> Result<f64> {
    ensure_finite(m, "matrix")?;
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(0.0);
    }
    if r.max(c) <= SVD_DIM_LIMIT {
        let svd = m
            .clone()
            .try_svd(false, false, f64::EPSILON, 0)
            .ok_or_else(|| Error::numerical("SVD did not converge", f64::NAN))?;
        return Ok(svd.singular_values.max());
    }
    if r.min(c) <= SVD_DIM_LIMIT {
        let gram = if r <= c {
            m * m.transpose()
        } else {
            m.transpose() * m
        };
        let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 0)
            .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge", f64::NAN))?;
        return Ok(eig.eigenvalues.max().max(0.0).sqrt());
    }
    Ok(power_iteration_norm(m))
}

fn power_iteration_norm(m: &Matrix) -> f64 {
    let c = m.ncols();
    // Deterministic, generic start vector.
    let mut v = Vector::from_fn(c, |i, _| 1.0 + 0.01 * ((i as f64) * 0.7).sin());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = m.transpose() * (m * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        if (nw - estimate).abs() <= POWER_TOL * nw {
            estimate = nw;
            break;
        }
        estimate = nw;
    }
    estimate.sqrt()
}

/// Symmetric PSD square root. Eigenvalues in `[-1e-10, 0)` are clamped to 0.
pub fn psd_sqrt(m: &Matrix) -> Result<Matrix> {
    ensure_finite(m, "matrix")?;
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::invalid("psd_sqrt needs a square matrix"));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::invalid(format!(
            "psd_sqrt input is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge", f64::NAN))?;
    let lowest = eig.eigenvalues.min();
    if lowest < -1e-10 * scale {
        return Err(Error::invalid(format!(
            "psd_sqrt input is indefinite (eigenvalue {lowest:.3e})"
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let s = q * Matrix::from_diagonal(&roots) * q.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the triangular factor's diagonal made positive.
pub fn random_orthogonal(n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::invalid("random_orthogonal needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    Ok(haar_from_gaussian(g))
}

pub(crate) fn haar_from_gaussian(g: Matrix) -> Matrix {
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `||M^T M - I||` in operator norm.
pub fn orthogonality_defect(m: &Matrix) -> Result<f64> {
    let n = m.ncols();
    operator_norm(&(m.transpose() * m - Matrix::identity(n, n)))
}

/// Upper-left `rows x cols` block of `m`, copied.
pub fn corner(m: &Matrix, rows: usize, cols: usize) -> Matrix {
    m.view((0, 0), (rows, cols)).into_owned()
}

/// Block-diagonal direct sum `a ⊕ b`.
pub fn direct_sum(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Matrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Independent oracle: plain power iteration on M^T M, fixed iterations.
    fn power_oracle(m: &Matrix) -> f64 {
        let mut v = Vector::from_element(m.ncols(), 1.0);
        for _ in 0..5000 {
            let w = m.transpose() * (m * &v);
            v = &w / w.norm();
        }
        (m * &v).norm()
    }

    #[test]
    fn operator_norm_trivial_cases() {
        assert!((operator_norm(&Matrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-14);
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![0.9, 0.3]));
        assert!((operator_norm(&d).unwrap() - 0.9).abs() < 1e-14);
        assert_eq!(operator_norm(&Matrix::zeros(0, 3)).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_matches_power_iteration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let m = Matrix::from_fn(5, 5, |_, _| rng.random::<f64>());
            let got = operator_norm(&m).unwrap();
            let want = power_oracle(&m);
            assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn operator_norm_large_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let wide = Matrix::from_fn(3, 700, |_, _| rng.random::<f64>() - 0.5);
        let got = operator_norm(&wide).unwrap();
        let want = power_oracle(&wide);
        assert!((got - want).abs() <= 1e-9 * want);
        let tall = Matrix::from_fn(600, 520, |i, j| if i == j { 1.0 + (i as f64) * 1e-3 } else { 0.0 });
        let got = operator_norm(&tall).unwrap();
        assert!((got - (1.0 + 519e-3)).abs() < 1e-9);
    }

    #[test]
    fn operator_norm_rejects_nan() {
        let mut m = Matrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(operator_norm(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn psd_sqrt_cases() {
        let i = Matrix::identity(4, 4);
        assert!((psd_sqrt(&i).unwrap() - &i).amax() < 1e-14);
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 9.0]));
        let s = psd_sqrt(&d).unwrap();
        assert!((s - Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 3.0]))).amax() < 1e-14);

        let asym = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(psd_sqrt(&asym).is_err());
        let indef = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -0.5]));
        assert!(psd_sqrt(&indef).is_err());
        // Rounding-level negatives are clamped.
        let nearly = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1e-13]));
        assert!(psd_sqrt(&nearly).is_ok());
    }

    #[test]
    fn psd_sqrt_of_contraction_defect() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = Matrix::from_fn(6, 6, |_, _| rng.random::<f64>() - 0.5);
        let w = &w * (0.95 / operator_norm(&w).unwrap());
        let m = Matrix::identity(6, 6) - w.transpose() * &w;
        let s = psd_sqrt(&m).unwrap();
        assert!((&s * &s - &m).amax() <= 1e-8);
    }

    #[test]
    fn random_orthogonal_cases() {
        let q = random_orthogonal(1, 0).unwrap();
        assert!((q[(0, 0)].abs() - 1.0).abs() < 1e-15);
        let q = random_orthogonal(6, 7).unwrap();
        assert!(orthogonality_defect(&q).unwrap() <= 1e-10);
        assert_eq!(q, random_orthogonal(6, 7).unwrap());
        assert!(random_orthogonal(0, 1).is_err());
    }

    #[test]
    fn haar_first_entry_has_zero_mean() {
        let mean: f64 = (0..1000u64)
            .map(|s| random_orthogonal(20, 10_000 + s).unwrap()[(0, 0)])
            .sum::<f64>()
            / 1000.0;
        assert!(mean.abs() < 0.1, "mean {mean}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = Matrix::from_fn(n, n + 2, |_, _| rng.random::<f64>() - 0.5);
            let gram = &b * b.transpose();
            let s = psd_sqrt(&gram).unwrap();
            prop_assert!((&s * &s - &gram).amax() <= 1e-8);
            prop_assert!((&s - s.transpose()).amax() == 0.0);
        }
    }
}
