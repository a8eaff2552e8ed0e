use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Real Fourier basis `J_C` of the even `n`-cycle, evaluated lazily.
///
/// Column layout: for `a = 1, …, n/2 - 1` the pair `(s_a, c_a)` with
/// `s_a(j) = √(2/n) sin(2πaj/n)` and `c_a(j) = √(2/n) cos(2πaj/n)`, then the
/// constant column `1/√n`, then the alternating column `(-1)^j/√n`. In this
/// basis the cycle is `blockdiag(R_{2π/n}, …, R_{2π(n/2-1)/n}, 1, -1)`.
#[derive(Debug, Clone)]
pub struct FourierBasis {
    n: usize,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl FourierBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::invalid(format!(
                "the cycle basis needs an even dimension >= 4, got {n}"
            )));
        }
        let step = 2.0 * PI / n as f64;
        let (sin, cos) = (0..n).map(|r| (r as f64 * step).sin_cos()).unzip();
        Ok(Self { n, sin, cos })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Root index `a` of column `col`, or `None` for the two real columns.
    pub fn root_of_column(&self, col: usize) -> Option<usize> {
        (col + 2 < self.n).then_some(col / 2 + 1)
    }

    /// Column index of the first vector of the rotation block for root `a`.
    pub fn column_of_root(&self, a: usize) -> usize {
        2 * (a - 1)
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let n = self.n;
        if col + 2 < n {
            let a = col / 2 + 1;
            let r = (a * row) % n;
            let s = (2.0 / n as f64).sqrt();
            if col % 2 == 0 {
                s * self.sin[r]
            } else {
                s * self.cos[r]
            }
        } else if col + 2 == n || row % 2 == 0 {
            1.0 / (n as f64).sqrt()
        } else {
            -1.0 / (n as f64).sqrt()
        }
    }

    /// `out += scale * J_C[:, col]`.
    pub fn add_column(&self, col: usize, scale: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o += scale * self.entry(j, col);
        }
    }

    pub fn dense(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }
}

/// Dense `J_C` and the root index of each rotation block, in block order.
pub fn cycle_canonical_basis(n: usize) -> Result<(Matrix, Vec<usize>)> {
    let basis = FourierBasis::new(n)?;
    Ok((basis.dense(), (1..n / 2).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{canonical_block_matrix, cycle_matrix, operator_norm, orthogonality_defect};

    fn t_c(n: usize) -> Matrix {
        let angles: Vec<f64> = (1..n / 2).map(|a| 2.0 * PI * a as f64 / n as f64).collect();
        canonical_block_matrix(&angles, 1, 1)
    }

    #[test]
    fn four_cycle() {
        let (j, roots) = cycle_canonical_basis(4).unwrap();
        assert_eq!(roots, vec![1]);
        let c = cycle_matrix(4).unwrap();
        let r = operator_norm(&(j.transpose() * c * &j - t_c(4))).unwrap();
        assert!(r <= 1e-12, "{r}");
    }

    #[test]
    fn orthonormal_and_block_form() {
        for n in [6usize, 8, 10, 64, 130] {
            let (j, _) = cycle_canonical_basis(n).unwrap();
            assert!(orthogonality_defect(&j).unwrap() <= 1e-12);
            let c = cycle_matrix(n).unwrap();
            assert!(operator_norm(&(j.transpose() * c * &j - t_c(n))).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn eighth_roots_reconstructed() {
        let (j, _) = cycle_canonical_basis(8).unwrap();
        let recon = &j * t_c(8) * j.transpose();
        // Power sums tr(C^k) = 0 for 0 < k < 8 and tr(C^8) = 8 pin the
        // characteristic polynomial to x^8 - 1.
        let mut pk = Matrix::identity(8, 8);
        for k in 1..=8 {
            pk = &pk * &recon;
            let want = if k == 8 { 8.0 } else { 0.0 };
            assert!((pk.trace() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn odd_or_small_rejected() {
        assert!(cycle_canonical_basis(5).is_err());
        assert!(cycle_canonical_basis(2).is_err());
    }
}
