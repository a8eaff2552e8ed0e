use std::f64::consts::PI;

use nalgebra::Complex;

use super::schur::real_schur;
use super::{ensure_finite, operator_norm, orthogonality_defect, Matrix};
use crate::error::{Error, Result};

/// Eigenvalues closer than this to ±1 are treated as exactly ±1.
const UNIT_EIGENVALUE_TOL: f64 = 1e-9;

/// Real orthogonal canonical form `S^T C S = T`, where `T` is block diagonal
/// with rotations `R_θ` (θ ∈ (0, π), ascending), then `plus_count` entries of
/// +1, then `minus_count` entries of −1.
///
/// The ±1 entries are reported raw; grouping pairs of them into `R_0` / `R_π`
/// blocks is left to the consumer.
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    pub basis: Matrix,
    pub angles: Vec<f64>,
    pub plus_count: usize,
    pub minus_count: usize,
    /// `||S^T C S - T||` in operator norm.
    pub residual: f64,
}

impl CanonicalForm {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn block_matrix(&self) -> Matrix {
        canonical_block_matrix(&self.angles, self.plus_count, self.minus_count)
    }

    /// `S T S^T`.
    pub fn reconstruct(&self) -> Matrix {
        &self.basis * self.block_matrix() * self.basis.transpose()
    }

    /// The spectrum implied by the form, conjugate pairs adjacent.
    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        let mut out = Vec::with_capacity(self.dim());
        for &t in &self.angles {
            out.push(Complex::new(t.cos(), t.sin()));
            out.push(Complex::new(t.cos(), -t.sin()));
        }
        out.extend(std::iter::repeat_n(Complex::new(1.0, 0.0), self.plus_count));
        out.extend(std::iter::repeat_n(Complex::new(-1.0, 0.0), self.minus_count));
        out
    }
}

/// `[[cos θ, -sin θ], [sin θ, cos θ]]`.
pub fn rotation(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

pub fn canonical_block_matrix(angles: &[f64], plus: usize, minus: usize) -> Matrix {
    let n = 2 * angles.len() + plus + minus;
    let mut t = Matrix::zeros(n, n);
    for (b, &theta) in angles.iter().enumerate() {
        t.view_mut((2 * b, 2 * b), (2, 2)).copy_from(&rotation(theta));
    }
    let base = 2 * angles.len();
    for i in 0..plus {
        t[(base + i, base + i)] = 1.0;
    }
    for i in 0..minus {
        t[(base + plus + i, base + plus + i)] = -1.0;
    }
    t
}

enum Block {
    Rotation { cols: [usize; 2], angle: f64 },
    Plus(usize),
    Minus(usize),
}

/// Canonical form of an orthogonal matrix via its real Schur form.
pub fn canonical_form(c: &Matrix, tol: f64) -> Result<CanonicalForm> {
    ensure_finite(c, "matrix")?;
    let n = c.nrows();
    if n == 0 || n != c.ncols() {
        return Err(Error::invalid(format!(
            "canonical form needs a non-empty square matrix, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let defect = orthogonality_defect(c)?;
    if defect > 1e-8 {
        return Err(Error::invalid(format!(
            "canonical form needs an orthogonal matrix (||C^T C - I|| = {defect:.3e})"
        )));
    }

    let (z, t) = real_schur(c)?;

    let mut blocks = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b, cc, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let angle = (b * cc).abs().sqrt().atan2(0.5 * (a + d));
            // A block realizing -θ (positive upper-right entry) becomes +θ
            // after swapping its two basis vectors.
            let cols = if cc > 0.0 { [i, i + 1] } else { [i + 1, i] };
            if 2.0 * (angle / 2.0).sin() <= UNIT_EIGENVALUE_TOL {
                blocks.push(Block::Plus(cols[0]));
                blocks.push(Block::Plus(cols[1]));
            } else if 2.0 * ((PI - angle) / 2.0).sin() <= UNIT_EIGENVALUE_TOL {
                blocks.push(Block::Minus(cols[0]));
                blocks.push(Block::Minus(cols[1]));
            } else {
                blocks.push(Block::Rotation { cols, angle });
            }
            i += 2;
        } else {
            if t[(i, i)] >= 0.0 {
                blocks.push(Block::Plus(i));
            } else {
                blocks.push(Block::Minus(i));
            }
            i += 1;
        }
    }

    let mut rotations: Vec<([usize; 2], f64)> = blocks
        .iter()
        .filter_map(|b| match b {
            Block::Rotation { cols, angle } => Some((*cols, *angle)),
            _ => None,
        })
        .collect();
    rotations.sort_by(|a, b| a.1.total_cmp(&b.1));
    let plus: Vec<usize> = blocks
        .iter()
        .filter_map(|b| if let Block::Plus(j) = b { Some(*j) } else { None })
        .collect();
    let minus: Vec<usize> = blocks
        .iter()
        .filter_map(|b| if let Block::Minus(j) = b { Some(*j) } else { None })
        .collect();

    let order: Vec<usize> = rotations
        .iter()
        .flat_map(|(cols, _)| cols.iter().copied())
        .chain(plus.iter().copied())
        .chain(minus.iter().copied())
        .collect();
    let basis = z.select_columns(order.iter());
    let angles: Vec<f64> = rotations.iter().map(|(_, a)| *a).collect();

    let block = canonical_block_matrix(&angles, plus.len(), minus.len());
    let residual = operator_norm(&(basis.transpose() * c * &basis - block))?;
    if residual > tol {
        return Err(Error::numerical(
            format!("canonical form residual exceeds tolerance {tol:.1e}"),
            residual,
        ));
    }
    Ok(CanonicalForm {
        basis,
        angles,
        plus_count: plus.len(),
        minus_count: minus.len(),
        residual,
    })
}
