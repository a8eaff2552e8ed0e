use super::Matrix;
use crate::error::{Error, Result};

/// The `n`-cycle `σ(i) = i + 1 mod n`, the single shift convention used
/// throughout the crate.
///
/// As a matrix, `p[i][j] = 1` iff `σ(i) = j`, so `(P x)_i = x_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclePermutation {
    size: usize,
}

impl CyclePermutation {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid(format!(
                "a full-cycle permutation needs size >= 2, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn successor(&self, i: usize) -> usize {
        if i + 1 == self.size {
            0
        } else {
            i + 1
        }
    }

    pub fn matrix(&self) -> Matrix {
        let n = self.size;
        Matrix::from_fn(n, n, |i, j| if self.successor(i) == j { 1.0 } else { 0.0 })
    }

    /// `out = weight * P x + add`.
    pub fn shift_into(&self, weight: f64, x: &[f64], add: &[f64], out: &mut [f64]) {
        let n = self.size;
        debug_assert!(x.len() == n && add.len() == n && out.len() == n);
        for ((o, xi), a) in out[..n - 1].iter_mut().zip(&x[1..]).zip(&add[..n - 1]) {
            *o = weight * xi + a;
        }
        out[n - 1] = weight * x[0] + add[n - 1];
    }
}

pub fn cycle_matrix(n: usize) -> Result<Matrix> {
    Ok(CyclePermutation::new(n)?.matrix())
}

/// Outcome of inspecting a candidate permutation matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycleStructure {
    FullCycle,
    /// A permutation with more than one cycle; lengths in orbit order.
    Cycles(Vec<usize>),
    NotPermutation(String),
}

impl CycleStructure {
    pub fn is_full_cycle(&self) -> bool {
        matches!(self, CycleStructure::FullCycle)
    }
}

/// Reads `σ` off a 0/1 matrix (`p[i][σ(i)] = 1`), tolerating 1e-12 noise.
pub fn permutation_of(p: &Matrix) -> std::result::Result<Vec<usize>, String> {
    let (r, c) = p.shape();
    if r != c {
        return Err(format!("not a permutation: {r}x{c} is not square"));
    }
    let mut sigma = vec![usize::MAX; r];
    let mut hit = vec![false; r];
    for i in 0..r {
        for j in 0..c {
            let v = p[(i, j)];
            if (v - 1.0).abs() <= 1e-12 {
                if sigma[i] != usize::MAX {
                    return Err(format!("not a permutation: row {i} has two ones"));
                }
                if hit[j] {
                    return Err(format!("not a permutation: column {j} has two ones"));
                }
                sigma[i] = j;
                hit[j] = true;
            } else if v.abs() > 1e-12 {
                return Err(format!("not a permutation: entry ({i},{j}) = {v}"));
            }
        }
        if sigma[i] == usize::MAX {
            return Err(format!("not a permutation: row {i} has no one"));
        }
    }
    Ok(sigma)
}

/// Cycle lengths of a permutation given as an index map.
pub fn cycle_lengths(sigma: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; sigma.len()];
    let mut lengths = Vec::new();
    for start in 0..sigma.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = sigma[i];
            len += 1;
        }
        lengths.push(len);
    }
    lengths
}

pub fn cycle_structure(p: &Matrix) -> CycleStructure {
    match permutation_of(p) {
        Err(msg) => CycleStructure::NotPermutation(msg),
        Ok(sigma) => {
            let lengths = cycle_lengths(&sigma);
            if lengths.len() == 1 && !sigma.is_empty() {
                CycleStructure::FullCycle
            } else {
                CycleStructure::Cycles(lengths)
            }
        }
    }
}

pub fn is_full_cycle(p: &Matrix) -> bool {
    cycle_structure(p).is_full_cycle()
}
