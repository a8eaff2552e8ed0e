use std::f64::consts::PI;

use super::fourier::FourierBasis;
use super::matching::{
    build_completion, min_cycle_dimension_capped, theoretical_dimension, RootMatching,
    DEFAULT_MAX_CYCLE_DIM,
};
use crate::error::{Error, Result};
use crate::linalg::{
    canonical_block_matrix, canonical_form, cycle_matrix, direct_sum, operator_norm,
    Matrix,
};

/// Dense materialization is refused above this cycle dimension.
pub const DENSE_TRANSFORM_LIMIT: usize = 4096;

/// The orthogonal `P = J_C P̃ (J_U ⊕ I)^T` in factored form.
///
/// `J_U` is the source's canonical basis (columns in matching order), `P̃`
/// is a permutation stored as an index map and `J_C` is the cycle's Fourier
/// basis, evaluated on demand. `P` maps source coordinates, zero-extended to
/// the cycle dimension, onto cycle coordinates.
#[derive(Debug, Clone)]
pub struct CyclicTransform {
    basis: Matrix,
    placement: Vec<usize>,
    fourier: FourierBasis,
}

impl CyclicTransform {
    pub fn n_c(&self) -> usize {
        self.fourier.dim()
    }

    /// Dimension of the (padded) source block.
    pub fn n_source(&self) -> usize {
        self.basis.nrows()
    }

    /// `P̃` as an index map: block-form index `i` lands at `placement[i]` of
    /// the cycle's canonical layout.
    pub fn placement(&self) -> &[usize] {
        &self.placement
    }

    pub fn source_basis(&self) -> &Matrix {
        &self.basis
    }

    /// `P [v; 0]` for `v` with at most `n_source` rows.
    pub fn forward(&self, v: &Matrix) -> Result<Matrix> {
        let r = v.nrows();
        if r > self.n_source() {
            return Err(Error::invalid(format!(
                "transform input has {r} rows, source dimension is {}",
                self.n_source()
            )));
        }
        let w = self.basis.rows(0, r).transpose() * v;
        let n = self.n_c();
        let m = v.ncols();
        let mut out = Matrix::zeros(n, m);
        for (i, &col) in self.placement[..self.n_source()].iter().enumerate() {
            for c in 0..m {
                let scale = w[(i, c)];
                if scale != 0.0 {
                    self.fourier
                        .add_column(col, scale, out.column_mut(c).as_mut_slice());
                }
            }
        }
        Ok(out)
    }

    /// `[a 0] P^T` for `a` with at most `n_source` columns: the map
    /// `x ↦ a · (first columns of P^T x)`.
    pub fn pullback(&self, a: &Matrix) -> Result<Matrix> {
        let r = a.ncols();
        if r > self.n_source() {
            return Err(Error::invalid(format!(
                "transform input has {r} columns, source dimension is {}",
                self.n_source()
            )));
        }
        let b = a * self.basis.rows(0, r);
        let n = self.n_c();
        let d = a.nrows();
        let mut out = Matrix::zeros(d, n);
        for (i, &col) in self.placement[..self.n_source()].iter().enumerate() {
            let bi = b.column(i);
            if bi.iter().all(|v| *v == 0.0) {
                continue;
            }
            for j in 0..n {
                let e = self.fourier.entry(j, col);
                for (o, bv) in out.column_mut(j).iter_mut().zip(bi.iter()) {
                    *o += bv * e;
                }
            }
        }
        Ok(out)
    }

    /// First `rows` coordinates of `P^T x`, as a `rows x n_C` matrix.
    pub fn state_map(&self, rows: usize) -> Result<Matrix> {
        self.pullback(&Matrix::identity(rows, rows))
    }

    /// Dense `P`.
    pub fn dense(&self) -> Result<Matrix> {
        let n = self.n_c();
        if n > DENSE_TRANSFORM_LIMIT {
            return Err(Error::ResourceLimit(format!(
                "refusing to materialize a {n}x{n} transform"
            )));
        }
        let mut jbar = Matrix::identity(n, n);
        let s = self.n_source();
        jbar.view_mut((0, 0), (s, s)).copy_from(&self.basis);
        let mut ptilde = Matrix::zeros(n, n);
        for (i, &p) in self.placement.iter().enumerate() {
            ptilde[(p, i)] = 1.0;
        }
        Ok(self.fourier.dense() * ptilde * jbar.transpose())
    }
}

/// Cycle-approximation of an orthogonal `U`: a cycle dimension `n_C`, a
/// completion `D` and an orthogonal `P` with `||P^T C P - (U ⊕ D)|| < δ`,
/// `C` the `n_C`-cycle.
#[derive(Debug, Clone)]
pub struct CyclicPerturbation {
    source_dim: usize,
    /// `Some(±1.0)` when `U` was extended by one eigenvalue to make the ±1
    /// counts pair up.
    padding: Option<f64>,
    matching: RootMatching,
    rotation_count: usize,
    completion: Matrix,
    transform: CyclicTransform,
    theoretical_bound: usize,
}

impl CyclicPerturbation {
    pub fn n_c(&self) -> usize {
        self.matching.n_prime
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn padding(&self) -> Option<f64> {
        self.padding
    }

    pub fn matching(&self) -> &RootMatching {
        &self.matching
    }

    /// Number of genuine rotation blocks of `U` (angles strictly in (0, π)).
    pub fn rotation_count(&self) -> usize {
        self.rotation_count
    }

    /// Number of matched angles, grouped ±1 pairs included.
    pub fn matched_count(&self) -> usize {
        self.matching.angles.len()
    }

    pub fn completion(&self) -> &Matrix {
        &self.completion
    }

    pub fn transform(&self) -> &CyclicTransform {
        &self.transform
    }

    /// `n1 = 2 l0 (k + 1)` for the matched angle count.
    pub fn theoretical_bound(&self) -> usize {
        self.theoretical_bound
    }

    /// `||T - (T_U ⊕ D)||`, i.e. the largest matched root error.
    pub fn perturbation_norm(&self) -> f64 {
        self.matching.max_error()
    }

    /// The `D` of `U ⊕ D` in source coordinates: the padding entry (if any)
    /// followed by the completion block.
    pub fn full_completion(&self) -> Matrix {
        match self.padding {
            Some(s) => direct_sum(&Matrix::from_element(1, 1, s), &self.completion),
            None => self.completion.clone(),
        }
    }

    /// `U ⊕ D` (dense).
    pub fn target(&self, u: &Matrix) -> Matrix {
        direct_sum(u, &self.full_completion())
    }

    /// `||P^T C P - (U ⊕ D)||`, assembled densely.
    pub fn similarity_residual(&self, u: &Matrix) -> Result<f64> {
        let p = self.transform.dense()?;
        let c = cycle_matrix(self.n_c())?;
        operator_norm(&(p.transpose() * c * &p - self.target(u)))
    }

    /// Block form `T`: matched rotations, the matched ±1 pair if any, then
    /// the completion.
    pub fn block_form(&self) -> Matrix {
        let matched: Vec<f64> = (0..self.matched_count())
            .map(|i| self.matching.root_angle(i))
            .collect();
        let pm = usize::from(self.matching.pm_pair_matched);
        direct_sum(&canonical_block_matrix(&matched, pm, pm), &self.completion)
    }
}

/// Builds the cycle approximation of an orthogonal `U` for root tolerance
/// `delta`, choosing the smallest feasible cycle dimension.
pub fn cyclic_perturbation(u: &Matrix, delta: f64) -> Result<CyclicPerturbation> {
    cyclic_perturbation_capped(u, delta, DEFAULT_MAX_CYCLE_DIM)
}

pub fn cyclic_perturbation_capped(
    u: &Matrix,
    delta: f64,
    max_dim: usize,
) -> Result<CyclicPerturbation> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {delta}")));
    }
    let n = u.nrows();
    let cf = canonical_form(u, 1e-8 * (n as f64).max(1.0))?;
    let mut plus = cf.plus_count;
    let mut minus = cf.minus_count;
    let padding = if (plus + minus) % 2 == 1 {
        if plus % 2 == 1 {
            minus += 1;
            Some(-1.0)
        } else {
            plus += 1;
            Some(1.0)
        }
    } else {
        None
    };
    let n_pad = n + usize::from(padding.is_some());
    let k = cf.angles.len();

    // Source basis in source coordinates, extended by the padding direction.
    let mut ext = Matrix::zeros(n_pad, n_pad);
    ext.view_mut((0, 0), (n, n)).copy_from(&cf.basis);
    if padding.is_some() {
        ext[(n, n)] = 1.0;
    }
    let rot_cols: Vec<usize> = (0..2 * k).collect();
    let mut plus_cols: Vec<usize> = (2 * k..2 * k + cf.plus_count).collect();
    let mut minus_cols: Vec<usize> = (2 * k + cf.plus_count..n).collect();
    match padding {
        Some(s) if s > 0.0 => plus_cols.push(n),
        Some(_) => minus_cols.push(n),
        None => {}
    }
    let pm = plus % 2 == 1;
    let (plus_pairs, plus_rest) = plus_cols.split_at(plus - usize::from(pm));
    let (minus_pairs, minus_rest) = minus_cols.split_at(minus - usize::from(pm));

    let order: Vec<usize> = rot_cols
        .iter()
        .chain(plus_pairs)
        .chain(minus_pairs)
        .chain(plus_rest)
        .chain(minus_rest)
        .copied()
        .collect();
    let basis = ext.select_columns(order.iter());

    let mut angles = cf.angles.clone();
    angles.extend(std::iter::repeat_n(0.0, plus_pairs.len() / 2));
    angles.extend(std::iter::repeat_n(PI, minus_pairs.len() / 2));

    let (n_c, mut matching) = min_cycle_dimension_capped(&angles, delta, max_dim)?;
    matching.pm_pair_matched = pm;
    let fourier = FourierBasis::new(n_c)?;

    // P̃: block-form layout -> cycle canonical layout.
    let mut placement = Vec::with_capacity(n_c);
    for &a in &matching.roots {
        let c = fourier.column_of_root(a);
        placement.extend([c, c + 1]);
    }
    if pm {
        placement.extend([n_c - 2, n_c - 1]);
    }
    for a in matching.unmatched_roots() {
        let c = fourier.column_of_root(a);
        placement.extend([c, c + 1]);
    }
    if !pm {
        placement.extend([n_c - 2, n_c - 1]);
    }
    debug_assert_eq!(placement.len(), n_c);

    let completion = build_completion(&matching);
    let theoretical_bound = theoretical_dimension(angles.len(), delta)?;
    Ok(CyclicPerturbation {
        source_dim: n,
        padding,
        rotation_count: k,
        completion,
        transform: CyclicTransform {
            basis,
            placement,
            fourier,
        },
        matching,
        theoretical_bound,
    })
}

/// `R_θ` blocks of the canonical form of `U` in matching order, used by
/// tests to compare against the block form.
#[cfg(test)]
pub(crate) fn source_block_form(p: &CyclicPerturbation) -> Matrix {
    let mut out = Matrix::zeros(0, 0);
    for &t in &p.matching.angles {
        out = direct_sum(&out, &crate::linalg::rotation(t));
    }
    let pm = usize::from(p.matching.pm_pair_matched);
    direct_sum(&out, &canonical_block_matrix(&[], pm, pm))
}
