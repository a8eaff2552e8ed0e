//! ±1 input couplings by averaging sign matrices, and the block-cycle
//! expansion that turns a cycle approximation into a simple cycle reservoir.

use crate::cyclic::CyclicApproximation;
use crate::error::{Error, Result};
use crate::linalg::{cycle_lengths, operator_norm, Matrix};
use crate::reservoir::{LinearReadout, LinearReservoir};

/// Reservoirs larger than this are refused by default.
pub const DEFAULT_MAX_SCR_DIM: usize = 50_000_000;

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `V ≈ (1/N) Σ_{j=1}^{k} F_j` with `F_j ∈ {-1, +1}^{rows x cols}`.
///
/// The sign matrices are stored implicitly through the per-entry counts
/// `q = Σ_j F_j`: entry `(i, c)` of `F_j` (1-based `j`) is `+1` iff
/// `j <= (k + q_ic) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Binarization {
    rows: usize,
    cols: usize,
    k: usize,
    n_avg: usize,
    q: Vec<i64>,
    max_entry_error: f64,
    operator_error: f64,
}

impl Binarization {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_avg(&self) -> usize {
        self.n_avg
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn count(&self, i: usize, c: usize) -> i64 {
        self.q[i * self.cols + c]
    }

    /// Entry `(i, c)` of `F_j`, `j` 1-based.
    #[inline]
    pub fn sign(&self, j: usize, i: usize, c: usize) -> i8 {
        let q = self.count(i, c);
        if 2 * j as i64 <= self.k as i64 + q {
            1
        } else {
            -1
        }
    }

    /// `F_j`, `j` in `1..=k`.
    pub fn sign_matrix(&self, j: usize) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, c| f64::from(self.sign(j, i, c)))
    }

    /// `(1/N) Σ_j F_j`.
    pub fn reconstruction(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, c| {
            self.count(i, c) as f64 / self.n_avg as f64
        })
    }

    pub fn max_entry_error(&self) -> f64 {
        self.max_entry_error
    }

    pub fn operator_error(&self) -> f64 {
        self.operator_error
    }
}

/// Nearest integer to `x` with the parity of `parity`, ties toward zero.
fn nearest_with_parity(x: f64, parity: i64) -> i64 {
    let mut lower = x.floor() as i64;
    if (lower - parity).rem_euclid(2) != 0 {
        lower -= 1;
    }
    let upper = lower + 2;
    let (dl, du) = (x - lower as f64, upper as f64 - x);
    if dl < du {
        lower
    } else if du < dl {
        upper
    } else if lower.abs() <= upper.abs() {
        lower
    } else {
        upper
    }
}

/// Sign-matrix approximation of `v` with operator-norm error at most
/// `delta`, using a number of matrices coprime to `n`.
pub fn binarize(v: &Matrix, delta: f64, n: usize) -> Result<Binarization> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {delta}")));
    }
    if n == 0 {
        return Err(Error::invalid("cycle length must be positive"));
    }
    crate::linalg::ensure_finite(v, "input matrix")?;
    let (rows, cols) = v.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("input matrix is empty"));
    }
    let n_avg_f = (((rows * cols) as f64).sqrt() / delta).ceil();
    if n_avg_f > 1e12 {
        return Err(Error::ResourceLimit(format!(
            "binarization needs {n_avg_f:e} averaged sign matrices"
        )));
    }
    let n_avg = n_avg_f.max(1.0) as usize;
    let vmax = v.amax();
    let mut k = (n_avg as f64 * vmax).ceil() as usize + 1;
    while gcd(k, n) != 1 {
        k += 1;
    }
    let parity = (k % 2) as i64;
    let mut q = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for c in 0..cols {
            q.push(nearest_with_parity(n_avg as f64 * v[(i, c)], parity));
        }
    }
    let mut out = Binarization {
        rows,
        cols,
        k,
        n_avg,
        q,
        max_entry_error: 0.0,
        operator_error: 0.0,
    };
    let diff = v - out.reconstruction();
    out.max_entry_error = diff.amax();
    out.operator_error = operator_norm(&diff)?;
    Ok(out)
}

/// Index map of the block matrix with `P` in block `(0, k-1)` and on the
/// block sub-diagonal: `(P1 x)_r = x_{σ(r)}`.
pub fn block_cycle_map(n: usize, k: usize) -> Vec<usize> {
    (0..n * k)
        .map(|r| {
            let (b, i) = (r / n, r % n);
            ((b + k - 1) % k) * n + (i + 1) % n
        })
        .collect()
}

/// Dense block cycle; full cycle exactly when `gcd(n, k) = 1`.
pub fn block_cycle_unchecked(n: usize, k: usize) -> Matrix {
    let sigma = block_cycle_map(n, k);
    Matrix::from_fn(n * k, n * k, |r, c| if sigma[r] == c { 1.0 } else { 0.0 })
}

pub fn block_cycle(n: usize, k: usize) -> Result<Matrix> {
    if n == 0 || k == 0 {
        return Err(Error::invalid("block cycle needs positive sizes"));
    }
    let g = gcd(n, k);
    if g != 1 {
        return Err(Error::invalid(format!(
            "block cycle with n = {n}, k = {k} is not a full cycle (gcd {g})"
        )));
    }
    Ok(block_cycle_unchecked(n, k))
}

/// A simple cycle reservoir: coupling `λ C` with `C` the `n_scr`-cycle
/// `(C x)_t = x_{t+1}` and an input matrix with entries in {-1, +1}.
#[derive(Debug, Clone)]
pub struct SCRSystem {
    n_scr: usize,
    n_c: usize,
    lambda: f64,
    input_bound: f64,
    input_dim: usize,
    /// Row-major `n_scr x m`.
    signs: Vec<i8>,
    readout: LinearReadout,
    k: usize,
    n_avg: usize,
    entry_error: f64,
    operator_error: f64,
}

impl SCRSystem {
    pub fn n_scr(&self) -> usize {
        self.n_scr
    }

    /// Dimension of the cycle approximation the reservoir was expanded from.
    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn input_bound(&self) -> f64 {
        self.input_bound
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn readout(&self) -> &LinearReadout {
        &self.readout
    }

    /// Number of averaged sign matrices.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_avg(&self) -> usize {
        self.n_avg
    }

    /// Max-entry error of the binarized cycle input matrix.
    pub fn entry_error(&self) -> f64 {
        self.entry_error
    }

    /// Operator-norm error of the binarized cycle input matrix.
    pub fn operator_error(&self) -> f64 {
        self.operator_error
    }

    pub fn input_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n_scr, self.input_dim, |t, c| {
            f64::from(self.signs[t * self.input_dim + c])
        })
    }

    /// Successor map of the coupling permutation.
    pub fn cycle_map(&self) -> Vec<usize> {
        (0..self.n_scr).map(|t| (t + 1) % self.n_scr).collect()
    }

    pub fn is_full_cycle(&self) -> bool {
        cycle_lengths(&self.cycle_map()).len() == 1
    }

    pub fn reservoir(&self) -> Result<LinearReservoir> {
        LinearReservoir::cycle(
            self.n_scr,
            self.lambda,
            self.input_matrix(),
            self.readout.clone(),
            self.input_bound,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        n_c: usize,
        lambda: f64,
        input_bound: f64,
        input_dim: usize,
        signs: Vec<i8>,
        readout: LinearReadout,
        (k, n_avg): (usize, usize),
        (entry_error, operator_error): (f64, f64),
    ) -> Result<Self> {
        let n_scr = signs.len() / input_dim.max(1);
        if input_dim == 0 || signs.len() != n_scr * input_dim || readout.state_dim() != n_scr {
            return Err(Error::invalid("inconsistent simple cycle reservoir dimensions"));
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::invalid("input signs must be ±1"));
        }
        if !(lambda > 0.0 && lambda < 1.0) || n_c == 0 || k == 0 || n_c * k != n_scr {
            return Err(Error::invalid(format!(
                "inconsistent simple cycle reservoir (n_scr {n_scr}, n_c {n_c}, k {k}, λ {lambda})"
            )));
        }
        Ok(Self {
            n_scr,
            n_c,
            lambda,
            input_bound,
            input_dim,
            signs,
            readout,
            k,
            n_avg,
            entry_error,
            operator_error,
        })
    }
}

/// Expands a cycle approximation into a simple cycle reservoir whose states
/// stay within `delta` of the cycle system's (after block averaging).
pub fn scr_construct(cyc: &CyclicApproximation, delta: f64) -> Result<SCRSystem> {
    scr_construct_capped(cyc, delta, DEFAULT_MAX_SCR_DIM)
}

pub fn scr_construct_capped(
    cyc: &CyclicApproximation,
    delta: f64,
    max_dim: usize,
) -> Result<SCRSystem> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {delta}")));
    }
    let lambda = cyc.lambda();
    let m_bound = cyc.input_bound();
    let n = cyc.n_c();
    let v_c = cyc.input_matrix();
    let bin = binarize(v_c, delta * (1.0 - lambda) / m_bound, n)?;
    let k = bin.k();
    let n_scr = n
        .checked_mul(k)
        .filter(|&s| s <= max_dim)
        .ok_or_else(|| {
            Error::ResourceLimit(format!(
                "simple cycle reservoir of dimension {n} x {k} exceeds the limit {max_dim}"
            ))
        })?;
    let m = v_c.ncols();

    // Relabel the block cycle along the orbit of index 0, turning it into
    // the standard ring.
    let mut signs = Vec::with_capacity(n_scr * m);
    let a_c = cyc.readout().matrix();
    let d = a_c.nrows();
    let zero_input = v_c.iter().all(|x| *x == 0.0);
    let mut readout = Matrix::zeros(d, n_scr);
    let scale = 1.0 / bin.n_avg() as f64;
    let mut g = 0usize;
    for t in 0..n_scr {
        if t > 0 && g == 0 {
            return Err(Error::numerical(
                "block cycle closed early; sizes are not coprime",
                t as f64,
            ));
        }
        let (b, i) = (g / n, g % n);
        for c in 0..m {
            signs.push(bin.sign(b + 1, i, c));
        }
        // A zero input coupling leaves the cycle system at rest; the zero
        // readout reproduces it exactly.
        if !zero_input {
            for r in 0..d {
                readout[(r, t)] = a_c[(r, i)] * scale;
            }
        }
        g = ((b + k - 1) % k) * n + (i + 1) % n;
    }
    if g != 0 {
        return Err(Error::numerical("block cycle did not close", n_scr as f64));
    }
    SCRSystem::from_parts(
        n,
        lambda,
        m_bound,
        m,
        signs,
        LinearReadout::composed_from(readout),
        (k, bin.n_avg()),
        (bin.max_entry_error(), bin.operator_error()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclic::cyclic_approximate;
    use crate::linalg::{is_full_cycle, random_orthogonal, Vector};
    use crate::reservoir::{output_distance, InputStream};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_executed_example() {
        let b = binarize(&Matrix::from_element(1, 1, 0.5), 0.25, 1).unwrap();
        assert_eq!((b.n_avg(), b.k(), b.count(0, 0)), (4, 3, 1));
        assert_eq!(b.reconstruction()[(0, 0)], 0.25);
        let signs: Vec<i8> = (1..=3).map(|j| b.sign(j, 0, 0)).collect();
        assert_eq!(signs, vec![1, 1, -1]);
        assert!(b.max_entry_error() <= 0.25);
    }

    #[test]
    fn sign_and_zero_matrices() {
        let v = Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let b = binarize(&v, 0.5, 3).unwrap();
        assert!(b.max_entry_error() <= 1.0 / b.n_avg() as f64);
        let z = binarize(&Matrix::zeros(3, 2), 0.1, 4).unwrap();
        for i in 0..3 {
            for c in 0..2 {
                assert!(z.count(i, c).abs() <= 1);
            }
        }
        assert!(z.max_entry_error() <= 1.0 / z.n_avg() as f64);
        assert!(binarize(&v, 0.0, 3).is_err());
    }

    #[test]
    fn parity_rounding() {
        assert_eq!(nearest_with_parity(2.0, 1), 1);
        assert_eq!(nearest_with_parity(-2.0, 1), -1);
        assert_eq!(nearest_with_parity(0.0, 1), -1);
        assert_eq!(nearest_with_parity(2.4, 0), 2);
        assert_eq!(nearest_with_parity(3.1, 0), 4);
        assert_eq!(nearest_with_parity(-3.0, 0), -2);
    }

    #[test]
    fn block_cycle_examples() {
        assert!(is_full_cycle(&block_cycle(3, 2).unwrap()));
        assert_eq!(block_cycle(3, 2).unwrap().nrows(), 6);
        match block_cycle(2, 2) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("gcd 2")),
            other => panic!("{other:?}"),
        }
        assert!(!is_full_cycle(&block_cycle_unchecked(2, 2)));
        assert_eq!(block_cycle(5, 1).unwrap(), crate::linalg::cycle_matrix(5).unwrap());
    }

    fn small_cycle_approx(seed: u64, scale: f64) -> CyclicApproximation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_orthogonal(4, seed).unwrap();
        let v = Matrix::from_fn(4, 1, |_, _| scale * (rng.random::<f64>() - 0.5));
        let a = Matrix::from_fn(1, 4, |_, _| rng.random::<f64>() - 0.5);
        let r = LinearReservoir::new(u * 0.6, v, LinearReadout::new(a).unwrap(), 1.0).unwrap();
        cyclic_approximate(&r, 0.3).unwrap()
    }

    fn stream(len: usize, seed: u64) -> InputStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (0..len)
            .map(|_| Vector::from_element(1, 2.0 * rng.random::<f64>() - 1.0))
            .collect();
        InputStream::new(s, 1.0).unwrap()
    }

    #[test]
    fn block_sum_identity_is_exact() {
        let cyc = small_cycle_approx(1, 0.2);
        let n = cyc.n_c();
        let bin = binarize(cyc.input_matrix(), 0.2, n).unwrap();
        let k = bin.k();
        let lam = cyc.lambda();
        // Unrelabeled big system (λ P1, [F_1; …; F_k]).
        let p1 = block_cycle(n, k).unwrap() * lam;
        let mut vbig = Matrix::zeros(n * k, 1);
        for b in 0..k {
            vbig.view_mut((b * n, 0), (n, 1)).copy_from(&bin.sign_matrix(b + 1));
        }
        let big = LinearReservoir::new(p1, vbig, LinearReadout::identity(n * k), 1.0).unwrap();
        let small = LinearReservoir::cycle(n, lam, bin.reconstruction(), LinearReadout::identity(n), 1.0).unwrap();
        let u = stream(20, 2);
        let xb = big.drive(&u, 0).unwrap();
        let xs = small.drive(&u, 0).unwrap();
        for (a, b) in xb.iter().zip(&xs) {
            let mut avg = Vector::zeros(n);
            for blk in 0..k {
                avg += a.rows(blk * n, n);
            }
            avg /= bin.n_avg() as f64;
            assert!((avg - b).amax() <= 1e-10);
        }
    }

    #[test]
    fn scr_is_close_to_cycle_system() {
        let cyc = small_cycle_approx(3, 0.3);
        let delta = 0.05;
        let scr = scr_construct(&cyc, delta).unwrap();
        assert_eq!(scr.n_scr(), cyc.n_c() * scr.k());
        assert!(scr.is_full_cycle());
        assert!(scr.signs().iter().all(|s| *s == 1 || *s == -1));
        let rs = scr.reservoir().unwrap();
        assert_eq!(rs.lambda(), cyc.lambda());
        let rc = cyc.reservoir().unwrap();
        let lip = cyc.readout().lipschitz().unwrap();
        for s in 0..5 {
            let gap = output_distance(&rc, &rs, &stream(200, 10 + s), 0).unwrap();
            assert!(gap <= lip * delta, "{gap}");
        }
    }

    #[test]
    fn zero_input_gives_zero_outputs() {
        let cyc = small_cycle_approx(4, 0.0);
        let scr = scr_construct(&cyc, 0.1).unwrap();
        let y = scr.reservoir().unwrap().run(&stream(50, 1), 0).unwrap();
        assert!(y.iter().all(|v| v.amax() == 0.0));
    }

    /// Oracle: count orbits of the index map directly.
    fn orbit_count(sigma: &[usize]) -> usize {
        let mut seen = vec![false; sigma.len()];
        let mut orbits = 0;
        for s in 0..sigma.len() {
            if !seen[s] {
                orbits += 1;
                let mut i = s;
                while !seen[i] {
                    seen[i] = true;
                    i = sigma[i];
                }
            }
        }
        orbits
    }

    #[test]
    fn lemma_dichotomy_small() {
        for n in 1..=6 {
            for k in 1..=6 {
                let full = orbit_count(&block_cycle_map(n, k)) == 1;
                assert_eq!(full, gcd(n, k) == 1, "n={n} k={k}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn reconstruction_within_grid(
            seed in any::<u64>(),
            rows in 1usize..9,
            cols in 1usize..5,
            delta in 0.01f64..1.0,
            n in 1usize..40,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = Matrix::from_fn(rows, cols, |_, _| 2.0 * rng.random::<f64>() - 1.0);
            let b = binarize(&v, delta, n).unwrap();
            prop_assert_eq!(gcd(b.k(), n), 1);
            prop_assert!(b.max_entry_error() <= 1.0 / b.n_avg() as f64 + 1e-15);
            prop_assert!(b.operator_error() <= delta + 1e-12);
            for i in 0..rows {
                for c in 0..cols {
                    prop_assert!(b.count(i, c).unsigned_abs() as usize <= b.k());
                    let sum: i64 = (1..=b.k()).map(|j| i64::from(b.sign(j, i, c))).sum();
                    prop_assert_eq!(sum, b.count(i, c));
                }
            }
        }
    }
}
