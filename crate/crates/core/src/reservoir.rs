//! Linear reservoirs `x_t = W x_{t-1} + V u_t`, `y_t = A x_t`.

use nalgebra::linalg::{Cholesky, SVD};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, operator_norm, CyclePermutation, Matrix, Vector};

/// Target truncation error of [`LinearReservoir::default_washout`].
pub const DEFAULT_WASHOUT_TOL: f64 = 1e-12;

/// Dynamic coupling. Cycle couplings are applied as index shifts and never
/// materialized, which keeps large cycle reservoirs cheap to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    Dense(Matrix),
    /// `weight * P` with `P` the `size`-cycle `(P x)_i = x_{i+1}`.
    Cycle { size: usize, weight: f64 },
}

impl Coupling {
    pub fn dim(&self) -> usize {
        match self {
            Coupling::Dense(w) => w.nrows(),
            Coupling::Cycle { size, .. } => *size,
        }
    }

    pub fn norm(&self) -> Result<f64> {
        match self {
            Coupling::Dense(w) => operator_norm(w),
            Coupling::Cycle { weight, .. } => Ok(weight.abs()),
        }
    }

    /// Dense copy. Callers are expected to keep this to small dimensions.
    pub fn to_dense(&self) -> Matrix {
        match self {
            Coupling::Dense(w) => w.clone(),
            Coupling::Cycle { size, weight } => {
                let n = *size;
                Matrix::from_fn(n, n, |i, j| if (i + 1) % n == j { *weight } else { 0.0 })
            }
        }
    }

    /// `out = W x + add`.
    fn apply_into(&self, x: &[f64], add: &[f64], out: &mut [f64]) {
        match self {
            Coupling::Dense(w) => {
                let n = w.nrows();
                out.copy_from_slice(add);
                // Column-major: accumulate one column at a time.
                for (j, xj) in x.iter().enumerate() {
                    if *xj == 0.0 {
                        continue;
                    }
                    let col = &w.as_slice()[j * n..(j + 1) * n];
                    for (o, c) in out.iter_mut().zip(col) {
                        *o += c * xj;
                    }
                }
            }
            Coupling::Cycle { size, weight } => {
                // Size was validated at construction.
                CyclePermutation::new(*size)
                    .expect("cycle size >= 2")
                    .shift_into(*weight, x, add, out);
            }
        }
    }
}

/// `h(x) = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReadout {
    matrix: Matrix,
    composed: bool,
}

impl LinearReadout {
    pub fn new(matrix: Matrix) -> Result<Self> {
        ensure_finite(&matrix, "readout")?;
        Ok(Self {
            matrix,
            composed: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: Matrix::identity(n, n),
            composed: false,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Whether this readout was obtained by composing with a state transform.
    pub fn is_composed(&self) -> bool {
        self.composed
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn lipschitz(&self) -> Result<f64> {
        operator_norm(&self.matrix)
    }

    /// `x ↦ A (L x)`.
    pub fn compose(&self, l: &Matrix) -> Result<Self> {
        if l.nrows() != self.state_dim() {
            return Err(Error::invalid(format!(
                "cannot compose a readout on dimension {} with a {}x{} map",
                self.state_dim(),
                l.nrows(),
                l.ncols()
            )));
        }
        Ok(Self {
            matrix: &self.matrix * l,
            composed: true,
        })
    }

    pub(crate) fn composed_from(matrix: Matrix) -> Self {
        Self {
            matrix,
            composed: true,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vector {
        let d = self.output_dim();
        let mut y = Vector::zeros(d);
        self.apply_into(x, y.as_mut_slice());
        y
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let d = self.output_dim();
        y.fill(0.0);
        for (j, xj) in x.iter().enumerate() {
            if *xj == 0.0 {
                continue;
            }
            let col = &self.matrix.as_slice()[j * d..(j + 1) * d];
            for (o, a) in y.iter_mut().zip(col) {
                *o += a * xj;
            }
        }
    }
}

/// A finite input sequence with a uniform Euclidean bound.
#[derive(Debug, Clone, PartialEq)]
pub struct InputStream {
    samples: Vec<Vector>,
    bound: f64,
}

impl InputStream {
    pub fn new(samples: Vec<Vector>, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::invalid(format!("input bound must be positive, got {bound}")));
        }
        let m = samples.first().map_or(0, |s| s.len());
        for (t, s) in samples.iter().enumerate() {
            if s.len() != m {
                return Err(Error::invalid(format!(
                    "sample {t} has dimension {}, expected {m}",
                    s.len()
                )));
            }
            let norm = s.norm();
            if !norm.is_finite() || norm > bound {
                return Err(Error::invalid(format!(
                    "sample {t} has norm {norm} above the bound {bound}"
                )));
            }
        }
        Ok(Self { samples, bound })
    }

    /// Scalar stream; the bound is the largest magnitude (or 1 if all zero).
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let bound = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let bound = if bound > 0.0 { bound } else { 1.0 };
        Self::new(values.iter().map(|&v| Vector::from_element(1, v)).collect(), bound)
    }

    pub fn samples(&self) -> &[Vector] {
        &self.samples
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }
}

/// `R = (W, V, h)` with `||W|| < 1` and inputs bounded by `M`.
#[derive(Debug, Clone)]
pub struct LinearReservoir {
    coupling: Coupling,
    input: Matrix,
    readout: LinearReadout,
    lambda: f64,
    input_bound: f64,
}

impl LinearReservoir {
    pub fn new(w: Matrix, v: Matrix, readout: LinearReadout, input_bound: f64) -> Result<Self> {
        ensure_finite(&w, "coupling")?;
        if !w.is_square() || w.nrows() == 0 {
            return Err(Error::invalid(format!(
                "coupling must be a non-empty square matrix, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        Self::with_coupling(Coupling::Dense(w), v, readout, input_bound)
    }

    /// Reservoir with coupling `weight * P`, `P` the `size`-cycle.
    pub fn cycle(
        size: usize,
        weight: f64,
        v: Matrix,
        readout: LinearReadout,
        input_bound: f64,
    ) -> Result<Self> {
        CyclePermutation::new(size)?;
        if !weight.is_finite() {
            return Err(Error::invalid("cycle weight must be finite"));
        }
        Self::with_coupling(Coupling::Cycle { size, weight }, v, readout, input_bound)
    }

    pub fn with_coupling(
        coupling: Coupling,
        v: Matrix,
        readout: LinearReadout,
        input_bound: f64,
    ) -> Result<Self> {
        ensure_finite(&v, "input matrix")?;
        let n = coupling.dim();
        if v.nrows() != n || v.ncols() == 0 {
            return Err(Error::invalid(format!(
                "input matrix is {}x{}, expected {n} rows and at least one column",
                v.nrows(),
                v.ncols()
            )));
        }
        if readout.state_dim() != n {
            return Err(Error::invalid(format!(
                "readout acts on dimension {}, state dimension is {n}",
                readout.state_dim()
            )));
        }
        if !(input_bound.is_finite() && input_bound > 0.0) {
            return Err(Error::invalid(format!(
                "input bound must be positive, got {input_bound}"
            )));
        }
        let lambda = coupling.norm()?;
        if lambda >= 1.0 {
            return Err(Error::invalid(format!(
                "coupling norm {lambda} is not below 1"
            )));
        }
        Ok(Self {
            coupling,
            input: v,
            readout,
            lambda,
            input_bound,
        })
    }

    /// Replaces the computed coupling norm by a value known in closed form,
    /// e.g. `λ` for `λ U` with `U` orthogonal. The two must agree to 1e-10.
    pub(crate) fn with_exact_norm(mut self, lambda: f64) -> Result<Self> {
        if (self.lambda - lambda).abs() > 1e-10 || !(0.0..1.0).contains(&lambda) {
            return Err(Error::numerical(
                "coupling norm disagrees with its closed form",
                (self.lambda - lambda).abs(),
            ));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn input_matrix(&self) -> &Matrix {
        &self.input
    }

    pub fn readout(&self) -> &LinearReadout {
        &self.readout
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn input_bound(&self) -> f64 {
        self.input_bound
    }

    pub fn state_dim(&self) -> usize {
        self.coupling.dim()
    }

    pub fn input_dim(&self) -> usize {
        self.input.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.readout.output_dim()
    }

    pub fn with_readout(&self, readout: LinearReadout) -> Result<Self> {
        Self::with_coupling(self.coupling.clone(), self.input.clone(), readout, self.input_bound)
    }

    /// `M ||V|| / (1 - λ)`, the uniform bound on state norms.
    pub fn state_bound(&self) -> Result<f64> {
        Ok(self.input_bound * operator_norm(&self.input)? / (1.0 - self.lambda))
    }

    /// Smallest `w` with `λ^w M ||V|| / (1 - λ) < 1e-12`.
    pub fn default_washout(&self) -> Result<usize> {
        washout_for(self.lambda, self.state_bound()?, DEFAULT_WASHOUT_TOL)
    }

    fn check_stream(&self, u: &InputStream, washout: usize) -> Result<()> {
        if u.dim() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input stream has dimension {}, reservoir expects {}",
                u.dim(),
                self.input_dim()
            )));
        }
        if washout >= u.len() {
            return Err(Error::invalid(format!(
                "washout {washout} must be shorter than the stream ({} samples)",
                u.len()
            )));
        }
        Ok(())
    }

    /// Runs the recursion from `x_0 = 0`, calling `f(t, x_t)` for every
    /// post-washout step (`t` counted from 0 over the whole stream).
    pub fn for_each_state(
        &self,
        u: &InputStream,
        washout: usize,
        mut f: impl FnMut(usize, &[f64]),
    ) -> Result<()> {
        self.check_stream(u, washout)?;
        let mut stepper = Stepper::new(self);
        for (t, ut) in u.samples().iter().enumerate() {
            let x = stepper.step(ut.as_slice());
            if t >= washout {
                f(t, x);
            }
        }
        Ok(())
    }

    /// Post-washout states.
    pub fn drive(&self, u: &InputStream, washout: usize) -> Result<Vec<Vector>> {
        let mut out = Vec::with_capacity(u.len().saturating_sub(washout));
        self.for_each_state(u, washout, |_, x| out.push(Vector::from_column_slice(x)))?;
        Ok(out)
    }

    /// Post-washout outputs `y_t = h(x_t)`.
    pub fn run(&self, u: &InputStream, washout: usize) -> Result<Vec<Vector>> {
        let mut out = Vec::with_capacity(u.len().saturating_sub(washout));
        self.for_each_state(u, washout, |_, x| out.push(self.readout.apply(x)))?;
        Ok(out)
    }
}

/// Holds the two state buffers of a running reservoir.
struct Stepper<'a> {
    r: &'a LinearReservoir,
    x: Vec<f64>,
    next: Vec<f64>,
    drive: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(r: &'a LinearReservoir) -> Self {
        let n = r.state_dim();
        Self {
            r,
            x: vec![0.0; n],
            next: vec![0.0; n],
            drive: vec![0.0; n],
        }
    }

    fn step(&mut self, u: &[f64]) -> &[f64] {
        let v = &self.r.input;
        let n = v.nrows();
        self.drive.fill(0.0);
        for (j, uj) in u.iter().enumerate() {
            let col = &v.as_slice()[j * n..(j + 1) * n];
            for (d, c) in self.drive.iter_mut().zip(col) {
                *d += c * uj;
            }
        }
        self.r.coupling.apply_into(&self.x, &self.drive, &mut self.next);
        std::mem::swap(&mut self.x, &mut self.next);
        &self.x
    }
}

/// Smallest `w` with `λ^w · scale < tol`.
pub fn washout_for(lambda: f64, scale: f64, tol: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::invalid(format!("washout needs 0 <= λ < 1, got {lambda}")));
    }
    if scale < tol {
        return Ok(0);
    }
    if lambda == 0.0 {
        return Ok(1);
    }
    let mut w = ((tol / scale).ln() / lambda.ln()).floor().max(0.0) as usize;
    while lambda.powi(w as i32) * scale >= tol {
        w += 1;
    }
    while w > 0 && lambda.powi(w as i32 - 1) * scale < tol {
        w -= 1;
    }
    Ok(w)
}

/// `sup_t ||y_t - y'_t||` over post-washout steps. States are streamed, so
/// memory stays proportional to the state dimensions.
pub fn output_distance(
    r1: &LinearReservoir,
    r2: &LinearReservoir,
    u: &InputStream,
    washout: usize,
) -> Result<f64> {
    if r1.input_dim() != r2.input_dim() {
        return Err(Error::invalid(format!(
            "input dimensions differ ({} vs {})",
            r1.input_dim(),
            r2.input_dim()
        )));
    }
    if r1.output_dim() != r2.output_dim() {
        return Err(Error::invalid(format!(
            "output dimensions differ ({} vs {})",
            r1.output_dim(),
            r2.output_dim()
        )));
    }
    r1.check_stream(u, washout)?;
    let d = r1.output_dim();
    let mut s1 = Stepper::new(r1);
    let mut s2 = Stepper::new(r2);
    let mut y1 = vec![0.0; d];
    let mut y2 = vec![0.0; d];
    let mut sup = 0.0f64;
    for (t, ut) in u.samples().iter().enumerate() {
        let x1 = s1.step(ut.as_slice());
        let x2 = s2.step(ut.as_slice());
        if t < washout {
            continue;
        }
        r1.readout.apply_into(x1, &mut y1);
        r2.readout.apply_into(x2, &mut y2);
        let gap = y1
            .iter()
            .zip(&y2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        sup = sup.max(gap);
    }
    Ok(sup)
}

/// Impulse response `h_s = A W^s V` (each `d x m`) for `s < len`.
pub fn markov_parameters(r: &LinearReservoir, len: usize) -> Vec<Matrix> {
    let (n, m, d) = (r.state_dim(), r.input_dim(), r.output_dim());
    let mut out = vec![Matrix::zeros(d, m); len];
    let zeros = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut y = vec![0.0; d];
    for j in 0..m {
        x.copy_from_slice(r.input.column(j).as_slice());
        for h in out.iter_mut() {
            r.readout.apply_into(&x, &mut y);
            for (i, yi) in y.iter().enumerate() {
                h[(i, j)] = *yi;
            }
            r.coupling.apply_into(&x, &zeros, &mut next);
            std::mem::swap(&mut x, &mut next);
        }
    }
    out
}

/// [`output_distance`] for several streams at once.
///
/// When the streams are short compared with the state dimensions, the
/// outputs are evaluated as convolutions with the difference of the two
/// impulse responses instead of by stepping both recursions; the two agree
/// up to rounding. Results are in stream order.
pub fn output_distances(
    r1: &LinearReservoir,
    r2: &LinearReservoir,
    streams: &[InputStream],
    washout: usize,
) -> Result<Vec<f64>> {
    let len = streams.iter().map(InputStream::len).max().unwrap_or(0);
    let (m, d) = (r1.input_dim(), r1.output_dim());
    let step_cost = (r1.state_dim() + r2.state_dim()) * (m + d + 2);
    if streams.len() < 2 || len * d * m >= step_cost {
        return streams
            .iter()
            .map(|u| output_distance(r1, r2, u, washout))
            .collect();
    }
    if r1.input_dim() != r2.input_dim() || r1.output_dim() != r2.output_dim() {
        return Err(Error::invalid("input or output dimensions differ"));
    }
    for u in streams {
        r1.check_stream(u, washout)?;
    }
    let h1 = markov_parameters(r1, len);
    let h2 = markov_parameters(r2, len);
    let kernel: Vec<Matrix> = h1.iter().zip(&h2).map(|(a, b)| a - b).collect();
    let mut e = Vector::zeros(d);
    Ok(streams
        .iter()
        .map(|u| {
            let samples = u.samples();
            let mut sup = 0.0f64;
            for t in washout..samples.len() {
                e.fill(0.0);
                for (s, k) in kernel[..=t].iter().enumerate() {
                    e.gemv(1.0, k, &samples[t - s], 1.0);
                }
                sup = sup.max(e.norm());
            }
            sup
        })
        .collect())
}

/// Ridge regression readout `A = Y^T X (X^T X + ridge I)^{-1}`.
///
/// The normal equations are solved by Cholesky. If that fails and `ridge > 0`,
/// an SVD pseudoinverse is used instead; with `ridge == 0` a rank-deficient
/// normal matrix is reported as a numerical failure.
pub fn train_ridge(states: &[Vector], targets: &[Vector], ridge: f64) -> Result<LinearReadout> {
    if states.is_empty() || states.len() != targets.len() {
        return Err(Error::invalid(format!(
            "ridge regression needs equally many states and targets (got {} and {})",
            states.len(),
            targets.len()
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::invalid(format!("ridge must be non-negative, got {ridge}")));
    }
    let n = states[0].len();
    let d = targets[0].len();
    if n == 0 || d == 0 {
        return Err(Error::invalid("states and targets must be non-empty vectors"));
    }
    let mut gram = Matrix::zeros(n, n);
    let mut cross = Matrix::zeros(n, d);
    for (x, y) in states.iter().zip(targets) {
        if x.len() != n || y.len() != d {
            return Err(Error::invalid("inconsistent state or target dimensions"));
        }
        if !(x.iter().all(|v| v.is_finite()) && y.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("states and targets must be finite"));
        }
        gram.ger(1.0, x, x, 1.0);
        cross.ger(1.0, x, y, 1.0);
    }
    for i in 0..n {
        gram[(i, i)] += ridge;
    }

    let solution = match Cholesky::new(gram.clone()) {
        Some(ch) => ch.solve(&cross),
        None => {
            let svd = SVD::try_new(gram.clone(), true, true, f64::EPSILON, 0)
                .ok_or_else(|| Error::numerical("SVD of the normal matrix did not converge", f64::NAN))?;
            let smax = svd.singular_values.max();
            let cutoff = smax * n as f64 * f64::EPSILON;
            if ridge == 0.0 && svd.singular_values.min() <= cutoff {
                return Err(Error::numerical(
                    "normal matrix is singular and no ridge was given",
                    svd.singular_values.min(),
                ));
            }
            svd.solve(&cross, cutoff)
                .map_err(|e| Error::numerical(e.to_string(), f64::NAN))?
        }
    };

    let residual = (&gram * &solution - &cross).norm();
    let scale = gram.norm() * solution.norm() + cross.norm();
    if scale > 0.0 && residual > 1e-8 * scale {
        return Err(Error::numerical(
            "ridge normal equations are not satisfied",
            residual / scale,
        ));
    }
    LinearReadout::new(solution.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, m: usize, d: usize, lambda: f64, seed: u64) -> LinearReservoir {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Matrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let w = &w * (lambda / operator_norm(&w).unwrap());
        let v = Matrix::from_fn(n, m, |_, _| rng.random::<f64>() - 0.5);
        let a = Matrix::from_fn(d, n, |_, _| rng.random::<f64>() - 0.5);
        LinearReservoir::new(w, v, LinearReadout::new(a).unwrap(), 1.0).unwrap()
    }

    fn random_stream(len: usize, m: usize, seed: u64) -> InputStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..len)
            .map(|_| {
                let v = Vector::from_fn(m, |_, _| rng.random::<f64>() - 0.5);
                let norm = v.norm();
                if norm > 1.0 {
                    v / norm
                } else {
                    v
                }
            })
            .collect();
        InputStream::new(samples, 1.0).unwrap()
    }

    #[test]
    fn convolution_matches_recursion() {
        // Large cycle, short streams: the convolution path is taken.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let v = Matrix::from_fn(n, 2, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
        let a = Matrix::from_fn(3, n, |_, _| rng.random::<f64>() - 0.5);
        let ring = LinearReservoir::cycle(n, 0.7, v, LinearReadout::new(a).unwrap(), 1.0).unwrap();
        let other = ring.with_readout(LinearReadout::new(Matrix::from_fn(3, n, |_, _| rng.random::<f64>() - 0.5)).unwrap()).unwrap();
        let streams: Vec<_> = (0..3).map(|s| random_stream(30, 2, s)).collect();
        let fast = output_distances(&ring, &other, &streams, 5).unwrap();
        for (u, f) in streams.iter().zip(&fast) {
            let slow = output_distance(&ring, &other, u, 5).unwrap();
            assert!((f - slow).abs() <= 1e-10 * slow.max(1.0), "{f} {slow}");
        }
        let h = markov_parameters(&ring, 3);
        let direct = ring.readout().matrix() * ring.coupling().to_dense().pow(2) * ring.input_matrix();
        assert!((&h[2] - direct).amax() <= 1e-12);
    }

    #[test]
    fn zero_input_gives_zero_states() {
        let r = random_system(4, 2, 1, 0.8, 1);
        let u = InputStream::new(vec![Vector::zeros(2); 20], 1.0).unwrap();
        assert!(r.drive(&u, 0).unwrap().iter().all(|x| x.amax() == 0.0));
    }

    #[test]
    fn memoryless_and_geometric_cases() {
        let v = Matrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let r = LinearReservoir::new(Matrix::zeros(2, 2), v.clone(), LinearReadout::identity(2), 1.0).unwrap();
        let u = InputStream::from_scalars(&[0.5, -1.0, 0.25]).unwrap();
        for (x, ut) in r.drive(&u, 0).unwrap().iter().zip(u.samples()) {
            assert_eq!(x, &(&v * ut));
        }

        let r = LinearReservoir::new(
            Matrix::from_element(1, 1, 0.5),
            Matrix::from_element(1, 1, 1.0),
            LinearReadout::identity(1),
            1.0,
        )
        .unwrap();
        let u = InputStream::from_scalars(&[1.0; 60]).unwrap();
        let last = r.drive(&u, 0).unwrap().pop().unwrap();
        assert!((last[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn readout_cases() {
        let r = random_system(3, 1, 2, 0.7, 2);
        let u = random_stream(30, 1, 3);
        let zero = r.with_readout(LinearReadout::new(Matrix::zeros(2, 3)).unwrap()).unwrap();
        assert!(zero.run(&u, 5).unwrap().iter().all(|y| y.amax() == 0.0));
        let ident = r.with_readout(LinearReadout::identity(3)).unwrap();
        assert_eq!(ident.run(&u, 5).unwrap(), r.drive(&u, 5).unwrap());

        let l = Matrix::from_fn(3, 3, |i, j| (i + 2 * j) as f64 * 0.1);
        let composed = r.readout().compose(&l).unwrap();
        assert!(composed.is_composed());
        let x = [0.3, -0.1, 0.7];
        let direct = r.readout().matrix() * (&l * Vector::from_column_slice(&x));
        assert!((composed.apply(&x) - direct).amax() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let r = random_system(3, 2, 1, 0.5, 4);
        let u = random_stream(10, 1, 5);
        assert!(matches!(r.drive(&u, 0), Err(Error::InvalidInput(_))));
        let u = random_stream(10, 2, 5);
        assert!(r.drive(&u, 10).is_err());
        let other = random_system(3, 2, 2, 0.5, 6);
        assert!(matches!(output_distance(&r, &other, &u, 0), Err(Error::InvalidInput(_))));
        assert!(LinearReservoir::new(Matrix::identity(2, 2), Matrix::zeros(2, 1), LinearReadout::identity(2), 1.0).is_err());
    }

    #[test]
    fn drive_matches_truncated_series() {
        let r = random_system(5, 2, 1, 0.9, 7);
        let u = random_stream(50, 2, 8);
        let states = r.drive(&u, 0).unwrap();
        let w = r.coupling().to_dense();
        for t in 0..50 {
            let mut want = Vector::zeros(5);
            let mut wk = Matrix::identity(5, 5);
            for k in 0..=t {
                want += &wk * r.input_matrix() * &u.samples()[t - k];
                wk = &w * wk;
            }
            assert!((&states[t] - want).amax() <= 1e-10);
        }
    }

    #[test]
    fn cycle_coupling_matches_dense() {
        let v = Matrix::from_fn(6, 1, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        let a = LinearReadout::new(Matrix::from_fn(1, 6, |_, j| j as f64)).unwrap();
        let cyc = LinearReservoir::cycle(6, 0.7, v.clone(), a.clone(), 1.0).unwrap();
        let dense = LinearReservoir::new(cyc.coupling().to_dense(), v, a, 1.0).unwrap();
        assert!((cyc.lambda() - 0.7).abs() < 1e-15);
        let u = random_stream(40, 1, 9);
        assert!(output_distance(&cyc, &dense, &u, 0).unwrap() < 1e-13);
    }

    #[test]
    fn similarity_preserves_outputs() {
        let r = random_system(5, 1, 2, 0.8, 10);
        let s = random_orthogonal(5, 11).unwrap();
        let w2 = s.transpose() * r.coupling().to_dense() * &s;
        let v2 = s.transpose() * r.input_matrix();
        let h2 = r.readout().compose(&s).unwrap();
        let r2 = LinearReservoir::new(w2, v2, h2, 1.0).unwrap();
        let u = random_stream(200, 1, 12);
        assert!(output_distance(&r, &r2, &u, 0).unwrap() <= 1e-10);
        assert_eq!(output_distance(&r, &r, &u, 0).unwrap(), 0.0);
    }

    #[test]
    fn scaled_readout_distance_is_output_sup() {
        let r = random_system(4, 1, 1, 0.6, 13);
        let doubled = r.with_readout(LinearReadout::new(r.readout().matrix() * 2.0).unwrap()).unwrap();
        let u = random_stream(100, 1, 14);
        let sup = r.run(&u, 3).unwrap().iter().map(|y| y.norm()).fold(0.0, f64::max);
        let got = output_distance(&r, &doubled, &u, 3).unwrap();
        assert!((got - sup).abs() <= 1e-14 * sup.max(1.0));
    }

    #[test]
    fn ridge_exact_fit_and_zero_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let xs: Vec<Vector> = (0..20).map(|_| Vector::from_fn(4, |_, _| rng.random::<f64>())).collect();
        let a = train_ridge(&xs, &xs, 0.0).unwrap();
        assert!((a.matrix() - Matrix::identity(4, 4)).amax() < 1e-8);
        let zeros = vec![Vector::zeros(2); 20];
        assert_eq!(train_ridge(&xs, &zeros, 1e-3).unwrap().matrix(), &Matrix::zeros(2, 4));
    }

    #[test]
    fn ridge_matches_normal_equation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let t = 40;
        let x = Matrix::from_fn(t, 3, |_, _| rng.random::<f64>() - 0.5);
        let y = Matrix::from_fn(t, 2, |_, _| rng.random::<f64>() - 0.5);
        let ridge = 0.1;
        // Oracle: explicit inverse via LU.
        let want = y.transpose() * &x * (x.transpose() * &x + Matrix::identity(3, 3) * ridge).try_inverse().unwrap();
        let states: Vec<Vector> = x.row_iter().map(|r| r.transpose()).collect();
        let targets: Vec<Vector> = y.row_iter().map(|r| r.transpose()).collect();
        let got = train_ridge(&states, &targets, ridge).unwrap();
        assert!((got.matrix() - want).amax() <= 1e-8);
    }

    #[test]
    fn ridge_singular_cases() {
        let xs = vec![Vector::from_vec(vec![1.0, 1.0]); 5];
        let ys = vec![Vector::from_vec(vec![2.0]); 5];
        assert!(matches!(train_ridge(&xs, &ys, 0.0), Err(Error::NumericalFailure { .. })));
        let a = train_ridge(&xs, &ys, 1e-6).unwrap();
        assert!((a.apply(&[1.0, 1.0])[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn washout_formula() {
        // 0.5^w * 8 < 1e-12 first at w = 43.
        assert_eq!(washout_for(0.5, 8.0, 1e-12).unwrap(), 43);
        assert_eq!(washout_for(0.0, 3.0, 1e-12).unwrap(), 1);
        assert!(washout_for(1.0, 1.0, 1e-12).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn states_are_bounded(seed in any::<u64>()) {
            let r = random_system(4, 2, 1, 0.85, seed);
            let u = random_stream(150, 2, seed ^ 1);
            let bound = r.state_bound().unwrap();
            for x in r.drive(&u, 0).unwrap() {
                prop_assert!(x.norm() <= bound * (1.0 + 1e-12));
            }
        }

        #[test]
        fn washout_truncation_is_bounded(seed in any::<u64>(), w in 1usize..40) {
            let r = random_system(4, 1, 1, 0.8, seed);
            let u = random_stream(200, 1, seed ^ 2);
            // The longer run starts from zero `w` steps later; compare the
            // common tail.
            let full = r.drive(&u, 2 * w).unwrap();
            let late = InputStream::new(u.samples()[w..].to_vec(), 1.0).unwrap();
            let shifted = r.drive(&late, w).unwrap();
            let bound = r.lambda().powi(w as i32) * r.state_bound().unwrap();
            for (a, b) in full.iter().zip(&shifted) {
                prop_assert!((a - b).norm() <= bound * (1.0 + 1e-9) + 1e-14);
            }
        }

        #[test]
        fn distance_is_a_pseudometric(seed in any::<u64>()) {
            let r1 = random_system(3, 1, 1, 0.7, seed);
            let r2 = random_system(3, 1, 1, 0.7, seed ^ 3);
            let r3 = random_system(4, 1, 1, 0.7, seed ^ 4);
            let u = random_stream(80, 1, seed ^ 5);
            let d12 = output_distance(&r1, &r2, &u, 0).unwrap();
            let d21 = output_distance(&r2, &r1, &u, 0).unwrap();
            let d13 = output_distance(&r1, &r3, &u, 0).unwrap();
            let d32 = output_distance(&r3, &r2, &u, 0).unwrap();
            prop_assert_eq!(d12, d21);
            prop_assert!(d12 <= d13 + d32 + 1e-12);
        }
    }
}
