use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{canonical_block_matrix, direct_sum, rotation, Matrix};

/// Candidate cycle dimensions above this are refused.
pub const DEFAULT_MAX_CYCLE_DIM: usize = 50_000_000;

/// `|e^{ia} - e^{ib}|`.
pub fn chord(a: f64, b: f64) -> f64 {
    2.0 * ((a - b) / 2.0).sin().abs()
}

/// Smallest `l0` with `π / l0 < arccos(1 - δ²/2)`, i.e. `|1 - e^{iπ/l0}| < δ`.
pub fn l0_bound(delta: f64) -> Result<usize> {
    if !(delta > 0.0) || delta.is_nan() {
        return Err(Error::invalid(format!("tolerance must be positive, got {delta}")));
    }
    if delta >= 2.0 {
        return Ok(2);
    }
    // arccos(1 - δ²/2) = 2 arcsin(δ/2), which stays accurate for tiny δ.
    let x = PI / (2.0 * (delta / 2.0).asin());
    if !x.is_finite() || x > 1e15 {
        return Err(Error::ResourceLimit(format!(
            "tolerance {delta:e} needs more than 1e15 roots of unity"
        )));
    }
    // The slack absorbs rounding when x is an exact integer (e.g. δ = √2).
    Ok((x + 1e-9).floor() as usize + 1)
}

/// `n1 = 2 l0 (k + 1)`, the guaranteed cycle dimension for `k` blocks.
pub fn theoretical_dimension(k: usize, delta: f64) -> Result<usize> {
    let l0 = l0_bound(delta)?;
    l0.checked_mul(2 * (k + 1))
        .ok_or_else(|| Error::ResourceLimit("theoretical cycle dimension overflows".into()))
}

/// Assignment of angles to distinct roots `2π a / n'`, `0 < a < n'/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootMatching {
    pub n_prime: usize,
    pub angles: Vec<f64>,
    /// `roots[i]` is the integer `a` matched to `angles[i]`.
    pub roots: Vec<usize>,
    pub delta: f64,
    /// Set when a lone `(+1, -1)` eigenvalue pair of the source is mapped
    /// onto the cycle's own `+1` and `-1`, so the completion omits them.
    pub pm_pair_matched: bool,
}

impl RootMatching {
    pub fn root_angle(&self, i: usize) -> f64 {
        2.0 * PI * self.roots[i] as f64 / self.n_prime as f64
    }

    /// Largest `|e^{iθ} - e^{iβ}|` over matched pairs.
    pub fn max_error(&self) -> f64 {
        (0..self.angles.len())
            .map(|i| chord(self.angles[i], self.root_angle(i)))
            .fold(0.0, f64::max)
    }

    /// Integers `0 < a < n'/2` not used by the matching, ascending.
    pub fn unmatched_roots(&self) -> Vec<usize> {
        let mut used = vec![false; self.n_prime / 2];
        for &a in &self.roots {
            used[a] = true;
        }
        (1..self.n_prime / 2).filter(|&a| !used[a]).collect()
    }
}

fn check_dimension(n_prime: usize) -> Result<()> {
    if n_prime < 4 || n_prime % 2 != 0 {
        return Err(Error::invalid(format!(
            "cycle dimension must be even and at least 4, got {n_prime}"
        )));
    }
    Ok(())
}

fn check_angles(angles: &[f64]) -> Result<()> {
    if let Some(t) = angles.iter().find(|t| !(0.0..=PI).contains(*t)) {
        return Err(Error::invalid(format!("angle {t} outside [0, π]")));
    }
    Ok(())
}

/// Roots `a` with `chord(θ, 2πa/n') < δ`, ascending.
fn candidates(theta: f64, n_prime: usize, delta: f64) -> impl Iterator<Item = usize> {
    let half = n_prime / 2;
    let step = 2.0 * PI / n_prime as f64;
    let width = if delta >= 2.0 {
        PI
    } else {
        2.0 * (delta / 2.0).asin()
    };
    let lo = ((theta - width) / step).floor().max(1.0) as usize;
    let hi = (((theta + width) / step).ceil() as usize).min(half.saturating_sub(1));
    (lo..=hi).filter(move |&a| a >= 1 && chord(theta, a as f64 * step) < delta)
}

/// Maximum bipartite matching (Hopcroft–Karp). `adj[l]` lists the right
/// vertices adjacent to left vertex `l`; returns the partner of each left
/// vertex.
pub fn maximum_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    const FREE: usize = usize::MAX;
    let n_left = adj.len();
    let mut left = vec![FREE; n_left];
    let mut right = vec![FREE; n_right];
    let mut dist = vec![0usize; n_left];

    loop {
        // BFS layers from free left vertices.
        let mut queue = VecDeque::new();
        for l in 0..n_left {
            if left[l] == FREE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let next = right[r];
                if next == FREE {
                    found = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }
        let mut progressed = false;
        for l in 0..n_left {
            if left[l] == FREE && augment(l, adj, &mut left, &mut right, &mut dist) {
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    left.into_iter()
        .map(|r| if r == FREE { None } else { Some(r) })
        .collect()
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    left: &mut [usize],
    right: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &r in &adj[l] {
        let next = right[r];
        if next == usize::MAX
            || (dist[next] == dist[l] + 1 && augment(next, adj, left, right, dist))
        {
            left[l] = r;
            right[r] = l;
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}

/// Matches every angle to a distinct root of unity of order `n_prime`
/// within chord distance `delta`, or returns `None` if impossible.
pub fn match_roots(angles: &[f64], n_prime: usize, delta: f64) -> Result<Option<RootMatching>> {
    check_dimension(n_prime)?;
    check_angles(angles)?;
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {delta}")));
    }
    Ok(match_unchecked(angles, n_prime, delta))
}

fn match_unchecked(angles: &[f64], n_prime: usize, delta: f64) -> Option<RootMatching> {
    if angles.len() > n_prime / 2 - 1 {
        return None;
    }
    let adj: Vec<Vec<usize>> = angles
        .iter()
        .map(|&t| candidates(t, n_prime, delta).collect())
        .collect();
    if adj.iter().any(Vec::is_empty) {
        return None;
    }
    let matched = maximum_matching(&adj, n_prime / 2);
    let roots: Option<Vec<usize>> = matched.into_iter().collect();
    roots.map(|roots| RootMatching {
        n_prime,
        angles: angles.to_vec(),
        roots,
        delta,
        pm_pair_matched: false,
    })
}

/// Cheap necessary condition: every angle has at least one candidate root.
fn every_angle_has_a_root(angles: &[f64], n_prime: usize, delta: f64) -> bool {
    angles
        .iter()
        .all(|&t| candidates(t, n_prime, delta).next().is_some())
}

/// Smallest even `n' >= max(2 len + 2, 4)` admitting a full matching.
pub fn min_cycle_dimension(angles: &[f64], delta: f64) -> Result<(usize, RootMatching)> {
    min_cycle_dimension_capped(angles, delta, DEFAULT_MAX_CYCLE_DIM)
}

pub fn min_cycle_dimension_capped(
    angles: &[f64],
    delta: f64,
    max_dim: usize,
) -> Result<(usize, RootMatching)> {
    check_angles(angles)?;
    let bound = theoretical_dimension(angles.len(), delta)?;
    let start = (2 * angles.len() + 2).max(4);
    let mut n_prime = start;
    while n_prime <= bound {
        if n_prime > max_dim {
            return Err(Error::ResourceLimit(format!(
                "no cycle dimension up to {max_dim} matches {} angles within {delta:e}",
                angles.len()
            )));
        }
        if every_angle_has_a_root(angles, n_prime, delta) {
            if let Some(m) = match_unchecked(angles, n_prime, delta) {
                return Ok((n_prime, m));
            }
        }
        n_prime += 2;
    }
    Err(Error::numerical(
        format!("no matching found up to the guaranteed dimension {bound}"),
        delta,
    ))
}

/// Completion block: rotations for every unmatched root, ascending, then
/// `diag(1, -1)` unless the matching already accounts for them.
pub fn build_completion(matching: &RootMatching) -> Matrix {
    let n = matching.n_prime;
    let angles: Vec<f64> = matching
        .unmatched_roots()
        .into_iter()
        .map(|a| 2.0 * PI * a as f64 / n as f64)
        .collect();
    if matching.pm_pair_matched {
        canonical_block_matrix(&angles, 0, 0)
    } else {
        canonical_block_matrix(&angles, 1, 1)
    }
}

/// `blockdiag(R_{β_1}, …, R_{β_K})` for the matched roots.
pub fn matched_blocks(matching: &RootMatching) -> Matrix {
    let mut out = Matrix::zeros(0, 0);
    for i in 0..matching.angles.len() {
        out = direct_sum(&out, &rotation(matching.root_angle(i)));
    }
    out
}
