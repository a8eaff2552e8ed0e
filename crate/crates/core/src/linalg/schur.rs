//! Real Schur decomposition: Householder reduction to upper Hessenberg form
//! followed by Francis double-shift QR sweeps.
//!
//! The iteration follows the structure of LAPACK's `dlahqr`, including its
//! ad hoc exceptional shifts. Those matter here: orthogonal matrices have all
//! eigenvalues on the unit circle, and for permutation matrices the standard
//! Wilkinson-style shifts stagnate without them.

use super::Matrix;
use crate::error::{Error, Result};

const EXCEPTIONAL_SHIFT_PERIOD: usize = 10;
const EXSHIFT_DIAG: f64 = 0.75;
const EXSHIFT_OFF: f64 = -0.4375;

/// Computes `a = z * t * z^T` with `z` orthogonal and `t` quasi upper
/// triangular. Every 2x2 diagonal block of `t` holds a complex conjugate
/// eigenvalue pair in standardized form (equal diagonal entries, off-diagonal
/// entries of opposite sign).
pub fn real_schur(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid(format!(
            "real Schur form needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut h = a.clone();
    let mut z = Matrix::identity(n, n);
    hessenberg(&mut h, &mut z);
    francis_qr(&mut h, &mut z)?;
    Ok((z, h))
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Householder reflector `I - tau v v^T` with `v[0] = 1` mapping `x` onto
/// `beta e_1`. On return `x[0] = beta` and `x[1..]` holds `v[1..]`.
fn householder(x: &mut [f64]) -> f64 {
    if x.len() <= 1 {
        return 0.0;
    }
    let alpha = x[0];
    let xnorm = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if xnorm == 0.0 {
        return 0.0;
    }
    let beta = -sign(alpha.hypot(xnorm), alpha);
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = beta;
    tau
}

fn hessenberg(h: &mut Matrix, z: &mut Matrix) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        for i in 0..len {
            v[i] = h[(k + 1 + i, k)];
        }
        let tau = householder(&mut v[..len]);
        if tau == 0.0 {
            continue;
        }
        h[(k + 1, k)] = v[0];
        for i in 1..len {
            h[(k + 1 + i, k)] = 0.0;
        }
        v[0] = 1.0;
        for j in k + 1..n {
            let mut s = 0.0;
            for i in 0..len {
                s += v[i] * h[(k + 1 + i, j)];
            }
            s *= tau;
            for i in 0..len {
                h[(k + 1 + i, j)] -= s * v[i];
            }
        }
        for m in [&mut *h, &mut *z] {
            for r in 0..n {
                let mut s = 0.0;
                for i in 0..len {
                    s += m[(r, k + 1 + i)] * v[i];
                }
                s *= tau;
                for i in 0..len {
                    m[(r, k + 1 + i)] -= s * v[i];
                }
            }
        }
    }
}

fn francis_qr(h: &mut Matrix, z: &mut Matrix) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    for j in 0..n.saturating_sub(3) {
        h[(j + 2, j)] = 0.0;
        h[(j + 3, j)] = 0.0;
    }
    if n >= 3 {
        h[(n - 1, n - 3)] = 0.0;
    }

    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let itmax = 30 * n.max(10);
    let mut kdefl = 0usize;

    let mut i = n as isize - 1;
    while i >= 0 {
        let iu = i as usize;
        let mut l = 0usize;
        let mut converged = false;
        for _ in 0..=itmax {
            // Look for a negligible subdiagonal entry.
            let mut k = iu;
            while k > l {
                let sub = h[(k, k - 1)].abs();
                if sub <= smlnum {
                    break;
                }
                let mut tst = h[(k - 1, k - 1)].abs() + h[(k, k)].abs();
                if tst == 0.0 {
                    if k >= 2 {
                        tst += h[(k - 1, k - 2)].abs();
                    }
                    if k + 1 < n {
                        tst += h[(k + 1, k)].abs();
                    }
                }
                if sub <= ulp * tst {
                    let ab = sub.max(h[(k - 1, k)].abs());
                    let ba = sub.min(h[(k - 1, k)].abs());
                    let diff = (h[(k - 1, k - 1)] - h[(k, k)]).abs();
                    let aa = h[(k, k)].abs().max(diff);
                    let bb = h[(k, k)].abs().min(diff);
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                        break;
                    }
                }
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[(l, l - 1)] = 0.0;
            }
            if l + 1 >= iu {
                converged = true;
                break;
            }
            kdefl += 1;

            let (h11, h12, h21, h22) = if kdefl % (2 * EXCEPTIONAL_SHIFT_PERIOD) == 0 {
                let s = h[(iu, iu - 1)].abs() + h[(iu - 1, iu - 2)].abs();
                let d = EXSHIFT_DIAG * s + h[(iu, iu)];
                (d, EXSHIFT_OFF * s, s, d)
            } else if kdefl % EXCEPTIONAL_SHIFT_PERIOD == 0 {
                let s = h[(l + 1, l)].abs() + h[(l + 2, l + 1)].abs();
                let d = EXSHIFT_DIAG * s + h[(l, l)];
                (d, EXSHIFT_OFF * s, s, d)
            } else {
                (
                    h[(iu - 1, iu - 1)],
                    h[(iu - 1, iu)],
                    h[(iu, iu - 1)],
                    h[(iu, iu)],
                )
            };

            let s = h11.abs() + h12.abs() + h21.abs() + h22.abs();
            let (rt1r, rt1i, rt2r, rt2i) = if s == 0.0 {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                let (h11, h12, h21, h22) = (h11 / s, h12 / s, h21 / s, h22 / s);
                let tr = (h11 + h22) / 2.0;
                let det = (h11 - tr) * (h22 - tr) - h12 * h21;
                let rtdisc = det.abs().sqrt();
                if det >= 0.0 {
                    (tr * s, rtdisc * s, tr * s, -rtdisc * s)
                } else {
                    // Two real shifts: use the one closer to h22 twice.
                    let a = tr + rtdisc;
                    let b = tr - rtdisc;
                    let r = if (a - h22).abs() <= (b - h22).abs() {
                        a * s
                    } else {
                        b * s
                    };
                    (r, 0.0, r, 0.0)
                }
            };

            // Look for two consecutive small subdiagonal entries.
            let mut v = [0.0f64; 3];
            let mut m = iu - 2;
            loop {
                let h21s = h[(m + 1, m)];
                let s = (h[(m, m)] - rt2r).abs() + rt2i.abs() + h21s.abs();
                let h21s = h[(m + 1, m)] / s;
                v[0] = h21s * h[(m, m + 1)] + (h[(m, m)] - rt1r) * ((h[(m, m)] - rt2r) / s)
                    - rt1i * (rt2i / s);
                v[1] = h21s * (h[(m, m)] + h[(m + 1, m + 1)] - rt1r - rt2r);
                v[2] = h21s * h[(m + 2, m + 1)];
                let s = v[0].abs() + v[1].abs() + v[2].abs();
                v[0] /= s;
                v[1] /= s;
                v[2] /= s;
                if m == l {
                    break;
                }
                let h00 = h[(m, m - 1)].abs() * (v[1].abs() + v[2].abs());
                let h01 = v[0].abs() * (h[(m - 1, m - 1)].abs() + h[(m, m)].abs() + h[(m + 1, m + 1)].abs());
                if h00 <= ulp * h01 {
                    break;
                }
                m -= 1;
            }

            // Double-shift QR sweep over rows/columns m..=i.
            for k in m..iu {
                let nr = 3.min(iu - k + 1);
                if k > m {
                    for r in 0..nr {
                        v[r] = h[(k + r, k - 1)];
                    }
                }
                let t1 = householder(&mut v[..nr]);
                if k > m {
                    h[(k, k - 1)] = v[0];
                    h[(k + 1, k - 1)] = 0.0;
                    if k + 1 < iu {
                        h[(k + 2, k - 1)] = 0.0;
                    }
                } else if m > l {
                    h[(k, k - 1)] *= 1.0 - t1;
                }
                let v2 = v[1];
                let t2 = t1 * v2;
                if nr == 3 {
                    let v3 = v[2];
                    let t3 = t1 * v3;
                    for j in k..n {
                        let sum = h[(k, j)] + v2 * h[(k + 1, j)] + v3 * h[(k + 2, j)];
                        h[(k, j)] -= sum * t1;
                        h[(k + 1, j)] -= sum * t2;
                        h[(k + 2, j)] -= sum * t3;
                    }
                    for j in 0..=(k + 3).min(iu) {
                        let sum = h[(j, k)] + v2 * h[(j, k + 1)] + v3 * h[(j, k + 2)];
                        h[(j, k)] -= sum * t1;
                        h[(j, k + 1)] -= sum * t2;
                        h[(j, k + 2)] -= sum * t3;
                    }
                    for j in 0..n {
                        let sum = z[(j, k)] + v2 * z[(j, k + 1)] + v3 * z[(j, k + 2)];
                        z[(j, k)] -= sum * t1;
                        z[(j, k + 1)] -= sum * t2;
                        z[(j, k + 2)] -= sum * t3;
                    }
                } else if nr == 2 {
                    for j in k..n {
                        let sum = h[(k, j)] + v2 * h[(k + 1, j)];
                        h[(k, j)] -= sum * t1;
                        h[(k + 1, j)] -= sum * t2;
                    }
                    for j in 0..=iu {
                        let sum = h[(j, k)] + v2 * h[(j, k + 1)];
                        h[(j, k)] -= sum * t1;
                        h[(j, k + 1)] -= sum * t2;
                    }
                    for j in 0..n {
                        let sum = z[(j, k)] + v2 * z[(j, k + 1)];
                        z[(j, k)] -= sum * t1;
                        z[(j, k + 1)] -= sum * t2;
                    }
                }
            }
        }

        if !converged {
            return Err(Error::numerical(
                format!("QR iteration did not converge at row {iu}"),
                h[(iu, iu.saturating_sub(1))].abs(),
            ));
        }

        if l + 1 == iu {
            let (a, b, c, d, cs, sn) =
                standardize_2x2(h[(iu - 1, iu - 1)], h[(iu - 1, iu)], h[(iu, iu - 1)], h[(iu, iu)]);
            h[(iu - 1, iu - 1)] = a;
            h[(iu - 1, iu)] = b;
            h[(iu, iu - 1)] = c;
            h[(iu, iu)] = d;
            for j in iu + 1..n {
                let x = h[(iu - 1, j)];
                let y = h[(iu, j)];
                h[(iu - 1, j)] = cs * x + sn * y;
                h[(iu, j)] = cs * y - sn * x;
            }
            for j in 0..iu - 1 {
                let x = h[(j, iu - 1)];
                let y = h[(j, iu)];
                h[(j, iu - 1)] = cs * x + sn * y;
                h[(j, iu)] = cs * y - sn * x;
            }
            for j in 0..n {
                let x = z[(j, iu - 1)];
                let y = z[(j, iu)];
                z[(j, iu - 1)] = cs * x + sn * y;
                z[(j, iu)] = cs * y - sn * x;
            }
        }
        kdefl = 0;
        i = l as isize - 1;
    }
    Ok(())
}

/// Schur factorization of a real 2x2 block in standardized form
/// (LAPACK `dlanv2`). Returns `(a, b, c, d, cs, sn)` such that
/// `[a0 b0; c0 d0] = [cs -sn; sn cs] [a b; c d] [cs sn; -sn cs]`, where either
/// `c = 0` or `a = d` and `b * c < 0`.
pub(crate) fn standardize_2x2(
    mut a: f64,
    mut b: f64,
    mut c: f64,
    mut d: f64,
) -> (f64, f64, f64, f64, f64, f64) {
    let eps = f64::EPSILON;
    let (cs, sn);
    if c == 0.0 {
        cs = 1.0;
        sn = 0.0;
    } else if b == 0.0 {
        cs = 0.0;
        sn = 1.0;
        std::mem::swap(&mut a, &mut d);
        b = -c;
        c = 0.0;
    } else if a - d == 0.0 && sign(1.0, b) != sign(1.0, c) {
        cs = 1.0;
        sn = 0.0;
    } else {
        let temp = a - d;
        let mut p = 0.5 * temp;
        let bcmax = b.abs().max(c.abs());
        let bcmis = b.abs().min(c.abs()) * sign(1.0, b) * sign(1.0, c);
        let scale = p.abs().max(bcmax);
        let mut z = (p / scale) * p + (bcmax / scale) * bcmis;
        if z >= 4.0 * eps {
            // Real eigenvalues.
            z = p + sign(scale.sqrt() * z.sqrt(), p);
            a = d + z;
            d -= (bcmax / z) * bcmis;
            let tau = c.hypot(z);
            cs = z / tau;
            sn = c / tau;
            b -= c;
            c = 0.0;
        } else {
            // Complex or nearly equal real eigenvalues: equalize the diagonal.
            let sigma = b + c;
            let tau = sigma.hypot(temp);
            let mut cs0 = (0.5 * (1.0 + sigma.abs() / tau)).sqrt();
            let mut sn0 = -(p / (tau * cs0)) * sign(1.0, sigma);

            let aa = a * cs0 + b * sn0;
            let bb = -a * sn0 + b * cs0;
            let cc = c * cs0 + d * sn0;
            let dd = -c * sn0 + d * cs0;

            a = aa * cs0 + cc * sn0;
            b = bb * cs0 + dd * sn0;
            c = -aa * sn0 + cc * cs0;
            d = -bb * sn0 + dd * cs0;

            let temp = 0.5 * (a + d);
            a = temp;
            d = temp;

            if c != 0.0 {
                if b != 0.0 {
                    if sign(1.0, b) == sign(1.0, c) {
                        // Real eigenvalues after all: reduce to upper triangular.
                        let sab = b.abs().sqrt();
                        let sac = c.abs().sqrt();
                        p = sign(sab * sac, c);
                        let tau = 1.0 / (b + c).abs().sqrt();
                        a = temp + p;
                        d = temp - p;
                        b -= c;
                        c = 0.0;
                        let cs1 = sab * tau;
                        let sn1 = sac * tau;
                        let t = cs0 * cs1 - sn0 * sn1;
                        sn0 = cs0 * sn1 + sn0 * cs1;
                        cs0 = t;
                    }
                } else {
                    b = -c;
                    c = 0.0;
                    let t = cs0;
                    cs0 = -sn0;
                    sn0 = t;
                }
            }
            cs = cs0;
            sn = sn0;
        }
    }
    (a, b, c, d, cs, sn)
}
