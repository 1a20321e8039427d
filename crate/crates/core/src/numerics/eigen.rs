use super::{Matrix, TOLERANCES};
use crate::error::{Error, Result};

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotation, ascending.
pub fn eigenvalues_sym(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what: "symmetric eigenproblem (square)",
            expected: m.rows(),
            got: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("symmetric eigenproblem input"));
    }
    let asym = m.asymmetry();
    if asym > TOLERANCES.symmetry_tol * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let total = a.frobenius_norm();

    let mut converged = false;
    for _ in 0..TOLERANCES.jacobi_max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= TOLERANCES.jacobi_tol * total || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence);
    }
    let mut diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

/// `(lambda_min, lambda_max)` of a symmetric matrix.
pub fn eig_sym_extremes(m: &Matrix) -> Result<(f64, f64)> {
    let eig = eigenvalues_sym(m)?;
    match (eig.first(), eig.last()) {
        (Some(lo), Some(hi)) => Ok((*lo, *hi)),
        _ => Err(Error::DimensionMismatch {
            what: "symmetric eigenproblem (non-empty)",
            expected: 1,
            got: 0,
        }),
    }
}

/// Reduces a square matrix to upper Hessenberg form by stabilized
/// elementary similarity transforms.
fn hessenberg(m: &Matrix) -> Matrix {
    let n = m.rows();
    let mut a = m.clone();
    for k in 1..n.saturating_sub(1) {
        let mut pivot = 0.0f64;
        let mut p = k;
        for j in k..n {
            if a[(j, k - 1)].abs() > pivot.abs() {
                pivot = a[(j, k - 1)];
                p = j;
            }
        }
        if p != k {
            for j in (k - 1)..n {
                let tmp = a[(p, j)];
                a[(p, j)] = a[(k, j)];
                a[(k, j)] = tmp;
            }
            for i in 0..n {
                let tmp = a[(i, p)];
                a[(i, p)] = a[(i, k)];
                a[(i, k)] = tmp;
            }
        }
        if pivot != 0.0 {
            for i in (k + 1)..n {
                let y = a[(i, k - 1)] / pivot;
                if y != 0.0 {
                    for j in (k - 1)..n {
                        a[(i, j)] -= y * a[(k, j)];
                    }
                    for j in 0..n {
                        a[(j, k)] += y * a[(j, i)];
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..(i - 1) {
            a[(i, j)] = 0.0;
        }
    }
    a
}

/// Eigenvalues `(re, im)` of a general real matrix: Hessenberg reduction
/// followed by Francis double-shift QR.
pub fn eigenvalues_general(m: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            what: "eigenproblem (square)",
            expected: m.rows(),
            got: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("eigenproblem input"));
    }
    let n = m.rows();
    let mut a = hessenberg(m);
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    while nn >= 0 {
        let nu = nn as usize;
        let mut its = 0;
        loop {
            // deflation point: smallest l with negligible subdiagonal
            let mut l = nu;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + shift;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = z;
                    wi[nu] = -z;
                }
                nn -= 2;
                break;
            }
            if its >= TOLERANCES.qr_max_iterations {
                return Err(Error::NoConvergence);
            }
            if its == 10 || its == 20 {
                // exceptional shift
                shift += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let mut mm = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(mm, mm)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(mm + 1, mm)] + a[(mm, mm + 1)];
                q = a[(mm + 1, mm + 1)] - z - rr - ss;
                r = a[(mm + 2, mm + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mm == l {
                    break;
                }
                let u = a[(mm, mm - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(mm - 1, mm - 1)].abs() + z.abs() + a[(mm + 1, mm + 1)].abs());
                if u + v == v {
                    break;
                }
                mm -= 1;
            }
            for i in (mm + 2)..=nu {
                a[(i, i - 2)] = 0.0;
                if i != mm + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }

            let mut k = mm;
            while k < nu {
                if k != mm {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nu - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == mm {
                        if l != mm {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k != nu - 1 {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * z;
                        }
                        a[(k + 1, j)] -= pp * y;
                        a[(k, j)] -= pp * x;
                    }
                    let imax = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=imax {
                        let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k != nu - 1 {
                            pp += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

/// Largest eigenvalue real part (the spectral abscissa).
pub fn max_real_part(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues_general(m)?
        .into_iter()
        .map(|(re, _)| re)
        .fold(f64::NEG_INFINITY, f64::max))
}
