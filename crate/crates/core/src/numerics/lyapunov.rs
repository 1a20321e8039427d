use super::{eig_sym_extremes, max_real_part, solve, Matrix, TOLERANCES};
use crate::error::{Error, Result};

/// Solves `A^T P + P A + Q = 0` for symmetric positive definite `P`.
///
/// The equation is vectorized column-major as
/// `(I (x) A^T + A^T (x) I) vec(P) = -vec(Q)` and solved densely, which is
/// fine for the n <= 10 systems handled here.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "Lyapunov equation operands",
            expected: n,
            got: if a.is_square() { q.rows() } else { a.cols() },
        });
    }
    let (q_min, _) = eig_sym_extremes(q)?;
    if q_min <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: q_min,
        });
    }
    let abscissa = max_real_part(a)?;
    if abscissa >= -TOLERANCES.hurwitz_margin {
        return Err(Error::NotHurwitz {
            max_real_part: abscissa,
        });
    }

    let dim = n * n;
    let mut kron = Matrix::zeros(dim, dim);
    // vec index of P[i][j] is j * n + i
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            // (A^T P)[i][j] = sum_k A[k][i] P[k][j]
            for k in 0..n {
                kron[(row, j * n + k)] += a[(k, i)];
            }
            // (P A)[i][j] = sum_k P[i][k] A[k][j]
            for k in 0..n {
                kron[(row, k * n + i)] += a[(k, j)];
            }
        }
    }
    let rhs: Vec<f64> = q.to_col_major().into_iter().map(|v| -v).collect();
    let vec_p = solve(&kron, &rhs)?;
    let p = Matrix::from_col_major(n, n, &vec_p)?.symmetrized();

    let (p_min, _) = eig_sym_extremes(&p)?;
    if p_min <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: p_min,
        });
    }
    Ok(p)
}

/// Frobenius norm of `A^T P + P A + Q`.
pub fn lyapunov_residual(a: &Matrix, p: &Matrix, q: &Matrix) -> Result<f64> {
    let at_p = a.transpose().matmul(p)?;
    let p_a = p.matmul(a)?;
    Ok(at_p.add(&p_a)?.add(q)?.frobenius_norm())
}
