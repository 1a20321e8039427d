//! Small dense linear algebra and a fixed-step integrator.
//!
//! Everything here targets matrices of dimension ten or less: Lyapunov
//! equations are solved by Kronecker vectorization, symmetric spectra by
//! cyclic Jacobi, and general spectra (only needed for the Hurwitz test) by
//! Francis double-shift QR on the Hessenberg form.

mod eigen;
mod linsolve;
mod lyapunov;
mod matrix;
mod rk4;

pub use eigen::{eig_sym_extremes, eigenvalues_general, eigenvalues_sym, max_real_part};
pub use linsolve::{inverse, solve};
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use matrix::{add, axpy, dot, norm, scale, sub, Matrix};
pub use rk4::{rk4_step, try_rk4_step};

use crate::error::{Error, Result};

/// Numerical tolerances shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalue real parts at or above `-hurwitz_margin` fail the Hurwitz test.
    pub hurwitz_margin: f64,
    /// Off-diagonal convergence threshold for cyclic Jacobi, relative to the Frobenius norm.
    pub jacobi_tol: f64,
    pub jacobi_max_sweeps: usize,
    /// Largest |M - M^T| entry accepted as symmetric.
    pub symmetry_tol: f64,
    /// Smallest-to-largest singular value ratio below which a matrix is rank-deficient.
    pub rank_ratio: f64,
    /// Pivot magnitude (relative to the largest entry) below which LU declares singularity.
    pub pivot_tol: f64,
    /// Relative Lyapunov residual bound, scaled by `1 + ||Q||_F`.
    pub lyapunov_residual: f64,
    pub qr_max_iterations: usize,
}

pub const TOLERANCES: Tolerances = Tolerances {
    hurwitz_margin: 1e-12,
    jacobi_tol: 1e-12,
    jacobi_max_sweeps: 100,
    symmetry_tol: 1e-9,
    rank_ratio: 1e-10,
    pivot_tol: 1e-14,
    lyapunov_residual: 1e-9,
    qr_max_iterations: 60,
};

/// Largest singular value, computed as the square root of the largest
/// eigenvalue of `M^T M`.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite("spectral_norm input"));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    let gram = m.transpose().matmul(m)?;
    let (_, lmax) = eig_sym_extremes(&gram.symmetrized())?;
    Ok(lmax.max(0.0).sqrt())
}

/// Left inverse `(B^T B)^-1 B^T` of a full-column-rank matrix.
pub fn left_pseudo_inverse(b: &Matrix) -> Result<Matrix> {
    if !b.is_finite() {
        return Err(Error::NonFinite("left_pseudo_inverse input"));
    }
    let gram = b.transpose().matmul(b)?.symmetrized();
    let (lmin, lmax) = eig_sym_extremes(&gram)?;
    let smax = lmax.max(0.0).sqrt();
    let smin = lmin.max(0.0).sqrt();
    if smax == 0.0 || smin <= TOLERANCES.rank_ratio * smax {
        return Err(Error::RankDeficient {
            ratio: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    let gram_inv = inverse(&gram)?;
    gram_inv.matmul(&b.transpose())
}
