//! Saturated adaptive control law, adaptive update laws and projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_sym_extremes, norm, solve_lyapunov, Matrix};

/// Relative distance to the barrier at which the barrier denominator is
/// considered numerically unusable.
pub const BARRIER_GUARD: f64 = 1e-9;

/// Slack allowed on `||K_hat||_F <= bound` at accepted steps.
pub const PROJECTION_SLACK: f64 = 1e-6;

pub const DEFAULT_PROJECTION_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveLaw {
    /// Update laws divided by the barrier gap `xi'^2 - e'Pe`.
    #[default]
    Blf,
    /// Plain gradient laws with projection (robust MRAC baseline).
    Classical,
}

impl std::fmt::Display for AdaptiveLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdaptiveLaw::Blf => "blf",
            AdaptiveLaw::Classical => "classical",
        })
    }
}

/// Adaptive gain estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub kx_hat: Matrix,
    pub kr_hat: Matrix,
}

impl ControllerState {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            kx_hat: Matrix::zeros(m, n),
            kr_hat: Matrix::zeros(m, m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub gamma_x: Matrix,
    pub gamma_r: Matrix,
    pub q: Matrix,
    /// Solution of `A_r^T P + P A_r + Q = 0`.
    pub p: Matrix,
    pub law: AdaptiveLaw,
}

impl ControllerGains {
    /// Validates the adaptation gains and solves for `P` from `(A_r, Q)`.
    pub fn new(
        gamma_x: Matrix,
        gamma_r: Matrix,
        q: Matrix,
        a_r: &Matrix,
        law: AdaptiveLaw,
    ) -> Result<Self> {
        for (name, g) in [("gamma_x", &gamma_x), ("gamma_r", &gamma_r)] {
            let (lo, _) = eig_sym_extremes(g).map_err(|e| Error::invalid(name, e.to_string()))?;
            if lo <= 0.0 {
                return Err(Error::invalid(name, "must be positive definite"));
            }
        }
        if gamma_x.shape() != gamma_r.shape() {
            return Err(Error::invalid(
                "gamma_r",
                "must have the same size as gamma_x",
            ));
        }
        let p = solve_lyapunov(a_r, &q)?;
        Ok(Self {
            gamma_x,
            gamma_r,
            q,
            p,
            law,
        })
    }
}

/// Smoothing band of the projection operator around one gain matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionParams {
    pub bound: f64,
    pub epsilon: f64,
}

impl ProjectionParams {
    pub fn new(bound: f64, epsilon: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::invalid("bound", "projection bound must be positive"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("projection_epsilon", "must lie in (0, 1)"));
        }
        Ok(Self { bound, epsilon })
    }

    /// Convex indicator `f(theta) = ((1 + eps)||theta||_F^2 - bound^2) / (eps bound^2)`:
    /// non-positive on the inner ball, one on the boundary `||theta||_F = bound`.
    pub fn indicator(&self, theta: &Matrix) -> f64 {
        let b2 = self.bound * self.bound;
        ((1.0 + self.epsilon) * theta.frobenius_norm().powi(2) - b2) / (self.epsilon * b2)
    }
}

/// `v = K_x_hat x + K_r_hat r`
pub fn auxiliary_control(state: &ControllerState, x: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let mut v = state.kx_hat.matvec(x)?;
    let vr = state.kr_hat.matvec(r)?;
    if vr.len() != v.len() {
        return Err(Error::DimensionMismatch {
            what: "K_r_hat rows vs K_x_hat rows",
            expected: v.len(),
            got: vr.len(),
        });
    }
    v.iter_mut().zip(vr).for_each(|(a, b)| *a += b);
    Ok(v)
}

/// Radial saturation: `v` itself when `||v|| <= u_bar`, else `v u_bar / ||v||`.
pub fn saturate(v: &[f64], u_bar: f64) -> Vec<f64> {
    let magnitude = norm(v);
    if magnitude <= u_bar {
        v.to_vec()
    } else {
        let s = u_bar / magnitude;
        v.iter().map(|vi| vi * s).collect()
    }
}

fn gradient_rates(
    gains: &ControllerGains,
    b: &Matrix,
    e: &[f64],
    x: &[f64],
    r: &[f64],
) -> Result<(Matrix, Matrix)> {
    let pe = gains.p.matvec(e)?;
    let bt_pe = b.tr_matvec(&pe)?;
    let gx = gains.gamma_x.matvec(&bt_pe)?;
    let gr = gains.gamma_r.matvec(&bt_pe)?;
    let mut rate_x = Matrix::outer(&gx, x);
    let mut rate_r = Matrix::outer(&gr, r);
    rate_x.scale_mut(-1.0);
    rate_r.scale_mut(-1.0);
    Ok((rate_x, rate_r))
}

/// `(-Gamma_x B^T P e x^T, -Gamma_r B^T P e r^T)`, before projection.
pub fn classical_raw_rates(
    gains: &ControllerGains,
    b: &Matrix,
    e: &[f64],
    x: &[f64],
    r: &[f64],
) -> Result<(Matrix, Matrix)> {
    gradient_rates(gains, b, e, x, r)
}

/// Barrier gap `xi'^2 - e'Pe`, failing once the state is within the guard band.
fn barrier_gap(e: &[f64], p: &Matrix, xi_prime: f64) -> Result<f64> {
    let level = xi_prime * xi_prime;
    let epe = p.quad_form(e)?;
    if !epe.is_finite() {
        return Err(Error::NonFinite("e'Pe"));
    }
    if epe >= level * (1.0 - BARRIER_GUARD) {
        return Err(Error::BarrierBreach { ratio: epe / level });
    }
    Ok(level - epe)
}

/// Classical rates divided by the barrier gap `xi'^2 - e'Pe`.
pub fn blf_raw_rates(
    gains: &ControllerGains,
    b: &Matrix,
    e: &[f64],
    x: &[f64],
    r: &[f64],
    xi_prime: f64,
) -> Result<(Matrix, Matrix)> {
    let gap = barrier_gap(e, &gains.p, xi_prime)?;
    let (mut rate_x, mut rate_r) = gradient_rates(gains, b, e, x, r)?;
    rate_x.scale_mut(1.0 / gap);
    rate_r.scale_mut(1.0 / gap);
    Ok((rate_x, rate_r))
}

/// Smooth projection of `raw_rate` for the estimate `theta`.
///
/// Inside the inner ball, or whenever the rate points inward, the rate is
/// returned unchanged. Otherwise the outward normal component is scaled
/// down by `f(theta)`, vanishing completely on `||theta||_F = bound`.
pub fn project(theta: &Matrix, raw_rate: &Matrix, pp: &ProjectionParams) -> Matrix {
    let f = pp.indicator(theta);
    if f <= 0.0 {
        return raw_rate.clone();
    }
    // grad f = 2 (1 + eps) theta / (eps bound^2); only its direction matters
    let grad = theta.scaled(2.0 * (1.0 + pp.epsilon) / (pp.epsilon * pp.bound * pp.bound));
    let outward = grad.frobenius_dot(raw_rate).unwrap_or(0.0);
    if outward <= 0.0 {
        return raw_rate.clone();
    }
    let grad_sq = grad.frobenius_norm().powi(2);
    let mut out = raw_rate.clone();
    let c = f * outward / grad_sq;
    for (i, g) in grad.as_slice().iter().enumerate() {
        let (r, col) = (i / grad.cols(), i % grad.cols());
        out[(r, col)] -= c * g;
    }
    out
}

/// Pulls `theta` back onto the ball `||theta||_F <= bound` if it left it.
/// Returns whether a clamp was applied.
pub fn radial_clamp(theta: &mut Matrix, bound: f64) -> bool {
    let magnitude = theta.frobenius_norm();
    if magnitude > bound {
        theta.scale_mut(bound / magnitude);
        true
    } else {
        false
    }
}

/// Barrier value `0.5 ln(xi'^2 / (xi'^2 - e'Pe))`.
pub fn blf_value(e: &[f64], p: &Matrix, xi_prime: f64) -> Result<f64> {
    let gap = barrier_gap(e, p, xi_prime)?;
    Ok(0.5 * (xi_prime * xi_prime / gap).ln())
}
