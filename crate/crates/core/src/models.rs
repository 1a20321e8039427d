//! Plant, reference model, auxiliary reference and matching conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    eig_sym_extremes, eigenvalues_general, left_pseudo_inverse, max_real_part, norm, spectral_norm,
    Matrix, TOLERANCES,
};

/// Matching residuals above this are reported as a violated matching assumption.
pub const MATCHING_WARN_THRESHOLD: f64 = 1e-6;

fn check_pair(a: &Matrix, b: &Matrix, what: &'static str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what,
            expected: a.rows(),
            got: a.cols(),
        });
    }
    if b.rows() != a.rows() {
        return Err(Error::DimensionMismatch {
            what,
            expected: a.rows(),
            got: b.rows(),
        });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// `x' = A x + B u + d`. `A` is known to the simulator only.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: Matrix,
    pub b: Matrix,
}

impl PlantModel {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        check_pair(&a, &b, "plant (A, B)")?;
        if b.cols() > a.rows() {
            return Err(Error::invalid(
                "plant.b",
                "more inputs than states (need n >= m)",
            ));
        }
        left_pseudo_inverse(&b)?;
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// PBH test on every eigenvalue with non-negative real part:
    /// `rank [A - lambda I, B] = n`.
    pub fn is_stabilizable(&self) -> Result<bool> {
        let n = self.n();
        let m = self.m();
        for (re, im) in eigenvalues_general(&self.a)? {
            if re < -TOLERANCES.hurwitz_margin {
                continue;
            }
            // real embedding of the complex matrix [A - (re + i im) I, B]
            let mut blk = Matrix::zeros(2 * n, 2 * n + 2 * m);
            for i in 0..n {
                for j in 0..n {
                    let v = self.a[(i, j)] - if i == j { re } else { 0.0 };
                    blk[(i, j)] = v;
                    blk[(n + i, n + j)] = v;
                }
                blk[(i, n + i)] = im;
                blk[(n + i, i)] = -im;
                for j in 0..m {
                    blk[(i, 2 * n + j)] = self.b[(i, j)];
                    blk[(n + i, 2 * n + m + j)] = self.b[(i, j)];
                }
            }
            let gram = blk.matmul(&blk.transpose())?.symmetrized();
            let (lo, hi) = eig_sym_extremes(&gram)?;
            if hi <= 0.0 || lo.max(0.0).sqrt() <= 1e-9 * hi.sqrt() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `x_r' = A_r x_r + B_r r` with Hurwitz `A_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    pub a: Matrix,
    pub b: Matrix,
}

impl ReferenceModel {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        check_pair(&a, &b, "reference model (A_r, B_r)")?;
        let abscissa = max_real_part(&a)?;
        if abscissa >= -TOLERANCES.hurwitz_margin {
            return Err(Error::NotHurwitz {
                max_real_part: abscissa,
            });
        }
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }
}

/// User bounds on state, input, disturbance and ideal gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    /// State bound: `||x|| < x_bar`.
    pub x_bar: f64,
    /// Input bound: `||u|| <= u_bar`.
    pub u_bar: f64,
    /// Auxiliary reference bound, strictly below `x_bar`.
    pub xa_bar: f64,
    pub d_bar: f64,
    pub kx_bar: f64,
    pub kr_bar: f64,
    /// Bound on `||x(0)||` for the input-only analysis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_bar: Option<f64>,
    /// Informational bound on `||x_r||`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xr_bar: Option<f64>,
}

impl ConstraintSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("x_bar", self.x_bar),
            ("u_bar", self.u_bar),
            ("xa_bar", self.xa_bar),
            ("kx_bar", self.kx_bar),
            ("kr_bar", self.kr_bar),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be a finite positive number"));
            }
        }
        if !(self.d_bar >= 0.0) || !self.d_bar.is_finite() {
            return Err(Error::invalid("d_bar", "must be finite and non-negative"));
        }
        for (name, v) in [("x0_bar", self.x0_bar), ("xr_bar", self.xr_bar)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::invalid(name, "must be a finite positive number"));
                }
            }
        }
        if self.xa_bar >= self.x_bar {
            return Err(Error::invalid("xa_bar", "must be strictly below x_bar"));
        }
        Ok(())
    }

    /// Tracking-error bound `xi = x_bar - xa_bar`.
    pub fn xi(&self) -> f64 {
        self.x_bar - self.xa_bar
    }

    /// Barrier level `xi' = xi * sqrt(lambda_min(P))`.
    pub fn xi_prime(&self, p_lambda_min: f64) -> f64 {
        self.xi() * p_lambda_min.sqrt()
    }
}

/// Which radius triggers the radial clipping of the auxiliary reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxVariant {
    /// Clip once `||x_r|| >= x_bar`, scaling to `xa_bar`. Leaves a band
    /// `xa_bar <= ||x_a|| < x_bar` where `x_a = x_r` exceeds `xa_bar`.
    StateBound,
    /// Clip once `||x_r|| >= xa_bar`, so `||x_a|| <= xa_bar` always holds.
    #[default]
    SelfConsistent,
}

/// Auxiliary reference state `x_a`: `x_r`, radially clipped to `xa_bar`
/// past the variant's threshold.
pub fn auxiliary_reference(x_r: &[f64], cs: &ConstraintSpec, variant: AuxVariant) -> Vec<f64> {
    let magnitude = norm(x_r);
    let threshold = match variant {
        AuxVariant::StateBound => cs.x_bar,
        AuxVariant::SelfConsistent => cs.xa_bar,
    };
    if magnitude < threshold {
        x_r.to_vec()
    } else {
        let s = cs.xa_bar / magnitude;
        x_r.iter().map(|v| v * s).collect()
    }
}

pub fn plant_derivative(p: &PlantModel, x: &[f64], u: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    if d.len() != p.n() {
        return Err(Error::DimensionMismatch {
            what: "disturbance",
            expected: p.n(),
            got: d.len(),
        });
    }
    let mut dx = p.a.matvec(x)?;
    let bu = p.b.matvec(u)?;
    for ((o, bu), di) in dx.iter_mut().zip(bu).zip(d) {
        *o += bu + di;
    }
    Ok(dx)
}

pub fn reference_derivative(rm: &ReferenceModel, x_r: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let mut dx = rm.a.matvec(x_r)?;
    for (o, br) in dx.iter_mut().zip(rm.b.matvec(r)?) {
        *o += br;
    }
    Ok(dx)
}

/// Ideal gains from the matching conditions and how well they match.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueGains {
    pub kx: Matrix,
    pub kr: Matrix,
    /// `||A + B K_x - A_r||_F`
    pub residual_x: f64,
    /// `||B K_r - B_r||_F`
    pub residual_r: f64,
}

impl TrueGains {
    pub fn matching_holds(&self) -> bool {
        self.residual_x < MATCHING_WARN_THRESHOLD && self.residual_r < MATCHING_WARN_THRESHOLD
    }
}

/// `K_x = B^+ (A_r - A)`, `K_r = B^+ B_r`, with residuals reported rather
/// than asserted.
pub fn compute_true_gains(p: &PlantModel, rm: &ReferenceModel) -> Result<TrueGains> {
    if rm.n() != p.n() || rm.m() != p.m() {
        return Err(Error::DimensionMismatch {
            what: "plant vs reference model",
            expected: p.n() * p.m(),
            got: rm.n() * rm.m(),
        });
    }
    let b_pinv = left_pseudo_inverse(&p.b)?;
    let kx = b_pinv.matmul(&rm.a.sub(&p.a)?)?;
    let kr = b_pinv.matmul(&rm.b)?;
    let residual_x = p.a.add(&p.b.matmul(&kx)?)?.sub(&rm.a)?.frobenius_norm();
    let residual_r = p.b.matmul(&kr)?.sub(&rm.b)?.frobenius_norm();
    Ok(TrueGains {
        kx,
        kr,
        residual_x,
        residual_r,
    })
}

/// Bound estimate `||B^+|| ||A_r - A||` for `K_x`, where `a` is the true
/// plant matrix or any matrix the user trusts as a stand-in.
pub fn kx_bound_estimate(p: &PlantModel, rm: &ReferenceModel, a: &Matrix) -> Result<f64> {
    let b_pinv = left_pseudo_inverse(&p.b)?;
    Ok(spectral_norm(&b_pinv)? * spectral_norm(&rm.a.sub(a)?)?)
}
