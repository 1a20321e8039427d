//! Feasibility of a (state bound, input bound) pair for the constrained
//! controller.
//!
//! The sufficient condition is linear in the bounds: `u_bar > alpha * x_bar + beta`
//! with
//!
//! ```text
//! eta   = lambda_min(Q) / (2 lambda_max(P) ||B||)
//! alpha = kx_bar - eta
//! beta  = xa_bar eta + kr_bar r_bar + d_bar / ||B||
//! ```
//!
//! The sign of `alpha` decides whether relaxing the state bound costs or
//! saves input authority; `beta` is a hard floor on `u_bar`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ConstraintSpec;
use crate::numerics::{eig_sym_extremes, spectral_norm, Matrix};

/// Which branch of the stability argument applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseLabel {
    /// `sigma > 0`: the condition is required.
    Case2_1,
    /// `sigma <= 0`, `varrho >= 0`: no extra condition.
    Case2_2VarrhoNonneg,
    /// `sigma <= 0`, `varrho < 0`: the condition is required.
    Case2_2VarrhoNeg,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseLabel::Case2_1 => "case_2_1",
            CaseLabel::Case2_2VarrhoNonneg => "case_2_2_varrho_nonneg",
            CaseLabel::Case2_2VarrhoNeg => "case_2_2_varrho_neg",
        })
    }
}

/// Largest admissible state bound for a given input bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum MaxStateBound {
    /// Feasible exactly for `xa_bar < x_bar < value`.
    Below(f64),
    Unbounded,
    /// No `x_bar > xa_bar` is feasible.
    Infeasible,
}

impl fmt::Display for MaxStateBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxStateBound::Below(v) => write!(f, "{v}"),
            MaxStateBound::Unbounded => f.write_str("unbounded"),
            MaxStateBound::Infeasible => f.write_str("infeasible"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C1Check {
    pub feasible: bool,
    /// `u_bar - (alpha x_bar + beta)`
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub varrho: f64,
    pub c1_satisfied: bool,
    pub c1_margin: f64,
    pub case_label: CaseLabel,
    pub min_u_bar: f64,
    pub max_x_bar: MaxStateBound,
    pub r_bar: f64,
    pub b_norm: f64,
    pub p_lambda_min: f64,
    pub p_lambda_max: f64,
    pub q_lambda_min: f64,
    /// Threshold and verdict of the state-only condition.
    pub state_only_threshold: f64,
    pub state_only_satisfied: bool,
    /// Input-only lower bound on `u_bar`; `None` without `x0_bar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_only_bound: Option<f64>,
}

pub fn compute_eta(q: &Matrix, p: &Matrix, b: &Matrix) -> Result<f64> {
    let (q_min, _) = eig_sym_extremes(q)?;
    let (_, p_max) = eig_sym_extremes(p)?;
    let b_norm = spectral_norm(b)?;
    if b_norm == 0.0 {
        return Err(Error::invalid("B", "input matrix must be nonzero"));
    }
    Ok(q_min / (2.0 * p_max * b_norm))
}

pub fn compute_alpha_beta(cs: &ConstraintSpec, eta: f64, r_bar: f64, b_norm: f64) -> (f64, f64) {
    let alpha = cs.kx_bar - eta;
    let beta = cs.xa_bar * eta + cs.kr_bar * r_bar + cs.d_bar / b_norm;
    (alpha, beta)
}

/// Strict check of `u_bar > alpha x_bar + beta`; boundary points are infeasible.
pub fn check_c1(u_bar: f64, x_bar: f64, alpha: f64, beta: f64) -> C1Check {
    let margin = u_bar - (alpha * x_bar + beta);
    C1Check {
        feasible: margin > 0.0,
        margin,
    }
}

/// Open lower bound on `u_bar` for a given `x_bar`.
pub fn min_input_bound(x_bar: f64, alpha: f64, beta: f64) -> f64 {
    alpha * x_bar + beta
}

/// Largest `x_bar` compatible with `u_bar`.
///
/// For `alpha < 0` large state bounds are always admissible, so the answer
/// is [`MaxStateBound::Unbounded`]; [`min_state_bound`] gives the lower end.
pub fn max_state_bound(u_bar: f64, alpha: f64, beta: f64, xa_bar: f64) -> MaxStateBound {
    if alpha > 0.0 {
        let limit = (u_bar - beta) / alpha;
        if limit > xa_bar {
            MaxStateBound::Below(limit)
        } else {
            MaxStateBound::Infeasible
        }
    } else if alpha < 0.0 || u_bar > beta {
        MaxStateBound::Unbounded
    } else {
        MaxStateBound::Infeasible
    }
}

/// Smallest admissible `x_bar` (exclusive), which exceeds `xa_bar` only
/// when `alpha < 0` and the input bound is tight.
pub fn min_state_bound(u_bar: f64, alpha: f64, beta: f64, xa_bar: f64) -> f64 {
    if alpha < 0.0 {
        ((u_bar - beta) / alpha).max(xa_bar)
    } else {
        xa_bar
    }
}

/// State-only condition: `x_bar > xa_bar + 2 lambda_max(P) d_bar / lambda_min(Q)`.
pub fn state_only_condition(cs: &ConstraintSpec, p: &Matrix, q: &Matrix) -> Result<(bool, f64)> {
    let (_, p_max) = eig_sym_extremes(p)?;
    let (q_min, _) = eig_sym_extremes(q)?;
    let threshold = cs.xa_bar + 2.0 * p_max * cs.d_bar / q_min;
    Ok((cs.x_bar > threshold, threshold))
}

/// Input-only lower bound `kx_bar x0_bar + kr_bar r_bar + d_bar / ||B||` on `u_bar`.
pub fn input_only_bound(cs: &ConstraintSpec, r_bar: f64, b_norm: f64) -> Result<f64> {
    let x0_bar = cs.x0_bar.ok_or(Error::MissingX0)?;
    Ok(cs.kx_bar * x0_bar + cs.kr_bar * r_bar + cs.d_bar / b_norm)
}

pub fn classify(sigma: f64, varrho: f64) -> CaseLabel {
    if sigma > 0.0 {
        CaseLabel::Case2_1
    } else if varrho >= 0.0 {
        CaseLabel::Case2_2VarrhoNonneg
    } else {
        CaseLabel::Case2_2VarrhoNeg
    }
}

/// Full report for the constraint set given `Q`, `P`, `B` and `r_bar`.
pub fn analyze(
    cs: &ConstraintSpec,
    q: &Matrix,
    p: &Matrix,
    b: &Matrix,
    r_bar: f64,
) -> Result<FeasibilityReport> {
    cs.validate()?;
    let (q_lambda_min, _) = eig_sym_extremes(q)?;
    let (p_lambda_min, p_lambda_max) = eig_sym_extremes(p)?;
    let b_norm = spectral_norm(b)?;
    let eta = compute_eta(q, p, b)?;
    let (alpha, beta) = compute_alpha_beta(cs, eta, r_bar, b_norm);
    let sigma = cs.kx_bar / eta - 1.0;
    let varrho = cs.u_bar - cs.kx_bar * cs.xa_bar - cs.kr_bar * r_bar - cs.d_bar / b_norm;
    let c1 = check_c1(cs.u_bar, cs.x_bar, alpha, beta);
    let (state_only_satisfied, state_only_threshold) = state_only_condition(cs, p, q)?;
    let input_only = match input_only_bound(cs, r_bar, b_norm) {
        Ok(v) => Some(v),
        Err(Error::MissingX0) => None,
        Err(e) => return Err(e),
    };
    Ok(FeasibilityReport {
        eta,
        alpha,
        beta,
        sigma,
        varrho,
        c1_satisfied: c1.feasible,
        c1_margin: c1.margin,
        case_label: classify(sigma, varrho),
        min_u_bar: min_input_bound(cs.x_bar, alpha, beta),
        max_x_bar: max_state_bound(cs.u_bar, alpha, beta, cs.xa_bar),
        r_bar,
        b_norm,
        p_lambda_min,
        p_lambda_max,
        q_lambda_min,
        state_only_threshold,
        state_only_satisfied,
        input_only_bound: input_only,
    })
}

/// Feasibility classification over a `(u_bar, x_bar)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub u_axis: Vec<f64>,
    pub x_axis: Vec<f64>,
    /// `feasible[i][j]` for `(u_axis[i], x_axis[j])`.
    pub feasible: Vec<Vec<bool>>,
    pub alpha: f64,
    pub beta: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn build_region_grid(
    u_range: (f64, f64),
    x_range: (f64, f64),
    alpha: f64,
    beta: f64,
    resolution: usize,
) -> Result<RegionGrid> {
    if resolution < 2 {
        return Err(Error::invalid("resolution", "must be at least 2"));
    }
    for (name, (lo, hi)) in [("u_range", u_range), ("x_range", x_range)] {
        if !(lo > 0.0 && hi > lo) || !hi.is_finite() {
            return Err(Error::invalid(
                name,
                "must be an increasing range of positive values",
            ));
        }
    }
    let u_axis = linspace(u_range.0, u_range.1, resolution);
    let x_axis = linspace(x_range.0, x_range.1, resolution);
    let feasible = u_axis
        .iter()
        .map(|&u| {
            x_axis
                .iter()
                .map(|&x| check_c1(u, x, alpha, beta).feasible)
                .collect()
        })
        .collect();
    Ok(RegionGrid {
        u_axis,
        x_axis,
        feasible,
        alpha,
        beta,
    })
}

impl RegionGrid {
    pub fn is_feasible(&self, u_bar: f64, x_bar: f64) -> bool {
        check_c1(u_bar, x_bar, self.alpha, self.beta).feasible
    }

    /// Feasible cells on the row with fixed `u_axis[i]` (admissible state bounds).
    pub fn u_slice(&self, i: usize) -> Vec<(f64, bool)> {
        self.x_axis
            .iter()
            .copied()
            .zip(self.feasible[i].iter().copied())
            .collect()
    }

    /// Feasible cells on the column with fixed `x_axis[j]` (admissible input bounds).
    pub fn x_slice(&self, j: usize) -> Vec<(f64, bool)> {
        self.u_axis
            .iter()
            .copied()
            .zip(self.feasible.iter().map(|row| row[j]))
            .collect()
    }

    pub fn feasible_fraction(&self) -> f64 {
        let total = self.u_axis.len() * self.x_axis.len();
        let count: usize = self
            .feasible
            .iter()
            .map(|row| row.iter().filter(|f| **f).count())
            .sum();
        count as f64 / total as f64
    }

    /// CSV with header `x_bar,u_bar,feasible`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_bar,u_bar,feasible\n");
        for (i, u) in self.u_axis.iter().enumerate() {
            for (j, x) in self.x_axis.iter().enumerate() {
                out.push_str(&format!(
                    "{x:.17e},{u:.17e},{}\n",
                    u8::from(self.feasible[i][j])
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cs() -> ConstraintSpec {
        ConstraintSpec {
            x_bar: 6.5,
            u_bar: 12.0,
            xa_bar: 6.4,
            d_bar: 1.2,
            kx_bar: 1.6,
            kr_bar: 0.6,
            x0_bar: None,
            xr_bar: None,
        }
    }

    #[test]
    fn eta_examples() {
        // lambda_max(P) = 2, ||B|| = 4
        let p = Matrix::diag(&[1.0, 2.0]);
        let b = Matrix::diag(&[4.0, 1.0]);
        assert_relative_eq!(
            compute_eta(&Matrix::identity(2), &p, &b).unwrap(),
            0.0625,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            compute_eta(&Matrix::scaled_identity(2, 2.0), &p, &b).unwrap(),
            0.125,
            max_relative = 1e-14
        );
    }

    #[test]
    fn alpha_beta_edges() {
        let c = ConstraintSpec {
            kx_bar: 0.3,
            ..cs()
        };
        let (alpha, _) = compute_alpha_beta(&c, 0.3, 1.0, 4.0);
        assert_eq!(alpha, 0.0);
        let c = ConstraintSpec {
            d_bar: 0.0,
            xa_bar: 1e-12,
            ..cs()
        };
        let (_, beta) = compute_alpha_beta(&c, 0.01, 0.0, 4.0);
        assert!(beta < 1e-13);
    }

    #[test]
    fn c1_examples() {
        let c = check_c1(3.0, 2.0, 1.0, 1.0);
        assert_eq!(c.margin, 0.0);
        assert!(!c.feasible);
        let c = check_c1(10.0, 5.0, 1.0, 1.0);
        assert_eq!((c.margin, c.feasible), (4.0, true));
        let c = check_c1(10.0, 5.0, -1.0, 1.0);
        assert_eq!((c.margin, c.feasible), (14.0, true));
    }

    #[test]
    fn min_input_examples() {
        assert_eq!(min_input_bound(123.0, 0.0, 2.5), 2.5);
        assert_relative_eq!(
            min_input_bound(6.4 + 1e-12, 1.5, 1.0),
            1.5 * 6.4 + 1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn max_state_examples() {
        match max_state_bound(12.0, 1.58, 1.2, 6.4) {
            MaxStateBound::Below(v) => assert_relative_eq!(v, 10.8 / 1.58, max_relative = 1e-14),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            max_state_bound(10.0, -1.0, 1.0, 0.5),
            MaxStateBound::Unbounded
        );
        assert_eq!(
            max_state_bound(1.0, 1.0, 1.0, 0.5),
            MaxStateBound::Infeasible
        );
        assert_eq!(
            max_state_bound(0.5, 0.0, 1.0, 0.5),
            MaxStateBound::Infeasible
        );
    }

    #[test]
    fn state_only_examples() {
        let c = ConstraintSpec {
            d_bar: 0.0,
            x_bar: 6.41,
            ..cs()
        };
        let (ok, thr) =
            state_only_condition(&c, &Matrix::diag(&[1.0, 2.0]), &Matrix::identity(2)).unwrap();
        assert!(ok);
        assert_eq!(thr, 6.4);
        let c = ConstraintSpec { d_bar: 1.0, ..cs() };
        let (ok, thr) =
            state_only_condition(&c, &Matrix::diag(&[1.0, 2.0]), &Matrix::identity(2)).unwrap();
        assert_relative_eq!(thr, 10.4, max_relative = 1e-14);
        assert!(!ok);
    }

    #[test]
    fn input_only_examples() {
        assert_eq!(input_only_bound(&cs(), 1.0, 4.0), Err(Error::MissingX0));
        let c = ConstraintSpec {
            kx_bar: 0.0,
            kr_bar: 0.0,
            d_bar: 0.0,
            x0_bar: Some(3.0),
            ..cs()
        };
        assert_eq!(input_only_bound(&c, 1.4, 4.0).unwrap(), 0.0);
        let c = ConstraintSpec {
            x0_bar: Some(6.4),
            ..cs()
        };
        let v = input_only_bound(&c, 2f64.sqrt(), 4.0).unwrap();
        assert_relative_eq!(v, 1.6 * 6.4 + 0.6 * 2f64.sqrt() + 0.3, max_relative = 1e-14);
        assert!((v - 11.39).abs() < 0.01);
    }

    #[test]
    fn classification() {
        assert_eq!(classify(0.5, -1.0), CaseLabel::Case2_1);
        assert_eq!(classify(0.0, 0.0), CaseLabel::Case2_2VarrhoNonneg);
        assert_eq!(classify(-0.5, -1.0), CaseLabel::Case2_2VarrhoNeg);
    }

    #[test]
    fn grid_examples() {
        let g = build_region_grid((1.0, 12.0), (1.0, 12.0), 1.0, 1.0, 12).unwrap();
        assert!(!g.is_feasible(3.0, 2.0));
        assert!(g.is_feasible(10.0, 5.0));
        // u_axis / x_axis hit the integers exactly
        assert!(!g.feasible[2][1]);
        assert!(g.feasible[9][4]);

        let flat = build_region_grid((1.0, 5.0), (1.0, 9.0), 0.0, 2.0, 9).unwrap();
        for row in &flat.feasible {
            assert!(row.iter().all(|f| *f == row[0]));
        }
        assert!(build_region_grid((1.0, 5.0), (1.0, 9.0), 0.0, 2.0, 1).is_err());
        assert!(build_region_grid((0.0, 5.0), (1.0, 9.0), 0.0, 2.0, 4).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = build_region_grid((1.0, 2.0), (3.0, 4.0), 0.0, 1.5, 2).unwrap();
        let csv = g.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "x_bar,u_bar,feasible");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].ends_with(",0"));
        assert!(lines[4].ends_with(",1"));
    }
}
