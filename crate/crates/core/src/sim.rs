//! Closed-loop simulation with constraint monitors: fixed outer steps of
//! `dt`, each split into RK4 substeps short enough to resolve the fast
//! error/gain oscillation of the adaptive loop.
//!
//! The integrated state packs `x`, `x_r`, `K_x_hat` and `K_r_hat` (gain
//! matrices flattened column-major). The auxiliary reference `x_a`, the
//! tracking error `e = x - x_a`, the commanded input `v` and the saturated
//! input `u` are algebraic outputs recomputed from the packed state.

use std::fmt::Write as _;

use crate::controller::{
    auxiliary_control, blf_raw_rates, blf_value, classical_raw_rates, project, radial_clamp,
    saturate, AdaptiveLaw, ControllerGains, ControllerState, ProjectionParams, BARRIER_GUARD,
};
use crate::error::{Error, Result};
use crate::feasibility::{analyze, FeasibilityReport};
use crate::models::{
    auxiliary_reference, plant_derivative, reference_derivative, AuxVariant, ConstraintSpec,
    PlantModel, ReferenceModel,
};
use crate::numerics::{dot, eig_sym_extremes, norm, sub, try_rk4_step, Matrix};
use crate::signals::{
    eval_disturbance, eval_reference, sup_norm_bound, DisturbanceSpec, SignalSpec,
};

/// Maximum number of recursive step halvings after a barrier breach.
pub const MAX_HALVINGS: u32 = 10;

/// Largest `h * omega` allowed per RK4 substep, where `omega` estimates the
/// frequency of the coupled error/gain oscillation.
pub const STIFFNESS_LIMIT: f64 = 0.1;

/// Cap on the substeps taken within one `dt`.
pub const MAX_SUBSTEPS: usize = 64;

/// Grid size used to estimate `r_bar` for the feasibility gate.
pub const R_BAR_SAMPLES: usize = 4001;

/// Absolute slack on `||u|| <= u_bar` when judging the input constraint.
pub fn input_tolerance(u_bar: f64) -> f64 {
    1e-12 * u_bar.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub plant: PlantModel,
    pub reference: ReferenceModel,
    pub constraints: ConstraintSpec,
    pub gains: ControllerGains,
    pub aux_variant: AuxVariant,
    pub projection_epsilon: f64,
    pub reference_signal: SignalSpec,
    pub disturbance: DisturbanceSpec,
    pub x0: Vec<f64>,
    pub xr0: Vec<f64>,
    pub khat_x0: Matrix,
    pub khat_r0: Matrix,
    pub t_end: f64,
    pub dt: f64,
    pub log_stride: usize,
}

impl SimConfig {
    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn m(&self) -> usize {
        self.plant.m()
    }

    pub fn law(&self) -> AdaptiveLaw {
        self.gains.law
    }

    pub fn with_law(mut self, law: AdaptiveLaw) -> Self {
        self.gains.law = law;
        self
    }

    /// Checks dimensions and scalar ranges. Model-level invariants
    /// (Hurwitz, rank) are enforced by the model constructors.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        let dims = [
            ("reference model states", self.reference.n(), n),
            ("reference model inputs", self.reference.m(), m),
            ("Q size", self.gains.q.rows(), n),
            ("gamma_x size", self.gains.gamma_x.rows(), m),
            ("x0 length", self.x0.len(), n),
            ("xr0 length", self.xr0.len(), n),
            ("khat_x0 rows", self.khat_x0.rows(), m),
            ("khat_x0 cols", self.khat_x0.cols(), n),
            ("khat_r0 rows", self.khat_r0.rows(), m),
            ("khat_r0 cols", self.khat_r0.cols(), m),
            ("reference signal channels", self.reference_signal.dim(), m),
            ("disturbance channels", self.disturbance.base.dim(), n),
        ];
        for (what, got, expected) in dims {
            if got != expected {
                return Err(Error::DimensionMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        self.constraints.validate()?;
        self.reference_signal.validate()?;
        self.disturbance.validate()?;
        if self.disturbance.norm_cap > self.constraints.d_bar {
            return Err(Error::invalid(
                "signals.disturbance.cap",
                "exceeds constraints.d_bar",
            ));
        }
        ProjectionParams::new(self.constraints.kx_bar, self.projection_epsilon)?;
        if !(self.dt > 0.0)
            || !(self.t_end > 0.0)
            || !self.dt.is_finite()
            || !self.t_end.is_finite()
        {
            return Err(Error::invalid("sim", "dt and t_end must be positive"));
        }
        if self.log_stride == 0 {
            return Err(Error::invalid("sim.log_stride", "must be at least 1"));
        }
        for (name, v) in [("x0", &self.x0), ("xr0", &self.xr0)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        for (name, k, bound) in [
            ("khat_x0", &self.khat_x0, self.constraints.kx_bar),
            ("khat_r0", &self.khat_r0, self.constraints.kr_bar),
        ] {
            if k.frobenius_norm() > bound {
                return Err(Error::invalid(
                    name,
                    "initial estimate lies outside its projection ball",
                ));
            }
        }
        Ok(())
    }

    /// Conservative `r_bar` over the configured horizon.
    pub fn r_bar(&self) -> f64 {
        sup_norm_bound(&self.reference_signal, self.t_end, R_BAR_SAMPLES)
    }

    pub fn feasibility(&self) -> Result<FeasibilityReport> {
        analyze(
            &self.constraints,
            &self.gains.q,
            &self.gains.p,
            &self.plant.b,
            self.r_bar(),
        )
    }
}

/// Total packed length `n + n + m n + m m`.
pub fn packed_len(n: usize, m: usize) -> usize {
    2 * n + m * n + m * m
}

pub fn pack_state(x: &[f64], x_r: &[f64], kx_hat: &Matrix, kr_hat: &Matrix) -> Result<Vec<f64>> {
    let n = x.len();
    let m = kr_hat.rows();
    if x_r.len() != n || kx_hat.shape() != (m, n) || !kr_hat.is_square() {
        return Err(Error::DimensionMismatch {
            what: "pack_state operands",
            expected: packed_len(n, m),
            got: x_r.len() + n + kx_hat.rows() * kx_hat.cols() + kr_hat.rows() * kr_hat.cols(),
        });
    }
    let mut out = Vec::with_capacity(packed_len(n, m));
    out.extend_from_slice(x);
    out.extend_from_slice(x_r);
    out.extend(kx_hat.to_col_major());
    out.extend(kr_hat.to_col_major());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnpackedState {
    pub x: Vec<f64>,
    pub x_r: Vec<f64>,
    pub kx_hat: Matrix,
    pub kr_hat: Matrix,
}

pub fn unpack_state(packed: &[f64], n: usize, m: usize) -> Result<UnpackedState> {
    if packed.len() != packed_len(n, m) {
        return Err(Error::DimensionMismatch {
            what: "packed state",
            expected: packed_len(n, m),
            got: packed.len(),
        });
    }
    let (x, rest) = packed.split_at(n);
    let (x_r, rest) = rest.split_at(n);
    let (kx, kr) = rest.split_at(m * n);
    Ok(UnpackedState {
        x: x.to_vec(),
        x_r: x_r.to_vec(),
        kx_hat: Matrix::from_col_major(m, n, kx)?,
        kr_hat: Matrix::from_col_major(m, m, kr)?,
    })
}

/// Algebraic signals at one instant.
#[derive(Debug, Clone)]
pub struct Instant {
    pub state: UnpackedState,
    pub x_a: Vec<f64>,
    pub e: Vec<f64>,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub epe: f64,
}

/// Closed-loop right-hand side with everything derived from the config
/// precomputed.
#[derive(Debug, Clone)]
pub struct ClosedLoop<'a> {
    cfg: &'a SimConfig,
    xi_prime: f64,
    proj_x: ProjectionParams,
    proj_r: ProjectionParams,
    /// `lambda_max(Gamma) lambda_max(B^T P B)` for the two gain blocks.
    coupling_x: f64,
    coupling_r: f64,
}

/// Result of [`ClosedLoop::advance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Advance {
    pub state: Vec<f64>,
    pub substeps: usize,
    pub halvings: u32,
    /// Whether a gain clamp fired in any substep.
    pub clamped: bool,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self> {
        let (p_min, _) = eig_sym_extremes(&cfg.gains.p)?;
        let b = &cfg.plant.b;
        let (_, btpb) =
            eig_sym_extremes(&b.transpose().matmul(&cfg.gains.p.matmul(b)?)?.symmetrized())?;
        let (_, gx) = eig_sym_extremes(&cfg.gains.gamma_x.symmetrized())?;
        let (_, gr) = eig_sym_extremes(&cfg.gains.gamma_r.symmetrized())?;
        Ok(Self {
            cfg,
            xi_prime: cfg.constraints.xi_prime(p_min),
            proj_x: ProjectionParams::new(cfg.constraints.kx_bar, cfg.projection_epsilon)?,
            proj_r: ProjectionParams::new(cfg.constraints.kr_bar, cfg.projection_epsilon)?,
            coupling_x: gx * btpb,
            coupling_r: gr * btpb,
        })
    }

    pub fn xi_prime(&self) -> f64 {
        self.xi_prime
    }

    pub fn barrier_level(&self) -> f64 {
        self.xi_prime * self.xi_prime
    }

    pub fn instant(&self, t: f64, packed: &[f64]) -> Result<Instant> {
        let cfg = self.cfg;
        let state = unpack_state(packed, cfg.n(), cfg.m())?;
        let x_a = auxiliary_reference(&state.x_r, &cfg.constraints, cfg.aux_variant);
        let e = sub(&state.x, &x_a);
        let r = eval_reference(&cfg.reference_signal, t, cfg.m())?;
        let ctrl = ControllerState {
            kx_hat: state.kx_hat.clone(),
            kr_hat: state.kr_hat.clone(),
        };
        let v = auxiliary_control(&ctrl, &state.x, &r)?;
        let u = saturate(&v, cfg.constraints.u_bar);
        let d = eval_disturbance(&cfg.disturbance, t, cfg.n())?;
        let epe = cfg.gains.p.quad_form(&e)?;
        Ok(Instant {
            state,
            x_a,
            e,
            r,
            v,
            u,
            d,
            epe,
        })
    }

    pub fn derivative(&self, t: f64, packed: &[f64]) -> Result<Vec<f64>> {
        let cfg = self.cfg;
        let s = self.instant(t, packed)?;
        let dx = plant_derivative(&cfg.plant, &s.state.x, &s.u, &s.d)?;
        let dxr = reference_derivative(&cfg.reference, &s.state.x_r, &s.r)?;
        let (raw_x, raw_r) = match cfg.gains.law {
            AdaptiveLaw::Blf => blf_raw_rates(
                &cfg.gains,
                &cfg.plant.b,
                &s.e,
                &s.state.x,
                &s.r,
                self.xi_prime,
            )?,
            AdaptiveLaw::Classical => {
                classical_raw_rates(&cfg.gains, &cfg.plant.b, &s.e, &s.state.x, &s.r)?
            }
        };
        let rate_x = project(&s.state.kx_hat, &raw_x, &self.proj_x);
        let rate_r = project(&s.state.kr_hat, &raw_r, &self.proj_r);
        let out = pack_state(&dx, &dxr, &rate_x, &rate_r)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("closed-loop derivative"));
        }
        Ok(out)
    }

    fn barrier_ok(&self, packed: &[f64]) -> Result<()> {
        if self.cfg.gains.law != AdaptiveLaw::Blf {
            return Ok(());
        }
        let st = unpack_state(packed, self.cfg.n(), self.cfg.m())?;
        let x_a = auxiliary_reference(&st.x_r, &self.cfg.constraints, self.cfg.aux_variant);
        let epe = self.cfg.gains.p.quad_form(&sub(&st.x, &x_a))?;
        let level = self.barrier_level();
        if epe >= level * (1.0 - BARRIER_GUARD) {
            return Err(Error::BarrierBreach { ratio: epe / level });
        }
        Ok(())
    }

    /// Post-step safety net: pulls gain estimates back onto their balls.
    fn clamp_gains(&self, packed: &mut [f64]) -> bool {
        let (n, m) = (self.cfg.n(), self.cfg.m());
        let mut clamped = false;
        let ranges = [
            (2 * n..2 * n + m * n, self.cfg.constraints.kx_bar),
            (2 * n + m * n..packed_len(n, m), self.cfg.constraints.kr_bar),
        ];
        for (range, bound) in ranges {
            let slice = &mut packed[range];
            let mut mat =
                Matrix::from_row_major(1, slice.len(), slice.to_vec()).expect("consistent length");
            if radial_clamp(&mut mat, bound) {
                slice.copy_from_slice(mat.as_slice());
                clamped = true;
            }
        }
        clamped
    }

    /// Estimated angular frequency of the error/gain oscillation,
    /// `sqrt((c_x ||x||^2 + c_r ||r||^2) / gap)` with `gap = xi'^2 - e'Pe`
    /// for the barrier law and one for the classical law.
    pub fn fast_frequency(&self, t: f64, packed: &[f64]) -> Result<f64> {
        let s = self.instant(t, packed)?;
        let gap = match self.cfg.gains.law {
            AdaptiveLaw::Blf => self.barrier_level() - s.epe,
            AdaptiveLaw::Classical => 1.0,
        };
        if !(gap > 0.0) {
            return Ok(f64::INFINITY);
        }
        let load =
            self.coupling_x * dot(&s.state.x, &s.state.x) + self.coupling_r * dot(&s.r, &s.r);
        Ok((load / gap).sqrt())
    }

    /// Advances by `h` in equal RK4 substeps sized by [`Self::fast_frequency`]
    /// and [`STIFFNESS_LIMIT`], halving a substep recursively on barrier breach.
    pub fn advance(&self, t: f64, y: &[f64], h: f64) -> Result<Advance> {
        self.advance_with(t, y, h, |_, _, _| Ok(()))
    }

    /// [`Self::advance`], calling `visit(t, state, clamped)` after every substep.
    pub fn advance_with<F>(&self, t: f64, y: &[f64], h: f64, mut visit: F) -> Result<Advance>
    where
        F: FnMut(f64, &[f64], bool) -> Result<()>,
    {
        let omega = self.fast_frequency(t, y)?;
        let substeps = if omega.is_finite() {
            ((h * omega / STIFFNESS_LIMIT).ceil() as usize).clamp(1, MAX_SUBSTEPS)
        } else {
            MAX_SUBSTEPS
        };
        let hs = h / substeps as f64;
        let mut out = Advance {
            state: y.to_vec(),
            substeps,
            halvings: 0,
            clamped: false,
        };
        for k in 0..substeps {
            let (next, halvings, clamped) =
                self.advance_depth(t + k as f64 * hs, &out.state, hs, 0)?;
            let ts = if k + 1 == substeps {
                t + h
            } else {
                t + (k + 1) as f64 * hs
            };
            visit(ts, &next, clamped)?;
            out.state = next;
            out.halvings += halvings;
            out.clamped |= clamped;
        }
        Ok(out)
    }

    fn advance_depth(
        &self,
        t: f64,
        y: &[f64],
        h: f64,
        depth: u32,
    ) -> Result<(Vec<f64>, u32, bool)> {
        let attempt = try_rk4_step(|t, y| self.derivative(t, y), t, y, h).and_then(|mut next| {
            self.barrier_ok(&next)?;
            let clamped = self.clamp_gains(&mut next);
            Ok((next, clamped))
        });
        match attempt {
            Ok((next, clamped)) => Ok((next, 0, clamped)),
            Err(Error::BarrierBreach { .. }) if depth < MAX_HALVINGS => {
                let half = 0.5 * h;
                let (mid, h1, c1) = self.advance_depth(t, y, half, depth + 1)?;
                let (end, h2, c2) = self.advance_depth(t + half, &mid, half, depth + 1)?;
                Ok((end, 1 + h1 + h2, c1 || c2))
            }
            Err(e) => Err(e),
        }
    }
}

/// Free-function form of [`ClosedLoop::derivative`].
pub fn closed_loop_derivative(cfg: &SimConfig, t: f64, packed: &[f64]) -> Result<Vec<f64>> {
    ClosedLoop::new(cfg)?.derivative(t, packed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub x_r: Vec<f64>,
    pub x_a: Vec<f64>,
    pub u: Vec<f64>,
    pub v_norm: f64,
    /// `||u - v||`
    pub delta_u_norm: f64,
    pub d: Vec<f64>,
    pub e_norm: f64,
    pub epe: f64,
    /// Barrier value; NaN for the classical law, +inf outside the barrier set.
    pub blf_v1: f64,
    pub khat_x_fro: f64,
    pub khat_r_fro: f64,
    pub clamp_triggered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbortInfo {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub m: usize,
    pub law: AdaptiveLaw,
    pub records: Vec<LogRecord>,
    pub abort: Option<AbortInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryMetrics {
    pub max_x_norm: f64,
    pub max_u_norm: f64,
    pub max_v_norm: f64,
    pub max_e_norm: f64,
    pub max_epe_over_xiprime2: f64,
    pub state_constraint_ok: bool,
    pub input_constraint_ok: bool,
    pub omega_e_ok: bool,
    pub final_e_norm: f64,
    pub saturation_fraction: f64,
    pub clamp_count: usize,
    pub max_khat_x_fro: f64,
    pub max_khat_r_fro: f64,
    pub steps: usize,
    /// RK4 substeps taken, before any halving.
    pub substeps: usize,
    pub halvings: u32,
    pub aborted: bool,
}

impl SummaryMetrics {
    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "max_x_norm={:.17e}", self.max_x_norm);
        let _ = writeln!(s, "max_u_norm={:.17e}", self.max_u_norm);
        let _ = writeln!(s, "max_v_norm={:.17e}", self.max_v_norm);
        let _ = writeln!(s, "max_e_norm={:.17e}", self.max_e_norm);
        let _ = writeln!(
            s,
            "max_eTPe_over_xiprime2={:.17e}",
            self.max_epe_over_xiprime2
        );
        let _ = writeln!(s, "state_constraint_ok={}", self.state_constraint_ok);
        let _ = writeln!(s, "input_constraint_ok={}", self.input_constraint_ok);
        let _ = writeln!(s, "omega_e_ok={}", self.omega_e_ok);
        let _ = writeln!(s, "final_e_norm={:.17e}", self.final_e_norm);
        let _ = writeln!(s, "saturation_fraction={:.17e}", self.saturation_fraction);
        let _ = writeln!(s, "clamp_count={}", self.clamp_count);
        let _ = writeln!(s, "max_khatx_fro={:.17e}", self.max_khat_x_fro);
        let _ = writeln!(s, "max_khatr_fro={:.17e}", self.max_khat_r_fro);
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "substeps={}", self.substeps);
        let _ = writeln!(s, "halvings={}", self.halvings);
        let _ = writeln!(s, "aborted={}", self.aborted);
        s
    }
}

/// Running maxima over records; shared by [`run_scenario`] (every step) and
/// [`compute_metrics`] (logged records only).
struct MetricsAccumulator {
    x_bar: f64,
    u_bar: f64,
    level: f64,
    max_x: f64,
    max_u: f64,
    max_v: f64,
    max_e: f64,
    max_ratio: f64,
    max_kx: f64,
    max_kr: f64,
    saturated: usize,
    clamps: usize,
    count: usize,
    last_e: f64,
}

impl MetricsAccumulator {
    fn new(cs: &ConstraintSpec, level: f64) -> Self {
        Self {
            x_bar: cs.x_bar,
            u_bar: cs.u_bar,
            level,
            max_x: 0.0,
            max_u: 0.0,
            max_v: 0.0,
            max_e: 0.0,
            max_ratio: 0.0,
            max_kx: 0.0,
            max_kr: 0.0,
            saturated: 0,
            clamps: 0,
            count: 0,
            last_e: 0.0,
        }
    }

    fn push(&mut self, rec: &LogRecord) {
        self.max_x = self.max_x.max(norm(&rec.x));
        self.max_u = self.max_u.max(norm(&rec.u));
        self.max_v = self.max_v.max(rec.v_norm);
        self.max_e = self.max_e.max(rec.e_norm);
        self.max_ratio = self.max_ratio.max(rec.epe / self.level);
        self.max_kx = self.max_kx.max(rec.khat_x_fro);
        self.max_kr = self.max_kr.max(rec.khat_r_fro);
        if rec.v_norm > self.u_bar {
            self.saturated += 1;
        }
        if rec.clamp_triggered {
            self.clamps += 1;
        }
        self.count += 1;
        self.last_e = rec.e_norm;
    }

    fn finish(
        &self,
        steps: usize,
        substeps: usize,
        halvings: u32,
        aborted: bool,
    ) -> SummaryMetrics {
        SummaryMetrics {
            max_x_norm: self.max_x,
            max_u_norm: self.max_u,
            max_v_norm: self.max_v,
            max_e_norm: self.max_e,
            max_epe_over_xiprime2: self.max_ratio,
            state_constraint_ok: self.max_x < self.x_bar,
            input_constraint_ok: self.max_u <= self.u_bar + input_tolerance(self.u_bar),
            omega_e_ok: self.max_ratio < 1.0,
            final_e_norm: self.last_e,
            saturation_fraction: if self.count == 0 {
                0.0
            } else {
                self.saturated as f64 / self.count as f64
            },
            clamp_count: self.clamps,
            max_khat_x_fro: self.max_kx,
            max_khat_r_fro: self.max_kr,
            steps,
            substeps,
            halvings,
            aborted,
        }
    }
}

/// Summary over the records of a trajectory.
pub fn compute_metrics(
    traj: &Trajectory,
    cs: &ConstraintSpec,
    p: &Matrix,
) -> Result<SummaryMetrics> {
    if traj.records.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let (p_min, _) = eig_sym_extremes(p)?;
    let xi_prime = cs.xi_prime(p_min);
    let mut acc = MetricsAccumulator::new(cs, xi_prime * xi_prime);
    traj.records.iter().for_each(|r| acc.push(r));
    Ok(acc.finish(
        traj.records.len().saturating_sub(1),
        0,
        0,
        traj.abort.is_some(),
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Simulate the barrier law even when the feasibility condition fails.
    pub override_feasibility: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    /// Computed after every RK4 substep, not only at logged steps.
    pub metrics: SummaryMetrics,
    pub feasibility: FeasibilityReport,
}

fn record(lp: &ClosedLoop<'_>, t: f64, y: &[f64], clamp: bool) -> Result<LogRecord> {
    let s = lp.instant(t, y)?;
    let blf_v1 = match lp.cfg.gains.law {
        AdaptiveLaw::Blf => blf_value(&s.e, &lp.cfg.gains.p, lp.xi_prime).unwrap_or(f64::INFINITY),
        AdaptiveLaw::Classical => f64::NAN,
    };
    let v_norm = norm(&s.v);
    Ok(LogRecord {
        t,
        delta_u_norm: norm(&sub(&s.u, &s.v)),
        v_norm,
        e_norm: norm(&s.e),
        epe: s.epe,
        blf_v1,
        khat_x_fro: s.state.kx_hat.frobenius_norm(),
        khat_r_fro: s.state.kr_hat.frobenius_norm(),
        clamp_triggered: clamp,
        x: s.state.x,
        x_r: s.state.x_r,
        x_a: s.x_a,
        u: s.u,
        d: s.d,
    })
}

/// Runs the configured scenario from `t = 0` to `t_end`.
///
/// The barrier law is gated on the feasibility condition unless overridden,
/// and requires the initial tracking error inside the barrier set. A breach
/// that survives [`MAX_HALVINGS`] halvings, or a non-finite state, ends the
/// run early with [`Trajectory::abort`] set; the partial log is kept.
pub fn run_scenario(cfg: &SimConfig, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let feasibility = cfg.feasibility()?;
    let lp = ClosedLoop::new(cfg)?;
    if cfg.law() == AdaptiveLaw::Blf {
        if !feasibility.c1_satisfied && !opts.override_feasibility {
            return Err(Error::InfeasibleConfig {
                margin: feasibility.c1_margin,
            });
        }
        let x_a0 = auxiliary_reference(&cfg.xr0, &cfg.constraints, cfg.aux_variant);
        let epe0 = cfg.gains.p.quad_form(&sub(&cfg.x0, &x_a0))?;
        if epe0 >= lp.barrier_level() {
            return Err(Error::invalid(
                "sim.x0",
                format!(
                    "initial tracking error outside the barrier set (e'Pe / xi'^2 = {:.6})",
                    epe0 / lp.barrier_level()
                ),
            ));
        }
    }
    if let Some(x0_bar) = cfg.constraints.x0_bar {
        if norm(&cfg.x0) >= x0_bar {
            return Err(Error::invalid(
                "sim.x0",
                "||x0|| must be below constraints.x0_bar",
            ));
        }
    }

    let steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let mut y = pack_state(&cfg.x0, &cfg.xr0, &cfg.khat_x0, &cfg.khat_r0)?;
    let mut acc = MetricsAccumulator::new(&cfg.constraints, lp.barrier_level());
    let mut records = Vec::with_capacity(steps / cfg.log_stride + 2);
    let mut abort = None;
    let mut halvings = 0;
    let mut substeps = 0;

    let first = record(&lp, 0.0, &y, false)?;
    acc.push(&first);
    records.push(first);
    let mut done = 0;
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let mut last = None;
        let step = lp.advance_with(t, &y, cfg.dt, |ts, ys, clamped| {
            let rec = record(&lp, ts, ys, clamped)?;
            acc.push(&rec);
            last = Some(rec);
            Ok(())
        });
        match step {
            Ok(adv) => {
                y = adv.state;
                halvings += adv.halvings;
                substeps += adv.substeps;
                done += 1;
                if done % cfg.log_stride == 0 || done == steps {
                    records.extend(last);
                }
            }
            Err(
                e @ (Error::BarrierBreach { .. }
                | Error::NonFinite(_)
                | Error::NonFiniteDerivative { .. }),
            ) => {
                abort = Some(AbortInfo {
                    t,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let metrics = acc.finish(done, substeps, halvings, abort.is_some());
    Ok(RunOutput {
        trajectory: Trajectory {
            n: cfg.n(),
            m: cfg.m(),
            law: cfg.law(),
            records,
            abort,
        },
        metrics,
        feasibility,
    })
}

fn push_float(out: &mut String, v: f64) {
    out.push(',');
    let _ = write!(out, "{v:.16e}");
}

impl Trajectory {
    pub fn csv_header(n: usize, m: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=n).map(|i| format!("x_{i}")));
        cols.extend((1..=n).map(|i| format!("xr_{i}")));
        cols.extend((1..=n).map(|i| format!("xa_{i}")));
        cols.extend((1..=m).map(|i| format!("u_{i}")));
        cols.push("v_norm".into());
        cols.push("delta_u_norm".into());
        cols.extend((1..=n).map(|i| format!("d_{i}")));
        for c in [
            "e_norm",
            "eTPe",
            "blf_v1",
            "khatx_fro",
            "khatr_fro",
            "clamp",
        ] {
            cols.push(c.into());
        }
        cols.join(",")
    }

    /// CSV with the fixed column order and 17 significant digits per float.
    /// An aborted run ends with a `# aborted ...` line.
    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.n, self.m);
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{:.16e}", r.t);
            for v in r.x.iter().chain(&r.x_r).chain(&r.x_a).chain(&r.u) {
                push_float(&mut out, *v);
            }
            push_float(&mut out, r.v_norm);
            push_float(&mut out, r.delta_u_norm);
            for v in &r.d {
                push_float(&mut out, *v);
            }
            for v in [r.e_norm, r.epe, r.blf_v1, r.khat_x_fro, r.khat_r_fro] {
                push_float(&mut out, v);
            }
            let _ = writeln!(out, ",{}", u8::from(r.clamp_triggered));
        }
        if let Some(a) = &self.abort {
            let _ = writeln!(out, "# aborted at t={:.16e}: {}", a.t, a.reason);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_scalar_round_trip() {
        let kx = Matrix::diag(&[3.0]);
        let kr = Matrix::diag(&[4.0]);
        let packed = pack_state(&[1.0], &[2.0], &kx, &kr).unwrap();
        assert_eq!(packed, vec![1.0, 2.0, 3.0, 4.0]);
        let st = unpack_state(&packed, 1, 1).unwrap();
        assert_eq!(
            (st.x, st.x_r, st.kx_hat, st.kr_hat),
            (vec![1.0], vec![2.0], kx, kr)
        );
    }

    #[test]
    fn packed_lengths() {
        assert_eq!(packed_len(4, 2), 20);
        let z = pack_state(
            &[0.0; 4],
            &[0.0; 4],
            &Matrix::zeros(2, 4),
            &Matrix::zeros(2, 2),
        )
        .unwrap();
        assert_eq!(z, vec![0.0; 20]);
        assert!(unpack_state(&z[..19], 4, 2).is_err());
        assert!(pack_state(
            &[0.0; 4],
            &[0.0; 3],
            &Matrix::zeros(2, 4),
            &Matrix::zeros(2, 2)
        )
        .is_err());
    }

    #[test]
    fn csv_header_layout() {
        assert_eq!(
            Trajectory::csv_header(2, 1),
            "t,x_1,x_2,xr_1,xr_2,xa_1,xa_2,u_1,v_norm,delta_u_norm,d_1,d_2,e_norm,eTPe,blf_v1,khatx_fro,khatr_fro,clamp"
        );
    }

    #[test]
    fn empty_trajectory_rejected() {
        let traj = Trajectory {
            n: 1,
            m: 1,
            law: AdaptiveLaw::Blf,
            records: vec![],
            abort: None,
        };
        let cs = ConstraintSpec {
            x_bar: 1.0,
            u_bar: 1.0,
            xa_bar: 0.5,
            d_bar: 0.0,
            kx_bar: 1.0,
            kr_bar: 1.0,
            x0_bar: None,
            xr_bar: None,
        };
        assert_eq!(
            compute_metrics(&traj, &cs, &Matrix::identity(1)),
            Err(Error::EmptyTrajectory)
        );
    }
}
