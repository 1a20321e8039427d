use std::fmt::Write as _;

use cmrac_core::feasibility::FeasibilityReport;
use cmrac_core::models::ConstraintSpec;
use cmrac_core::numerics::norm;
use cmrac_core::sim::{RunOutput, SummaryMetrics, Trajectory};

pub fn feasibility_text(cs: &ConstraintSpec, r: &FeasibilityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "eta            = {:.6e}", r.eta);
    let _ = writeln!(s, "alpha          = {:.6}", r.alpha);
    let _ = writeln!(s, "beta           = {:.6}", r.beta);
    let _ = writeln!(s, "sigma          = {:.6}", r.sigma);
    let _ = writeln!(s, "varrho         = {:.6}", r.varrho);
    let _ = writeln!(s, "case           = {}", r.case_label);
    let _ = writeln!(s, "r_bar          = {:.6}", r.r_bar);
    let _ = writeln!(s, "||B||          = {:.6}", r.b_norm);
    let _ = writeln!(
        s,
        "lambda(P)      = [{:.6}, {:.6}]",
        r.p_lambda_min, r.p_lambda_max
    );
    let _ = writeln!(
        s,
        "C1             = {} (u_bar - alpha x_bar - beta = {:.6})",
        if r.c1_satisfied {
            "feasible"
        } else {
            "infeasible"
        },
        r.c1_margin
    );
    let _ = writeln!(
        s,
        "min u_bar      = {:.6} at x_bar = {}",
        r.min_u_bar, cs.x_bar
    );
    let _ = writeln!(
        s,
        "max x_bar      = {} at u_bar = {}",
        r.max_x_bar, cs.u_bar
    );
    let _ = writeln!(
        s,
        "state only     = {} (needs x_bar > {:.6})",
        if r.state_only_satisfied {
            "satisfied"
        } else {
            "not satisfied"
        },
        r.state_only_threshold
    );
    match r.input_only_bound {
        Some(b) => {
            let _ = writeln!(
                s,
                "input only     = {} (needs u_bar > {:.6})",
                if cs.u_bar > b {
                    "satisfied"
                } else {
                    "not satisfied"
                },
                b
            );
        }
        None => {
            let _ = writeln!(s, "input only     = n/a (no x0_bar)");
        }
    }
    s
}

pub fn summary_text(run: &RunOutput, cs: &ConstraintSpec) -> String {
    let m = &run.metrics;
    let mut s = String::new();
    let _ = writeln!(s, "law                 {}", run.trajectory.law);
    let _ = writeln!(
        s,
        "max ||x||           {:.6}  (bound {})",
        m.max_x_norm, cs.x_bar
    );
    let _ = writeln!(
        s,
        "max ||u||           {:.6}  (bound {})",
        m.max_u_norm, cs.u_bar
    );
    let _ = writeln!(
        s,
        "max ||e||           {:.6}  (xi {})",
        m.max_e_norm,
        bound(cs.xi())
    );
    let _ = writeln!(s, "max e'Pe / xi'^2    {:.6}", m.max_epe_over_xiprime2);
    let _ = writeln!(s, "state constraint    {}", verdict(m.state_constraint_ok));
    let _ = writeln!(s, "input constraint    {}", verdict(m.input_constraint_ok));
    let _ = writeln!(s, "barrier set         {}", verdict(m.omega_e_ok));
    let _ = writeln!(s, "saturated steps     {:.4}", m.saturation_fraction);
    let _ = writeln!(s, "gain clamps         {}", m.clamp_count);
    if let Some(a) = &run.trajectory.abort {
        let _ = writeln!(s, "ABORTED at t = {:.6}: {}", a.t, a.reason);
    }
    s
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

fn bound(v: f64) -> String {
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Side-by-side maxima of the barrier and baseline runs.
pub fn comparison_table(
    blf: &SummaryMetrics,
    classical: &SummaryMetrics,
    cs: &ConstraintSpec,
    disturbed: bool,
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24}{:>16}{:>16}{:>12}",
        "metric", "blf", "classical", "bound"
    );
    let rows: [(&str, f64, f64, String); 5] = [
        (
            "max ||x||",
            blf.max_x_norm,
            classical.max_x_norm,
            bound(cs.x_bar),
        ),
        (
            "max ||u||",
            blf.max_u_norm,
            classical.max_u_norm,
            bound(cs.u_bar),
        ),
        (
            "max ||v|| (commanded)",
            blf.max_v_norm,
            classical.max_v_norm,
            String::new(),
        ),
        (
            "max ||e||",
            blf.max_e_norm,
            classical.max_e_norm,
            bound(cs.xi()),
        ),
        (
            "max e'Pe / xi'^2",
            blf.max_epe_over_xiprime2,
            classical.max_epe_over_xiprime2,
            "1".into(),
        ),
    ];
    for (name, a, b, bound) in rows {
        let _ = writeln!(s, "{name:<24}{a:>16.6}{b:>16.6}{bound:>12}");
    }
    let flags = [
        (
            "state constraint",
            blf.state_constraint_ok,
            classical.state_constraint_ok,
        ),
        (
            "input constraint",
            blf.input_constraint_ok,
            classical.input_constraint_ok,
        ),
        ("barrier set", blf.omega_e_ok, classical.omega_e_ok),
    ];
    for (name, a, b) in flags {
        let _ = writeln!(s, "{name:<24}{:>16}{:>16}", verdict(a), verdict(b));
    }
    let _ = writeln!(
        s,
        "{:<24}{:>16}{:>16}",
        "aborted",
        if blf.aborted { "yes" } else { "no" },
        if classical.aborted { "yes" } else { "no" }
    );
    if !disturbed {
        let _ = writeln!(
            s,
            "\nnote: this scenario has no external disturbance, so any baseline violation comes from the adaptation transient alone."
        );
    }
    s
}

/// `t` plus `||x||`, `||u||`, `||e||` of both runs; the shorter run leaves
/// trailing cells empty.
pub fn comparison_csv(blf: &Trajectory, classical: &Trajectory) -> String {
    let mut s = String::from(
        "t,blf_x_norm,blf_u_norm,blf_e_norm,classical_x_norm,classical_u_norm,classical_e_norm\n",
    );
    let rows = blf.records.len().max(classical.records.len());
    for k in 0..rows {
        let t = blf
            .records
            .get(k)
            .or_else(|| classical.records.get(k))
            .map(|r| r.t)
            .unwrap_or(0.0);
        let _ = write!(s, "{t:.16e}");
        for traj in [blf, classical] {
            match traj.records.get(k) {
                Some(r) => {
                    let _ = write!(
                        s,
                        ",{:.16e},{:.16e},{:.16e}",
                        norm(&r.x),
                        norm(&r.u),
                        r.e_norm
                    );
                }
                None => s.push_str(",,,"),
            }
        }
        s.push('\n');
    }
    s
}
