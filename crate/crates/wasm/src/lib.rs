//! Browser bindings: feasible-region rendering, the benchmark feasibility
//! report, and benchmark simulations. Every export returns a string (SVG or
//! JSON) or an error message.

use cmrac_core::config::load_for;
use cmrac_core::config::BENCHMARK;
use cmrac_core::controller::AdaptiveLaw;
use cmrac_core::feasibility::build_region_grid;
use cmrac_core::plot::{region_heatmap, trajectory_plots};
use cmrac_core::sim::{run_scenario, RunOptions, SimConfig};
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest grid accepted by [`feasibility_region`].
pub const MAX_RESOLUTION: usize = 400;
/// Longest horizon accepted by [`simulate_benchmark`], in seconds.
pub const MAX_HORIZON: f64 = 60.0;

/// SVG of the set `u_bar > alpha x_bar + beta` over a rectangle.
#[wasm_bindgen]
pub fn feasibility_region(
    alpha: f64,
    beta: f64,
    u_max: f64,
    x_max: f64,
    resolution: usize,
) -> Result<String, String> {
    if resolution > MAX_RESOLUTION {
        return Err(format!("resolution above {MAX_RESOLUTION}"));
    }
    let grid = build_region_grid(
        (u_max / 100.0, u_max),
        (x_max / 100.0, x_max),
        alpha,
        beta,
        resolution,
    )
    .map_err(|e| e.to_string())?;
    let title = format!("Feasible set, alpha = {alpha}, beta = {beta}");
    Ok(region_heatmap(&grid, &title).to_svg())
}

fn benchmark(law: AdaptiveLaw, u_bar: f64, x_bar: f64, d_bar: f64) -> Result<SimConfig, String> {
    let mut cfg = load_for(BENCHMARK, law).map_err(|e| e.to_string())?;
    cfg.constraints.u_bar = u_bar;
    cfg.constraints.x_bar = x_bar;
    cfg.constraints.d_bar = d_bar;
    cfg.disturbance.norm_cap = d_bar;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// JSON feasibility report for the benchmark plant under the given bounds,
/// with the region SVG under `region_svg`.
#[wasm_bindgen]
pub fn benchmark_feasibility(u_bar: f64, x_bar: f64, d_bar: f64) -> Result<String, String> {
    let cfg = benchmark(AdaptiveLaw::Blf, u_bar, x_bar, d_bar)?;
    let report = cfg.feasibility().map_err(|e| e.to_string())?;
    let grid = build_region_grid(
        (0.5, 2.0 * u_bar),
        (0.5, 2.0 * x_bar),
        report.alpha,
        report.beta,
        121,
    )
    .map_err(|e| e.to_string())?;
    let title = format!(
        "Feasible set, alpha = {:.4}, beta = {:.4}",
        report.alpha, report.beta
    );
    let mut value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    value["region_svg"] = json!(region_heatmap(&grid, &title).to_svg());
    Ok(value.to_string())
}

/// Runs the benchmark scenario and returns JSON with summary metrics and
/// `x_svg`, `u_svg`, `e_svg` plots. `law` is `"blf"` or `"classical"`.
#[wasm_bindgen]
pub fn simulate_benchmark(
    law: &str,
    u_bar: f64,
    x_bar: f64,
    d_bar: f64,
    t_end: f64,
    override_feasibility: bool,
) -> Result<String, String> {
    let law = match law {
        "blf" => AdaptiveLaw::Blf,
        "classical" => AdaptiveLaw::Classical,
        other => return Err(format!("unknown law `{other}`")),
    };
    if !(t_end > 0.0 && t_end <= MAX_HORIZON) {
        return Err(format!("t_end must lie in (0, {MAX_HORIZON}]"));
    }
    let mut cfg = benchmark(law, u_bar, x_bar, d_bar)?;
    cfg.t_end = t_end;
    let run = run_scenario(
        &cfg,
        RunOptions {
            override_feasibility,
        },
    )
    .map_err(|e| e.to_string())?;
    let m = &run.metrics;
    let plots = trajectory_plots(&[(&law.to_string(), &run.trajectory)], &cfg.constraints);
    let svg = |name: &str| {
        plots
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, p)| p.to_svg())
            .unwrap_or_default()
    };
    Ok(json!({
        "law": law.to_string(),
        "max_x_norm": m.max_x_norm,
        "max_u_norm": m.max_u_norm,
        "max_e_norm": m.max_e_norm,
        "max_eTPe_over_xiprime2": m.max_epe_over_xiprime2,
        "state_constraint_ok": m.state_constraint_ok,
        "input_constraint_ok": m.input_constraint_ok,
        "omega_e_ok": m.omega_e_ok,
        "saturation_fraction": m.saturation_fraction,
        "aborted": run.trajectory.abort.as_ref().map(|a| format!("t = {:.4}: {}", a.t, a.reason)),
        "x_svg": svg("x_norm.svg"),
        "u_svg": svg("u_norm.svg"),
        "e_svg": svg("e_norm.svg"),
    })
    .to_string())
}
