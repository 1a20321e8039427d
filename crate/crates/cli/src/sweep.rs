use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use cmrac_core::controller::AdaptiveLaw;
use cmrac_core::plot::{Guide, Heatmap, LinePlot, Series};
use cmrac_core::sim::{run_scenario, RunOptions, SimConfig, SummaryMetrics};
use cmrac_core::Error;
use rayon::prelude::*;

use crate::commands::{analyze, ensure_dir, load, write};
use crate::manifest::RunManifest;
use crate::{Failure, Source, EXIT_CONFIG};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisName {
    UBar,
    XBar,
    DBar,
    GammaScale,
    X0Scale,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::UBar => "u_bar",
            AxisName::XBar => "x_bar",
            AxisName::DBar => "d_bar",
            AxisName::GammaScale => "gamma_scale",
            AxisName::X0Scale => "x0_scale",
        }
    }
}

impl FromStr for AxisName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "u_bar" => AxisName::UBar,
            "x_bar" => AxisName::XBar,
            "d_bar" => AxisName::DBar,
            "gamma_scale" => AxisName::GammaScale,
            "x0_scale" => AxisName::X0Scale,
            _ => {
                return Err(format!(
                    "unknown axis `{s}` (u_bar, x_bar, d_bar, gamma_scale, x0_scale)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

/// `name=lo:hi:count`; `name=value` is a single cell.
pub fn parse_axis(s: &str) -> Result<Axis, String> {
    let (name, spec) = s.split_once('=').ok_or("expected name=lo:hi:count")?;
    let name: AxisName = name.trim().parse()?;
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p}: {e}"));
    let values = match parts.as_slice() {
        [v] => vec![num(v)?],
        [lo, hi, count] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize = count.trim().parse().map_err(|e| format!("{count}: {e}"))?;
            match count {
                0 => return Err("count must be at least 1".into()),
                1 => vec![lo],
                _ => (0..count)
                    .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
                    .collect(),
            }
        }
        _ => return Err("expected name=lo:hi:count or name=value".into()),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err("axis values must be finite".into());
    }
    Ok(Axis { name, values })
}

/// Applies one axis value to a copy of the base config.
pub fn apply(cfg: &mut SimConfig, base: &SimConfig, name: AxisName, v: f64) {
    match name {
        AxisName::UBar => cfg.constraints.u_bar = v,
        AxisName::XBar => cfg.constraints.x_bar = v,
        AxisName::DBar => {
            cfg.constraints.d_bar = v;
            cfg.disturbance.norm_cap = v;
        }
        AxisName::GammaScale => {
            cfg.gains.gamma_x = base.gains.gamma_x.scaled(v);
            cfg.gains.gamma_r = base.gains.gamma_r.scaled(v);
        }
        AxisName::X0Scale => cfg.x0 = base.x0.iter().map(|x| x * v).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub coords: Vec<f64>,
    pub status: String,
    pub c1_feasible: bool,
    pub c1_margin: f64,
    pub min_u_bar: f64,
    pub metrics: Option<SummaryMetrics>,
}

pub fn evaluate(
    base: &SimConfig,
    axes: &[Axis],
    coords: &[f64],
    simulate: bool,
    opts: RunOptions,
) -> Cell {
    let mut cfg = base.clone();
    for (axis, &v) in axes.iter().zip(coords) {
        apply(&mut cfg, base, axis.name, v);
    }
    let mut cell = Cell {
        coords: coords.to_vec(),
        status: "ok".into(),
        c1_feasible: false,
        c1_margin: f64::NAN,
        min_u_bar: f64::NAN,
        metrics: None,
    };
    if let Err(e) = cfg.validate().and_then(|_| cfg.feasibility()).map(|rep| {
        cell.c1_feasible = rep.c1_satisfied;
        cell.c1_margin = rep.c1_margin;
        cell.min_u_bar = rep.min_u_bar;
    }) {
        cell.status = format!("invalid: {e}");
        return cell;
    }
    if simulate {
        cfg.log_stride = ((cfg.t_end / cfg.dt).round() as usize).max(1);
        match run_scenario(&cfg, opts) {
            Ok(run) => {
                if let Some(a) = &run.trajectory.abort {
                    cell.status = format!("aborted at t={:.6}", a.t);
                }
                cell.metrics = Some(run.metrics);
            }
            Err(Error::InfeasibleConfig { .. }) => cell.status = "infeasible".into(),
            Err(e) => cell.status = format!("invalid: {e}"),
        }
    }
    cell
}

fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    match axes {
        [a] => a.values.iter().map(|&v| vec![v]).collect(),
        [a, b] => a
            .values
            .iter()
            .flat_map(|&u| b.values.iter().map(move |&v| vec![u, v]))
            .collect(),
        _ => Vec::new(),
    }
}

fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn to_csv(axes: &[Axis], cells: &[Cell], simulate: bool) -> String {
    let mut s: String = axes
        .iter()
        .map(|a| format!("{},", a.name.as_str()))
        .collect();
    s.push_str("c1_feasible,c1_margin,min_u_bar,status");
    if simulate {
        s.push_str(",max_x_norm,max_u_norm,max_e_norm,max_eTPe_over_xiprime2,state_constraint_ok,input_constraint_ok,omega_e_ok,saturation_fraction");
    }
    s.push('\n');
    for c in cells {
        for v in &c.coords {
            let _ = write!(s, "{},", csv_float(*v));
        }
        let _ = write!(
            s,
            "{},{},{},{}",
            u8::from(c.c1_feasible),
            csv_float(c.c1_margin),
            csv_float(c.min_u_bar),
            c.status.replace(',', ";")
        );
        if simulate {
            match &c.metrics {
                Some(m) => {
                    let _ = write!(
                        s,
                        ",{},{},{},{},{},{},{},{}",
                        csv_float(m.max_x_norm),
                        csv_float(m.max_u_norm),
                        csv_float(m.max_e_norm),
                        csv_float(m.max_epe_over_xiprime2),
                        u8::from(m.state_constraint_ok),
                        u8::from(m.input_constraint_ok),
                        u8::from(m.omega_e_ok),
                        csv_float(m.saturation_fraction)
                    );
                }
                None => s.push_str(",,,,,,,,"),
            }
        }
        s.push('\n');
    }
    s
}

fn metric(c: &Cell, f: fn(&SummaryMetrics) -> f64) -> f64 {
    c.metrics.as_ref().map(f).unwrap_or(f64::NAN)
}

fn plots(axes: &[Axis], cells: &[Cell], base: &SimConfig, simulate: bool) -> Vec<(String, String)> {
    let mut out = Vec::new();
    type Field = (&'static str, fn(&Cell) -> f64);
    let mut fields: Vec<Field> = vec![("c1_margin", |c| c.c1_margin)];
    if simulate {
        fields.push(("max_x_norm", |c| metric(c, |m| m.max_x_norm)));
        fields.push(("max_u_norm", |c| metric(c, |m| m.max_u_norm)));
    }
    match axes {
        [a] => {
            for (name, f) in fields {
                let guides = match name {
                    "max_x_norm" => vec![Guide {
                        label: "x_bar".into(),
                        value: base.constraints.x_bar,
                    }],
                    "max_u_norm" => vec![Guide {
                        label: "u_bar".into(),
                        value: base.constraints.u_bar,
                    }],
                    _ => vec![Guide {
                        label: "zero".into(),
                        value: 0.0,
                    }],
                };
                let plot = LinePlot {
                    title: format!("{name} over {}", a.name.as_str()),
                    x_label: a.name.as_str().into(),
                    y_label: name.into(),
                    series: vec![Series {
                        label: name.into(),
                        points: cells.iter().map(|c| (c.coords[0], f(c))).collect(),
                    }],
                    guides,
                };
                out.push((format!("sweep_{name}.svg"), plot.to_svg()));
            }
        }
        [a, b] => {
            for (name, f) in fields {
                let values = (0..b.values.len())
                    .map(|j| {
                        (0..a.values.len())
                            .map(|i| f(&cells[i * b.values.len() + j]))
                            .collect()
                    })
                    .collect();
                let map = Heatmap {
                    title: format!("{name} over ({}, {})", a.name.as_str(), b.name.as_str()),
                    x_label: a.name.as_str().into(),
                    y_label: b.name.as_str().into(),
                    x_axis: a.values.clone(),
                    y_axis: b.values.clone(),
                    values,
                    line: None,
                    legend: None,
                };
                out.push((format!("sweep_{name}.svg"), map.to_svg()));
            }
        }
        _ => {}
    }
    out
}

pub fn run(
    src: &Source,
    out: &Path,
    axes: &[Axis],
    simulate: bool,
    law: Option<AdaptiveLaw>,
    override_feasibility: bool,
) -> Result<(), Failure> {
    if axes.len() > 2 {
        return Err(Failure::new(EXIT_CONFIG, "at most two sweep axes"));
    }
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(Failure::new(EXIT_CONFIG, "sweep axes must differ"));
    }
    let loaded = load(src)?;
    let base = loaded.resolve(law)?;
    let rep = analyze(&base)?;
    ensure_dir(out)?;
    RunManifest::new("sweep", &loaded.source, &loaded.text, out, &base, &rep).write(out)?;
    let opts = RunOptions {
        override_feasibility,
    };
    let cells: Vec<Cell> = grid(axes)
        .par_iter()
        .map(|coords| evaluate(&base, axes, coords, simulate, opts))
        .collect();
    let csv = to_csv(axes, &cells, simulate);
    write(out, "sweep.csv", &csv)?;
    for (name, svg) in plots(axes, &cells, &base, simulate) {
        write(out, &name, &svg)?;
    }
    let feasible = cells.iter().filter(|c| c.c1_feasible).count();
    println!(
        "{} cells, {} satisfy C1; wrote {}",
        cells.len(),
        feasible,
        out.display()
    );
    Ok(())
}
