//! Minimal deterministic SVG rendering: line plots with horizontal guide
//! lines, and cell heatmaps.

use std::fmt::Write as _;

use crate::feasibility::RegionGrid;
use crate::models::ConstraintSpec;
use crate::numerics::norm;
use crate::sim::Trajectory;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];
const GUIDE_COLOR: &str = "#444444";
/// Longest polyline emitted per series; longer series are decimated.
pub const MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Dashed horizontal line at `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Guide {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub guides: Vec<Guide>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for v in ticks(f.x0, f.x1) {
        let x = f.px(v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.1}" stroke="black"/><text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            b + 5.0,
            b + 18.0,
            fmt_tick(v)
        );
    }
    for v in ticks(f.y0, f.y1) {
        let y = f.py(v);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 5.0,
            l - 8.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn legend_entry(out: &mut String, k: usize, color: &str, dashed: bool, label: &str) {
    let x = WIDTH - RIGHT + 12.0;
    let y = TOP + 14.0 + 18.0 * k as f64;
    let dash = if dashed {
        r#" stroke-dasharray="6 4""#
    } else {
        ""
    };
    let _ = writeln!(
        out,
        r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
        x + 22.0,
        x + 28.0,
        y + 4.0,
        escape(label)
    );
}

fn decimate(points: &[(f64, f64)]) -> impl Iterator<Item = &(f64, f64)> {
    let stride = points.len().div_ceil(MAX_POINTS).max(1);
    let last = points.len().saturating_sub(1);
    points
        .iter()
        .enumerate()
        .filter(move |(i, _)| i % stride == 0 || *i == last)
        .map(|(_, p)| p)
}

impl LinePlot {
    fn bounds(&self) -> Frame {
        let finite = |v: &f64| v.is_finite();
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .filter(finite);
        let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.guides.iter().map(|g| g.value))
            .filter(finite);
        let (y0, y1) = ys.fold((0.0f64, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        let (x0, x1) = if x0.is_finite() && x1 > x0 {
            (x0, x1)
        } else {
            (0.0, 1.0)
        };
        let y1 = if y1.is_finite() && y1 > y0 {
            y1 * 1.08
        } else {
            y0 + 1.0
        };
        Frame { x0, x1, y0, y1 }
    }

    pub fn to_svg(&self) -> String {
        let f = self.bounds();
        let mut out = String::new();
        header(&mut out, &self.title);
        axes(&mut out, &f, &self.x_label, &self.y_label);
        let mut k = 0;
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut pts = String::new();
            for &(x, y) in decimate(&s.points).filter(|p| p.0.is_finite() && p.1.is_finite()) {
                let _ = write!(pts, "{:.2},{:.2} ", f.px(x), f.py(y));
            }
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.trim_end()
            );
            legend_entry(&mut out, k, color, false, &s.label);
            k += 1;
        }
        for g in &self.guides {
            let y = f.py(g.value);
            let _ = writeln!(
                out,
                r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="{GUIDE_COLOR}" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
                WIDTH - RIGHT
            );
            legend_entry(&mut out, k, GUIDE_COLOR, true, &g.label);
            k += 1;
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Grid of scalar cells; `values[iy][ix]` sits at `(x_axis[ix], y_axis[iy])`.
/// Non-finite cells are drawn grey.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Optional line `y = slope * x + intercept` drawn over the cells.
    pub line: Option<(f64, f64)>,
    /// Legend text for the lowest and highest value; numbers when absent.
    pub legend: Option<(String, String)>,
}

fn edges(axis: &[f64]) -> Vec<f64> {
    match axis.len() {
        0 => vec![0.0, 1.0],
        1 => vec![axis[0] - 0.5, axis[0] + 0.5],
        n => {
            let mut e = Vec::with_capacity(n + 1);
            e.push(axis[0] - 0.5 * (axis[1] - axis[0]));
            e.extend(axis.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            e.push(axis[n - 1] + 0.5 * (axis[n - 1] - axis[n - 2]));
            e
        }
    }
}

fn shade(t: f64) -> String {
    // white to dark blue
    let t = t.clamp(0.0, 1.0);
    let c = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        c(247.0, 8.0),
        c(251.0, 48.0),
        c(255.0, 107.0)
    )
}

impl Heatmap {
    pub fn to_svg(&self) -> String {
        let ex = edges(&self.x_axis);
        let ey = edges(&self.y_axis);
        let f = Frame {
            x0: ex[0],
            x1: ex[ex.len() - 1],
            y0: ey[0],
            y1: ey[ey.len() - 1],
        };
        let finite: Vec<f64> = self
            .values
            .iter()
            .flatten()
            .copied()
            .filter(|v| v.is_finite())
            .collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut out = String::new();
        header(&mut out, &self.title);
        for (iy, row) in self.values.iter().enumerate() {
            for (ix, &v) in row.iter().enumerate() {
                let fill = if !v.is_finite() {
                    "#bbbbbb".to_string()
                } else if hi > lo {
                    shade((v - lo) / (hi - lo))
                } else {
                    shade(1.0)
                };
                let (xa, xb) = (f.px(ex[ix]), f.px(ex[ix + 1]));
                let (ya, yb) = (f.py(ey[iy + 1]), f.py(ey[iy]));
                let _ = writeln!(
                    out,
                    r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{fill}" shape-rendering="crispEdges"/>"#,
                    xb - xa,
                    yb - ya
                );
            }
        }
        if let Some((slope, intercept)) = self.line {
            let (xa, xb) = (f.x0, f.x1);
            let _ = writeln!(
                out,
                r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}"/></clipPath><line clip-path="url(#plot)" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#,
                WIDTH - LEFT - RIGHT,
                HEIGHT - TOP - BOTTOM,
                f.px(xa),
                f.py(slope * xa + intercept),
                f.px(xb),
                f.py(slope * xb + intercept),
                PALETTE[1]
            );
        }
        axes(&mut out, &f, &self.x_label, &self.y_label);
        if hi >= lo {
            let labels = match &self.legend {
                Some((a, b)) => [a.clone(), b.clone()],
                None => [fmt_tick(lo), fmt_tick(hi)],
            };
            for (k, (label, t)) in labels.iter().zip([0.0, 1.0]).enumerate() {
                let y = TOP + 14.0 + 18.0 * k as f64;
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.1}" y="{:.1}" width="16" height="12" fill="{}" stroke="black"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                    WIDTH - RIGHT + 12.0,
                    y - 8.0,
                    shade(t),
                    WIDTH - RIGHT + 34.0,
                    y + 2.0,
                    escape(label)
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Feasible cells dark, infeasible light, with the boundary `u = alpha x + beta`.
pub fn region_heatmap(grid: &RegionGrid, title: &str) -> Heatmap {
    Heatmap {
        title: title.into(),
        x_label: "state bound x_bar".into(),
        y_label: "input bound u_bar".into(),
        x_axis: grid.x_axis.clone(),
        y_axis: grid.u_axis.clone(),
        values: grid
            .feasible
            .iter()
            .map(|row| row.iter().map(|&f| f64::from(u8::from(f))).collect())
            .collect(),
        line: Some((grid.alpha, grid.beta)),
        legend: Some(("infeasible".into(), "feasible".into())),
    }
}

/// `||x||` vs `x_bar`, `||u||` vs `u_bar` and `||e||` vs `xi` for one or
/// more runs, as `(file name, plot)` pairs.
pub fn trajectory_plots(
    runs: &[(&str, &Trajectory)],
    cs: &ConstraintSpec,
) -> Vec<(&'static str, LinePlot)> {
    let series = |suffix: &str, f: &dyn Fn(&crate::sim::LogRecord) -> f64| -> Vec<Series> {
        runs.iter()
            .map(|(name, traj)| Series {
                label: if suffix.is_empty() {
                    (*name).to_string()
                } else {
                    format!("{name} {suffix}")
                },
                points: traj.records.iter().map(|r| (r.t, f(r))).collect(),
            })
            .collect()
    };
    let mut state = series("||x||", &|r| norm(&r.x));
    if let Some((_, traj)) = runs.first() {
        state.push(Series {
            label: "||x_r||".into(),
            points: traj.records.iter().map(|r| (r.t, norm(&r.x_r))).collect(),
        });
    }
    vec![
        (
            "x_norm.svg",
            LinePlot {
                title: "State norm".into(),
                x_label: "t [s]".into(),
                y_label: "||x||".into(),
                series: state,
                guides: vec![
                    Guide {
                        label: "x_bar".into(),
                        value: cs.x_bar,
                    },
                    Guide {
                        label: "xa_bar".into(),
                        value: cs.xa_bar,
                    },
                ],
            },
        ),
        (
            "u_norm.svg",
            LinePlot {
                title: "Input norm".into(),
                x_label: "t [s]".into(),
                y_label: "||u||".into(),
                series: series("", &|r| norm(&r.u)),
                guides: vec![Guide {
                    label: "u_bar".into(),
                    value: cs.u_bar,
                }],
            },
        ),
        (
            "e_norm.svg",
            LinePlot {
                title: "Tracking error norm".into(),
                x_label: "t [s]".into(),
                y_label: "||x - x_a||".into(),
                series: series("", &|r| r.e_norm),
                guides: vec![Guide {
                    label: "xi".into(),
                    value: cs.xi(),
                }],
            },
        ),
    ]
}
