use std::fs;
use std::path::Path;

use cmrac_core::config::{preset, ConfigFile, PRESET_NAMES};
use cmrac_core::controller::AdaptiveLaw;
use cmrac_core::feasibility::{build_region_grid, FeasibilityReport};
use cmrac_core::plot::{region_heatmap, trajectory_plots};
use cmrac_core::sim::{run_scenario, RunOptions, RunOutput, SimConfig};
use cmrac_core::Error;

use crate::manifest::RunManifest;
use crate::report;
use crate::{Failure, Source, EXIT_ABORT, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO, EXIT_VIOLATION};

pub struct Loaded {
    pub source: String,
    pub text: String,
    pub file: ConfigFile,
}

pub fn load(src: &Source) -> Result<Loaded, Failure> {
    let (source, text) = match (&src.config, &src.preset) {
        (_, Some(name)) => {
            let text = preset(name).ok_or_else(|| {
                Failure::new(
                    EXIT_CONFIG,
                    format!(
                        "unknown preset `{name}` (available: {})",
                        PRESET_NAMES.join(", ")
                    ),
                )
            })?;
            (format!("preset:{name}"), text.to_string())
        }
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
            (path.display().to_string(), text)
        }
        (None, None) => return Err(Failure::new(EXIT_CONFIG, "no config given")),
    };
    let file = ConfigFile::parse(&text)
        .map_err(|e| Failure::new(EXIT_CONFIG, format!("{source}: {e}")))?;
    Ok(Loaded { source, text, file })
}

impl Loaded {
    pub fn resolve(&self, law: Option<AdaptiveLaw>) -> Result<SimConfig, Failure> {
        self.file
            .resolve_for(law)
            .map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", self.source)))
    }
}

pub fn analyze(cfg: &SimConfig) -> Result<FeasibilityReport, Failure> {
    cfg.feasibility()
        .map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))
}

pub fn io<T>(r: std::io::Result<T>, what: &Path) -> Result<T, Failure> {
    r.map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", what.display())))
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    io(fs::write(&path, contents), &path)
}

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    io(fs::create_dir_all(dir), dir)
}

/// Maps run errors onto exit codes.
pub fn run_error(e: Error) -> Failure {
    match e {
        Error::InfeasibleConfig { .. } => Failure::new(
            EXIT_INFEASIBLE,
            format!("{e}; pass --override-feasibility to simulate anyway"),
        ),
        Error::InvalidParameter { .. } | Error::Config(_) | Error::DimensionMismatch { .. } => {
            Failure::new(EXIT_CONFIG, e.to_string())
        }
        other => Failure::new(EXIT_ABORT, other.to_string()),
    }
}

pub struct RegionArgs {
    pub enabled: bool,
    pub u_range: Option<(f64, f64)>,
    pub x_range: Option<(f64, f64)>,
    pub resolution: usize,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

pub fn feasibility(src: &Source, out: &Path, region: RegionArgs) -> Result<(), Failure> {
    let loaded = load(src)?;
    let cfg = loaded.resolve(None)?;
    let rep = analyze(&cfg)?;
    let text = report::feasibility_text(&cfg.constraints, &rep);
    print!("{text}");
    if region.enabled {
        let cs = &cfg.constraints;
        let alpha = region.alpha.unwrap_or(rep.alpha);
        let beta = region.beta.unwrap_or(rep.beta);
        let u_range = region.u_range.unwrap_or((0.5, 2.0 * cs.u_bar));
        let x_range = region.x_range.unwrap_or((0.5, 2.0 * cs.x_bar));
        let grid = build_region_grid(u_range, x_range, alpha, beta, region.resolution)
            .map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))?;
        ensure_dir(out)?;
        write(out, "feasibility.txt", &text)?;
        write(out, "region.csv", &grid.to_csv())?;
        let title = format!("Feasible set, alpha = {alpha:.4}, beta = {beta:.4}");
        write(out, "region.svg", &region_heatmap(&grid, &title).to_svg())?;
        println!(
            "region: {:.1}% of cells feasible; wrote {}",
            100.0 * grid.feasible_fraction(),
            out.display()
        );
    }
    Ok(())
}

fn emit_run(dir: &Path, run: &RunOutput, cfg: &SimConfig, plots: bool) -> Result<(), Failure> {
    write(dir, "trajectory.csv", &run.trajectory.to_csv())?;
    write(dir, "metrics.txt", &run.metrics.to_key_value())?;
    write(
        dir,
        "summary.txt",
        &report::summary_text(run, &cfg.constraints),
    )?;
    if plots {
        for (name, plot) in trajectory_plots(
            &[(&cfg.law().to_string(), &run.trajectory)],
            &cfg.constraints,
        ) {
            write(dir, name, &plot.to_svg())?;
        }
    }
    Ok(())
}

/// Exit status implied by a finished run.
fn verdict(run: &RunOutput) -> Result<(), Failure> {
    if let Some(a) = &run.trajectory.abort {
        return Err(Failure::new(
            EXIT_ABORT,
            format!("numerical abort at t = {:.6}: {}", a.t, a.reason),
        ));
    }
    let m = &run.metrics;
    if run.trajectory.law == AdaptiveLaw::Blf
        && !(m.state_constraint_ok && m.input_constraint_ok && m.omega_e_ok)
    {
        return Err(Failure::new(
            EXIT_VIOLATION,
            "constraint violation in a barrier-law run",
        ));
    }
    Ok(())
}

pub fn simulate(
    src: &Source,
    out: &Path,
    override_feasibility: bool,
    law: Option<AdaptiveLaw>,
    plots: bool,
) -> Result<(), Failure> {
    let loaded = load(src)?;
    let cfg = loaded.resolve(law)?;
    let rep = analyze(&cfg)?;
    ensure_dir(out)?;
    RunManifest::new("simulate", &loaded.source, &loaded.text, out, &cfg, &rep).write(out)?;
    let run = run_scenario(
        &cfg,
        RunOptions {
            override_feasibility,
        },
    )
    .map_err(run_error)?;
    emit_run(out, &run, &cfg, plots)?;
    print!("{}", report::summary_text(&run, &cfg.constraints));
    println!("wrote {}", out.display());
    verdict(&run)
}

pub fn compare(src: &Source, out: &Path, override_feasibility: bool) -> Result<(), Failure> {
    let loaded = load(src)?;
    let cfg_blf = loaded.resolve(Some(AdaptiveLaw::Blf))?;
    let cfg_cl = loaded.resolve(Some(AdaptiveLaw::Classical))?;
    let dirs = [out.join("blf"), out.join("classical")];
    for (cfg, dir) in [(&cfg_blf, &dirs[0]), (&cfg_cl, &dirs[1])] {
        ensure_dir(dir)?;
        let rep = analyze(cfg)?;
        RunManifest::new("compare", &loaded.source, &loaded.text, dir, cfg, &rep).write(dir)?;
    }
    let opts = RunOptions {
        override_feasibility,
    };
    let (blf, cl) = rayon::join(
        || run_scenario(&cfg_blf, opts),
        || run_scenario(&cfg_cl, opts),
    );
    let blf = blf.map_err(run_error)?;
    let cl = cl.map_err(run_error)?;
    emit_run(&dirs[0], &blf, &cfg_blf, false)?;
    emit_run(&dirs[1], &cl, &cfg_cl, false)?;

    let disturbed = cfg_blf.disturbance.norm_cap > 0.0
        && cfg_blf
            .disturbance
            .base
            .channels
            .iter()
            .any(|c| !c.is_empty());
    let table =
        report::comparison_table(&blf.metrics, &cl.metrics, &cfg_blf.constraints, disturbed);
    write(out, "comparison.txt", &table)?;
    write(
        out,
        "comparison.csv",
        &report::comparison_csv(&blf.trajectory, &cl.trajectory),
    )?;
    let runs = [("blf", &blf.trajectory), ("classical", &cl.trajectory)];
    for (name, plot) in trajectory_plots(&runs, &cfg_blf.constraints) {
        write(out, name, &plot.to_svg())?;
    }
    print!("{table}");
    println!("wrote {}", out.display());
    verdict(&blf)
}

pub fn presets(name: Option<&str>) -> Result<(), Failure> {
    match name {
        None => {
            PRESET_NAMES.iter().for_each(|n| println!("{n}"));
            Ok(())
        }
        Some(n) => {
            let text = preset(n)
                .ok_or_else(|| Failure::new(EXIT_CONFIG, format!("unknown preset `{n}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}
