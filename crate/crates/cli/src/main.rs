//! `cmrac`: feasibility analysis, simulation, comparison and sweeps for the
//! constrained MRAC toolkit.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config parse or validation
//! failure, 3 barrier law requested on an infeasible config without
//! `--override-feasibility`, 4 constraint violation in a barrier-law run,
//! 5 numerical abort.

mod commands;
mod manifest;
mod report;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cmrac_core::controller::AdaptiveLaw;

#[derive(Parser, Debug)]
#[command(
    name = "cmrac",
    version,
    about = "Constrained model reference adaptive control toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Scenario file (TOML).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Use a bundled preset instead of a file.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = "CMRAC_OUT_DIR", default_value = "cmrac-out")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawArg {
    Blf,
    Classical,
}

impl From<LawArg> for AdaptiveLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Blf => AdaptiveLaw::Blf,
            LawArg::Classical => AdaptiveLaw::Classical,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the feasibility report; optionally render the feasible region.
    Feasibility {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: OutDir,
        /// Write region.csv and region.svg.
        #[arg(long)]
        region: bool,
        /// Input-bound range `lo:hi` of the region grid.
        #[arg(long, value_parser = parse_range)]
        u_range: Option<(f64, f64)>,
        /// State-bound range `lo:hi` of the region grid.
        #[arg(long, value_parser = parse_range)]
        x_range: Option<(f64, f64)>,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        /// Replace the computed alpha when drawing the region.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        /// Replace the computed beta when drawing the region.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
    /// Run one closed-loop simulation.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: OutDir,
        /// Run the barrier law even when the feasibility condition fails.
        #[arg(long)]
        override_feasibility: bool,
        /// Adaptive law; defaults to the one in the config.
        #[arg(long, value_enum)]
        law: Option<LawArg>,
        /// Write SVG plots of ||x||, ||u|| and ||e|| against their bounds.
        #[arg(long)]
        plots: bool,
    },
    /// Run the barrier and classical laws on the same scenario.
    Compare {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        override_feasibility: bool,
    },
    /// Evaluate feasibility (and optionally simulate) over a parameter grid.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: OutDir,
        /// `name=lo:hi:count` with name one of u_bar, x_bar, d_bar,
        /// gamma_scale, x0_scale. Give once or twice.
        #[arg(long = "axis", required = true, num_args = 1, value_parser = sweep::parse_axis)]
        axes: Vec<sweep::Axis>,
        /// Also simulate every cell.
        #[arg(long)]
        simulate: bool,
        #[arg(long, value_enum)]
        law: Option<LawArg>,
        #[arg(long)]
        override_feasibility: bool,
    },
    /// List the bundled presets, or print one.
    Presets { name: Option<String> },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((lo, hi))
}

/// Error carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_VIOLATION: u8 = 4;
pub const EXIT_ABORT: u8 = 5;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Feasibility {
            source,
            out,
            region,
            u_range,
            x_range,
            resolution,
            alpha,
            beta,
        } => commands::feasibility(
            &source,
            &out.out,
            commands::RegionArgs {
                enabled: region,
                u_range,
                x_range,
                resolution,
                alpha,
                beta,
            },
        ),
        Command::Simulate {
            source,
            out,
            override_feasibility,
            law,
            plots,
        } => commands::simulate(
            &source,
            &out.out,
            override_feasibility,
            law.map(Into::into),
            plots,
        ),
        Command::Compare {
            source,
            out,
            override_feasibility,
        } => commands::compare(&source, &out.out, override_feasibility),
        Command::Sweep {
            source,
            out,
            axes,
            simulate,
            law,
            override_feasibility,
        } => sweep::run(
            &source,
            &out.out,
            &axes,
            simulate,
            law.map(Into::into),
            override_feasibility,
        ),
        Command::Presets { name } => commands::presets(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
