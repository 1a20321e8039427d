//! TOML scenario files and bundled presets.

use serde::{Deserialize, Serialize};

use crate::controller::{AdaptiveLaw, ControllerGains, DEFAULT_PROJECTION_EPSILON};
use crate::error::{Error, Result};
use crate::models::{AuxVariant, ConstraintSpec, PlantModel, ReferenceModel};
use crate::numerics::Matrix;
use crate::signals::{DisturbanceSpec, Primitive, SignalSpec};
use crate::sim::SimConfig;

/// Fourth-order two-input benchmark with a disturbance switched on at 20 s.
pub const BENCHMARK: &str = include_str!("../presets/benchmark.toml");
/// The benchmark with the disturbance removed.
pub const BENCHMARK_UNDISTURBED: &str = include_str!("../presets/benchmark_undisturbed.toml");
/// The benchmark with the disturbance acting on the position rows, outside the span of `B`.
pub const BENCHMARK_UNMATCHED: &str = include_str!("../presets/benchmark_unmatched.toml");
/// Plant equal to the reference model, so the ideal feedback gain is zero.
pub const DEGENERATE: &str = include_str!("../presets/degenerate.toml");

pub const PRESET_NAMES: [&str; 4] = [
    "benchmark",
    "benchmark_undisturbed",
    "benchmark_unmatched",
    "degenerate",
];

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "benchmark" => Some(BENCHMARK),
        "benchmark_undisturbed" => Some(BENCHMARK_UNDISTURBED),
        "benchmark_unmatched" => Some(BENCHMARK_UNMATCHED),
        "degenerate" => Some(DEGENERATE),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpaceSection {
    pub a: Matrix,
    pub b: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub q: Matrix,
    pub gamma_x: Matrix,
    pub gamma_r: Matrix,
}

fn default_epsilon() -> f64 {
    DEFAULT_PROJECTION_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default)]
    pub law: AdaptiveLaw,
    #[serde(default)]
    pub aux_variant: AuxVariant,
    #[serde(default = "default_epsilon")]
    pub projection_epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub khat_x0: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub khat_r0: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    #[serde(default)]
    pub onset: f64,
    pub cap: f64,
    #[serde(default)]
    pub seed: u64,
    pub channels: Vec<Vec<Primitive>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalsSection {
    pub reference: SignalSpec,
    pub disturbance: DisturbanceSection,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub x0: Vec<f64>,
    pub xr0: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub log_stride: usize,
}

/// Adaptation gains substituted when the classical law is selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub gamma_x: Matrix,
    pub gamma_r: Matrix,
}

/// On-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub plant: StateSpaceSection,
    pub reference: StateSpaceSection,
    pub constraints: ConstraintSpec,
    pub gains: GainsSection,
    pub controller: ControllerSection,
    pub signals: SignalsSection,
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSection>,
}

fn prefixed(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } if !name.contains('.') => {
            Error::InvalidParameter {
                name: format!("{section}.{name}"),
                reason,
            }
        }
        other => Error::Config(format!("[{section}] {other}")),
    }
}

impl ConfigFile {
    /// Parses TOML. Syntax and schema errors carry the line and key.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds and validates the simulation config, solving for `P`.
    pub fn resolve(&self) -> Result<SimConfig> {
        self.resolve_for(None)
    }

    /// As [`resolve`](Self::resolve) with the adaptive law overridden. The
    /// classical law takes its adaptation gains from `[baseline]` when present.
    pub fn resolve_for(&self, law: Option<AdaptiveLaw>) -> Result<SimConfig> {
        let law = law.unwrap_or(self.controller.law);
        let (gamma_x, gamma_r) = match (&self.baseline, law) {
            (Some(b), AdaptiveLaw::Classical) => (&b.gamma_x, &b.gamma_r),
            _ => (&self.gains.gamma_x, &self.gains.gamma_r),
        };
        let plant = PlantModel::new(self.plant.a.clone(), self.plant.b.clone())
            .map_err(|e| prefixed("plant", e))?;
        let reference = ReferenceModel::new(self.reference.a.clone(), self.reference.b.clone())
            .map_err(|e| prefixed("reference", e))?;
        let gains = ControllerGains::new(
            gamma_x.clone(),
            gamma_r.clone(),
            self.gains.q.clone(),
            &reference.a,
            law,
        )
        .map_err(|e| prefixed("gains", e))?;
        let (n, m) = (plant.n(), plant.m());
        let cfg = SimConfig {
            constraints: self.constraints.clone(),
            aux_variant: self.controller.aux_variant,
            projection_epsilon: self.controller.projection_epsilon,
            reference_signal: self.signals.reference.clone(),
            disturbance: DisturbanceSpec {
                base: SignalSpec {
                    channels: self.signals.disturbance.channels.clone(),
                },
                onset: self.signals.disturbance.onset,
                norm_cap: self.signals.disturbance.cap,
                seed: self.signals.disturbance.seed,
            },
            x0: self.sim.x0.clone(),
            xr0: self.sim.xr0.clone(),
            khat_x0: self
                .controller
                .khat_x0
                .clone()
                .unwrap_or_else(|| Matrix::zeros(m, n)),
            khat_r0: self
                .controller
                .khat_r0
                .clone()
                .unwrap_or_else(|| Matrix::zeros(m, m)),
            t_end: self.sim.t_end,
            dt: self.sim.dt,
            log_stride: self.sim.log_stride,
            plant,
            reference,
            gains,
        };
        cfg.validate().map_err(|e| prefixed("config", e))?;
        Ok(cfg)
    }

    /// Inverse of [`resolve`](Self::resolve): initial gain estimates are
    /// always written out explicitly.
    pub fn from_sim_config(cfg: &SimConfig) -> Self {
        Self {
            plant: StateSpaceSection {
                a: cfg.plant.a.clone(),
                b: cfg.plant.b.clone(),
            },
            reference: StateSpaceSection {
                a: cfg.reference.a.clone(),
                b: cfg.reference.b.clone(),
            },
            constraints: cfg.constraints.clone(),
            gains: GainsSection {
                q: cfg.gains.q.clone(),
                gamma_x: cfg.gains.gamma_x.clone(),
                gamma_r: cfg.gains.gamma_r.clone(),
            },
            controller: ControllerSection {
                law: cfg.gains.law,
                aux_variant: cfg.aux_variant,
                projection_epsilon: cfg.projection_epsilon,
                khat_x0: Some(cfg.khat_x0.clone()),
                khat_r0: Some(cfg.khat_r0.clone()),
            },
            signals: SignalsSection {
                reference: cfg.reference_signal.clone(),
                disturbance: DisturbanceSection {
                    onset: cfg.disturbance.onset,
                    cap: cfg.disturbance.norm_cap,
                    seed: cfg.disturbance.seed,
                    channels: cfg.disturbance.base.channels.clone(),
                },
            },
            sim: SimSection {
                x0: cfg.x0.clone(),
                xr0: cfg.xr0.clone(),
                t_end: cfg.t_end,
                dt: cfg.dt,
                log_stride: cfg.log_stride,
            },
            baseline: None,
        }
    }
}

/// Parses and resolves in one step.
pub fn load(text: &str) -> Result<SimConfig> {
    ConfigFile::parse(text)?.resolve()
}

/// Parses and resolves with the adaptive law overridden.
pub fn load_for(text: &str, law: AdaptiveLaw) -> Result<SimConfig> {
    ConfigFile::parse(text)?.resolve_for(Some(law))
}

/// Resolves a bundled preset by name.
pub fn load_preset(name: &str) -> Result<SimConfig> {
    let text =
        preset(name).ok_or_else(|| Error::invalid("preset", format!("unknown preset `{name}`")))?;
    load(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for name in PRESET_NAMES {
            let cfg = load_preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!((cfg.n(), cfg.m()), (4, 2), "{name}");
        }
        assert!(load_preset("nope").is_err());
    }

    #[test]
    fn benchmark_constants() {
        let cfg = load_preset("benchmark").unwrap();
        let cs = &cfg.constraints;
        assert_eq!(
            (cs.u_bar, cs.x_bar, cs.xa_bar, cs.d_bar),
            (12.0, 6.5, 6.4, 1.2)
        );
        assert_eq!((cs.kx_bar, cs.kr_bar), (1.6, 0.6));
        assert_eq!(
            (cfg.t_end, cfg.dt, cfg.disturbance.onset),
            (40.0, 1e-3, 20.0)
        );
        assert_eq!(cfg.gains.gamma_x, Matrix::scaled_identity(2, 5.0));
        assert_eq!(cfg.gains.q, Matrix::identity(4));
        assert_eq!(cfg.law(), AdaptiveLaw::Blf);

        let baseline = load_for(BENCHMARK, AdaptiveLaw::Classical).unwrap();
        assert_eq!(baseline.law(), AdaptiveLaw::Classical);
        assert_eq!(baseline.gains.gamma_x, Matrix::scaled_identity(2, 15.0));
        assert_eq!(baseline.gains.gamma_r, Matrix::scaled_identity(2, 15.0));
        assert_eq!(baseline.gains.p, cfg.gains.p);
    }

    #[test]
    fn round_trip_is_identity() {
        for name in PRESET_NAMES {
            let cfg = load_preset(name).unwrap();
            let text = ConfigFile::from_sim_config(&cfg).to_toml().unwrap();
            assert_eq!(load(&text).unwrap(), cfg, "{name}\n{text}");
            let classical = load_for(preset(name).unwrap(), AdaptiveLaw::Classical).unwrap();
            let text = ConfigFile::from_sim_config(&classical).to_toml().unwrap();
            assert_eq!(load(&text).unwrap(), classical, "{name}");
        }
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = BENCHMARK.replace("u_bar = 12.0", "u_bar = \"twelve\"");
        let msg = load(&bad).unwrap_err().to_string();
        assert!(msg.contains("u_bar") && msg.contains("line"), "{msg}");

        let unknown = BENCHMARK.replace("[constraints]", "[constraints]\nbogus = 1");
        assert!(load(&unknown).unwrap_err().to_string().contains("bogus"));

        let neg = BENCHMARK.replace("dt = 0.001", "dt = -0.001");
        assert!(load(&neg).unwrap_err().to_string().contains("sim"));

        let unstable = BENCHMARK.replace("[-5.0, -1.5, -1.2, -1.6]", "[5.0, -1.5, -1.2, -1.6]");
        assert!(load(&unstable)
            .unwrap_err()
            .to_string()
            .contains("reference"));
    }
}
