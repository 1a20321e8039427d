//! Reference-input and disturbance generators.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::norm;

/// Grid inflation used by [`sup_norm_bound`] when the maximum is sampled.
pub const SUP_NORM_INFLATION: f64 = 1.001;

/// One additive term of a signal channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-t / tau)`
    Exponential {
        amplitude: f64,
        tau: f64,
    },
    /// `amplitude * sin(omega * t + phase)`
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude` for `t >= t_on`, zero before.
    Step {
        amplitude: f64,
        t_on: f64,
    },
    /// Piecewise-constant uniform noise in `[-amplitude, amplitude]`, redrawn
    /// every `hold` seconds. Values depend only on the seed, the channel and
    /// the hold index, so evaluation order does not matter.
    Noise {
        amplitude: f64,
        hold: f64,
    },
}

impl Primitive {
    fn validate(&self) -> Result<()> {
        match *self {
            Primitive::Exponential { tau, .. } if !(tau > 0.0) => Err(Error::invalid(
                "tau",
                "exponential time constant must be positive",
            )),
            Primitive::Noise { hold, .. } if !(hold > 0.0) => Err(Error::invalid(
                "hold",
                "noise hold interval must be positive",
            )),
            _ => Ok(()),
        }
    }

    fn eval(&self, t: f64, seed: u64, channel: usize) -> f64 {
        match *self {
            Primitive::Constant { value } => value,
            Primitive::Exponential { amplitude, tau } => amplitude * (-t / tau).exp(),
            Primitive::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).sin(),
            Primitive::Step { amplitude, t_on } => {
                if t >= t_on {
                    amplitude
                } else {
                    0.0
                }
            }
            Primitive::Noise { amplitude, hold } => {
                let slot = (t / hold).floor().max(0.0) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(channel as u64);
                rng.set_word_pos(u128::from(slot) * 2);
                amplitude * (2.0 * rng.gen::<f64>() - 1.0)
            }
        }
    }

    /// True when `|term(t)|` never increases and shares the sign of its value at 0.
    fn is_monotone_decaying(&self) -> bool {
        matches!(
            self,
            Primitive::Constant { .. } | Primitive::Exponential { .. }
        )
    }

    fn sign_at_zero(&self) -> f64 {
        match *self {
            Primitive::Constant { value } => value.signum(),
            Primitive::Exponential { amplitude, .. } => amplitude.signum(),
            _ => 0.0,
        }
    }
}

/// A vector signal: each channel is the sum of its primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub channels: Vec<Vec<Primitive>>,
}

impl SignalSpec {
    pub fn constant(values: &[f64]) -> Self {
        Self {
            channels: values
                .iter()
                .map(|&value| vec![Primitive::Constant { value }])
                .collect(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            channels: vec![Vec::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.channels
            .iter()
            .flatten()
            .try_for_each(Primitive::validate)
    }

    fn eval_seeded(&self, t: f64, seed: u64) -> Vec<f64> {
        self.channels
            .iter()
            .enumerate()
            .map(|(ch, prims)| prims.iter().map(|p| p.eval(t, seed, ch)).sum())
            .collect()
    }
}

/// Evaluates the reference input `r(t)`, checking its dimension against `m`.
pub fn eval_reference(spec: &SignalSpec, t: f64, m: usize) -> Result<Vec<f64>> {
    if spec.dim() != m {
        return Err(Error::DimensionMismatch {
            what: "reference signal channels",
            expected: m,
            got: spec.dim(),
        });
    }
    Ok(spec.eval_seeded(t, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub base: SignalSpec,
    /// Time (s) before which the disturbance is identically zero.
    pub onset: f64,
    /// Norm cap `d_bar`.
    pub norm_cap: f64,
    pub seed: u64,
}

impl DisturbanceSpec {
    pub fn none(n: usize) -> Self {
        Self {
            base: SignalSpec::zero(n),
            onset: 0.0,
            norm_cap: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.norm_cap >= 0.0) {
            return Err(Error::invalid(
                "cap",
                "disturbance norm cap must be non-negative",
            ));
        }
        self.base.validate()
    }
}

/// Evaluates `d(t)`: zero before onset, otherwise the base signal radially
/// scaled so that its norm never exceeds the cap.
pub fn eval_disturbance(spec: &DisturbanceSpec, t: f64, n: usize) -> Result<Vec<f64>> {
    if spec.base.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "disturbance channels",
            expected: n,
            got: spec.base.dim(),
        });
    }
    if t < spec.onset {
        return Ok(vec![0.0; n]);
    }
    let mut d = spec.base.eval_seeded(t, spec.seed);
    let magnitude = norm(&d);
    if magnitude > spec.norm_cap {
        let s = if magnitude > 0.0 {
            spec.norm_cap / magnitude
        } else {
            0.0
        };
        d.iter_mut().for_each(|v| *v *= s);
    }
    Ok(d)
}

/// Upper estimate of `sup_t ||signal(t)||` over `[0, horizon]`.
///
/// When every channel is a same-sign sum of constants and decaying
/// exponentials, the norm is maximal at `t = 0` and that value is returned
/// exactly. Otherwise the maximum over a uniform grid of `samples` points
/// is inflated by [`SUP_NORM_INFLATION`].
pub fn sup_norm_bound(spec: &SignalSpec, horizon: f64, samples: usize) -> f64 {
    let monotone = spec.channels.iter().all(|prims| {
        prims.iter().all(Primitive::is_monotone_decaying) && {
            let mut signs = prims
                .iter()
                .map(Primitive::sign_at_zero)
                .filter(|s| *s != 0.0);
            match signs.next() {
                Some(first) => signs.all(|s| s == first),
                None => true,
            }
        }
    });
    if monotone {
        return norm(&spec.eval_seeded(0.0, 0));
    }
    let samples = samples.max(2);
    let max = (0..samples)
        .map(|k| horizon * k as f64 / (samples - 1) as f64)
        .map(|t| norm(&spec.eval_seeded(t, 0)))
        .fold(0.0, f64::max);
    max * SUP_NORM_INFLATION
}
