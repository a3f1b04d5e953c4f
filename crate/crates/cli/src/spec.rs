//! Experiment files.
//!
//! ```toml
//! name = "fig2"
//! problem = "harmonic_set1"
//! methods = ["EMG", "SEG", "SVG"]
//! eps = [4e-3, 2e-3, 1e-3]
//! t_end = 1.0          # or a list for a sweep over end times
//! repeat = 1
//! seed = 1
//! ```
//!
//! `problem = "custom"` reads the model from a `[custom]` table.

use std::path::Path;

use anyhow::{bail, Context, Result};
use langevin_mlmc::model::{harmonic_reference, presets};
use langevin_mlmc::{LangevinModel, Potential, QoI};
use serde::{Deserialize, Serialize};

use crate::method::MethodTag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    HarmonicSet1,
    HarmonicSet2,
    /// `ω₀ = λ = 1, σ = 0.4`, the test case for discrete increments.
    HarmonicSmallNoise,
    DoubleWell,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Harmonic,
    DoubleWell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QoiKind {
    /// `√(2/π) exp(−2(P − ½)²)`
    Bump,
    /// `|Q + Q_min|² + |P|²`
    ShiftedSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModel {
    pub potential: PotentialKind,
    #[serde(default = "one")]
    pub omega0: f64,
    #[serde(default = "one")]
    pub qmin: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    pub qoi: QoiKind,
    /// Reference value of `E[φ]`, used for the error columns.
    pub reference: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasSweep {
    /// Levels `0..levels` are measured.
    #[serde(default = "default_bias_levels")]
    pub levels: usize,
    /// Samples per level when neither exact method applies.
    #[serde(default = "default_bias_samples")]
    pub samples: u64,
}

fn default_bias_levels() -> usize {
    5
}

fn default_bias_samples() -> u64 {
    100_000
}

impl Default for BiasSweep {
    fn default() -> Self {
        Self {
            levels: default_bias_levels(),
            samples: default_bias_samples(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    pub problem: Problem,
    pub methods: Vec<MethodTag>,
    pub eps: Vec<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: OneOrMany,
    #[serde(default = "default_repeat")]
    pub repeat: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_pilot")]
    pub pilot_samples: u64,
    /// Overrides the per-method pilot level.
    pub pilot_level: Option<usize>,
    /// Leaf budget for tree enumeration.
    pub leaf_budget: Option<u64>,
    /// Multiply each method's `M0` by `⌈T⌉`, keeping the coarsest step near
    /// its `T = 1` value in sweeps over the end time.
    #[serde(default)]
    pub scale_m0_with_t: bool,
    pub custom: Option<CustomModel>,
    #[serde(default)]
    pub bias: BiasSweep,
    /// `(T, value)` pairs that take precedence over the built-in references.
    #[serde(skip)]
    pub reference_override: Vec<(f64, f64)>,
}

fn default_t_end() -> OneOrMany {
    OneOrMany::One(1.0)
}

fn default_repeat() -> u32 {
    1
}

fn default_pilot() -> u64 {
    100_000
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            bail!("no methods listed");
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            bail!("eps must be a nonempty list of positive tolerances");
        }
        let ts = self.t_end.values();
        if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            bail!("t_end must be positive");
        }
        if self.repeat == 0 {
            bail!("repeat must be at least 1");
        }
        if self.pilot_samples < 100 {
            bail!("pilot_samples must be at least 100");
        }
        match (self.problem, &self.custom) {
            (Problem::Custom, None) => bail!("problem = \"custom\" needs a [custom] table"),
            (Problem::Custom, Some(_)) | (_, None) => {}
            (_, Some(_)) => bail!("a [custom] table is only read for problem = \"custom\""),
        }
        for &t in &ts {
            self.model(t)?;
        }
        Ok(())
    }

    /// Coarsest step count of a method with nominal `m0` at end time `t_end`.
    pub fn coarse_steps(&self, m0: usize, t_end: f64) -> usize {
        if self.scale_m0_with_t {
            m0 * (t_end.ceil() as usize).max(1)
        } else {
            m0
        }
    }

    pub fn t_values(&self) -> Vec<f64> {
        self.t_end.values()
    }

    pub fn model(&self, t_end: f64) -> Result<LangevinModel> {
        let m = match self.problem {
            Problem::HarmonicSet1 => presets::harmonic_set1().with_t_end(t_end)?,
            Problem::HarmonicSet2 => presets::harmonic_set2().with_t_end(t_end)?,
            Problem::HarmonicSmallNoise => presets::harmonic_small_noise().with_t_end(t_end)?,
            Problem::DoubleWell => presets::double_well(t_end),
            Problem::Custom => {
                let c = self.custom.as_ref().expect("validated");
                let potential = match c.potential {
                    PotentialKind::Harmonic => Potential::Harmonic { omega0: c.omega0 },
                    PotentialKind::DoubleWell => Potential::DoubleWell {
                        omega0: c.omega0,
                        qmin: c.qmin,
                    },
                };
                LangevinModel::new(potential, c.lambda, c.sigma, &c.q0, &c.p0, t_end)?
            }
        };
        Ok(m)
    }

    pub fn qoi(&self) -> QoI {
        match self.problem {
            Problem::HarmonicSet1 | Problem::HarmonicSet2 | Problem::HarmonicSmallNoise => QoI::GaussianBump,
            Problem::DoubleWell => QoI::ShiftedSquare { qmin: 1.0 },
            Problem::Custom => {
                let c = self.custom.as_ref().expect("validated");
                match c.qoi {
                    QoiKind::Bump => QoI::GaussianBump,
                    QoiKind::ShiftedSquare => QoI::ShiftedSquare { qmin: c.qmin },
                }
            }
        }
    }

    /// Exact value for harmonic problems, published values for the double well,
    /// the configured value for custom problems; `None` when unknown.
    pub fn reference(&self, t_end: f64) -> Result<Option<f64>> {
        if let Some(&(_, v)) = self.reference_override.iter().find(|(t, _)| *t == t_end) {
            return Ok(Some(v));
        }
        let model = self.model(t_end)?;
        let qoi = self.qoi();
        Ok(match self.problem {
            Problem::DoubleWell => presets::double_well_reference(t_end),
            Problem::Custom => {
                let c = self.custom.as_ref().expect("validated");
                c.reference.or_else(|| harmonic_reference(&model, &qoi).ok())
            }
            _ => Some(harmonic_reference(&model, &qoi)?),
        })
    }
}

impl ExperimentSpec {
    /// Replaces the reference values, one per end time in order.
    pub fn with_references(mut self, values: &[f64]) -> Result<Self> {
        let ts = self.t_values();
        if ts.len() != values.len() {
            bail!("{} reference values for {} end times", values.len(), ts.len());
        }
        self.reference_override = ts.into_iter().zip(values.iter().copied()).collect();
        Ok(self)
    }
}
