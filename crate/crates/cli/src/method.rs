//! Method tags and the estimator settings each one stands for.

use std::fmt;
use std::str::FromStr;

use langevin_mlmc::{DistributionKind, MlmcConfig, Scheme};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodTag {
    McEmg,
    Emg,
    EmgPlus,
    Seg,
    Svg,
    Emge,
    EmgePlus,
    Sege,
    Svge,
    Se3Minus,
    Se3,
    Se3Plus,
    Se4,
}

pub const ALL_TAGS: [MethodTag; 13] = [
    MethodTag::McEmg,
    MethodTag::Emg,
    MethodTag::EmgPlus,
    MethodTag::Seg,
    MethodTag::Svg,
    MethodTag::Emge,
    MethodTag::EmgePlus,
    MethodTag::Sege,
    MethodTag::Svge,
    MethodTag::Se3Minus,
    MethodTag::Se3,
    MethodTag::Se3Plus,
    MethodTag::Se4,
];

/// How the finest level is chosen for a given tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelRule {
    /// Calibrate `L` at fixed `M0`.
    Levels,
    /// Fix `L` and calibrate `M0`.
    CoarseSteps { levels: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodSetup {
    pub scheme: Scheme,
    /// Coarsest step count; the calibration starting point under
    /// [`LevelRule::CoarseSteps`].
    pub m0: usize,
    pub dist: DistributionKind,
    pub extrapolate: bool,
    pub exact_coarse: bool,
    pub rule: LevelRule,
    /// Single-level Monte Carlo instead of the multilevel estimator.
    pub single_level: bool,
}

impl MethodSetup {
    /// Estimator configuration with `L = 0`, to be calibrated.
    pub fn config(&self, eps: f64) -> MlmcConfig {
        MlmcConfig::new(eps, self.m0, 0, self.scheme)
            .with_distribution(self.dist)
            .with_exact_coarse(self.exact_coarse)
            .with_extrapolation(self.extrapolate)
    }

    /// Pilot level for calibration. Second and higher order biases are small
    /// already at moderate `h`, so their pilot sits one level coarser.
    pub fn pilot_level(&self) -> usize {
        if self.extrapolate || self.scheme == Scheme::StormerVerletOU {
            1
        } else {
            langevin_mlmc::mlmc::DEFAULT_PILOT_LEVEL
        }
    }
}

impl MethodTag {
    pub fn name(self) -> &'static str {
        match self {
            MethodTag::McEmg => "MC-EMG",
            MethodTag::Emg => "EMG",
            MethodTag::EmgPlus => "EMG+",
            MethodTag::Seg => "SEG",
            MethodTag::Svg => "SVG",
            MethodTag::Emge => "EMGe",
            MethodTag::EmgePlus => "EMGe+",
            MethodTag::Sege => "SEGe",
            MethodTag::Svge => "SVGe",
            MethodTag::Se3Minus => "SE3-",
            MethodTag::Se3 => "SE3",
            MethodTag::Se3Plus => "SE3+",
            MethodTag::Se4 => "SE4",
        }
    }

    pub fn setup(self) -> MethodSetup {
        use MethodTag::*;
        let (scheme, m0) = match self {
            McEmg | Emg | Emge => (Scheme::EulerMaruyama, 4),
            EmgPlus | EmgePlus => (Scheme::EulerMaruyama, 8),
            Seg | Sege | Se3Minus => (Scheme::SymplecticEulerOU, 4),
            Se3 | Se4 => (Scheme::SymplecticEulerOU, 8),
            Se3Plus => (Scheme::SymplecticEulerOU, 16),
            Svg | Svge => (Scheme::StormerVerletOU, 4),
        };
        let dist = match self {
            Se3Minus | Se3 | Se3Plus => DistributionKind::ThreePoint,
            Se4 => DistributionKind::FourPoint,
            _ => DistributionKind::Gaussian,
        };
        MethodSetup {
            scheme,
            m0,
            dist,
            extrapolate: matches!(self, Emge | EmgePlus | Sege | Svge),
            exact_coarse: dist.is_discrete(),
            rule: if self == Svge {
                LevelRule::CoarseSteps { levels: 2 }
            } else {
                LevelRule::Levels
            },
            single_level: self == McEmg,
        }
    }

    pub fn is_discrete(self) -> bool {
        self.setup().dist.is_discrete()
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown method tag `{}`", self.0)
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for MethodTag {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_TAGS
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

impl TryFrom<String> for MethodTag {
    type Error = UnknownMethod;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MethodTag> for String {
    fn from(t: MethodTag) -> String {
        t.name().to_string()
    }
}
