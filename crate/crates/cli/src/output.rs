//! CSV rows. Floats are written with 17 significant digits, which read back
//! to the identical `f64`.

use std::fmt;
use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::method::MethodTag;

/// A float column. NaN marks an undefined value and equals itself.
#[derive(Clone, Copy, Debug, PartialOrd)]
pub struct Sig17(pub f64);

impl PartialEq for Sig17 {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 || (self.0.is_nan() && other.0.is_nan())
    }
}

impl fmt::Display for Sig17 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{:.16e}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sig17 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse::<f64>().map(Sig17).map_err(serde::de::Error::custom)
    }
}

impl From<f64> for Sig17 {
    fn from(x: f64) -> Self {
        Sig17(x)
    }
}

/// One estimator run at one tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub method: MethodTag,
    pub problem: String,
    pub t_end: Sig17,
    /// Requested accuracy `ε_max`.
    pub eps: Sig17,
    pub repeat: u32,
    pub seed: u64,
    pub levels: usize,
    pub m0: usize,
    /// Tolerance the sample counts were computed for.
    pub run_eps: Sig17,
    pub estimate: Sig17,
    pub reference: Option<Sig17>,
    pub abs_error_vs_reference: Option<Sig17>,
    /// `|estimate − reference| / ε_max`
    pub error_over_eps: Option<Sig17>,
    /// `(|estimate − reference| + stat_error) / ε_max`
    pub error_plus_sd_over_eps: Option<Sig17>,
    pub stat_error: Sig17,
    pub bias_est: Sig17,
    /// Summed inter-level bias over the coupled levels, discrete runs only.
    pub inter_level_bias: Option<Sig17>,
    pub total_cost: Sig17,
    pub wall_time: Sig17,
    pub cpu_time: Sig17,
    pub walltime_times_eps2: Sig17,
    pub cputime_times_eps2: Sig17,
    pub walltime_times_eps2_over_t: Sig17,
    pub rounds: usize,
}

impl RunRow {
    /// Timing columns, which differ between otherwise identical runs.
    pub const TIMING: [&'static str; 5] = [
        "wall_time",
        "cpu_time",
        "walltime_times_eps2",
        "cputime_times_eps2",
        "walltime_times_eps2_over_t",
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub method: MethodTag,
    pub t_end: Sig17,
    pub eps: Sig17,
    pub repeat: u32,
    pub level: usize,
    pub h: Sig17,
    pub n: u64,
    pub yhat: Sig17,
    /// Empty for enumerated levels and levels with fewer than two samples.
    pub vhat: Option<Sig17>,
    pub cost: Sig17,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub method: MethodTag,
    pub t_end: Sig17,
    pub level: usize,
    pub h: Sig17,
    /// `|E[P̂_ℓ − P̃_ℓ]|`
    pub inter_level_bias: Sig17,
    pub signed_bias: Sig17,
    pub stderr: Sig17,
    pub bias_method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactRow {
    pub method: MethodTag,
    pub t_end: Sig17,
    pub m0: usize,
    pub value: Sig17,
    pub leaves: u128,
    pub nodes: u128,
    pub probability_mass: Sig17,
    pub wall_time: Sig17,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub method: MethodTag,
    pub t_end: Sig17,
    pub eps: Sig17,
    pub c1: Sig17,
    pub order: Sig17,
    pub levels: usize,
    pub m0: usize,
    pub run_eps: Sig17,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
