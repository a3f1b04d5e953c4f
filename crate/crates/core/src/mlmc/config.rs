use crate::error::{Error, Result};
use crate::exact_coarse::DEFAULT_LEAF_BUDGET;
use crate::increments::DistributionKind;
use crate::integrators::Scheme;

/// How the mean-square error budget `ε²` is divided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorSplit {
    /// Half to the finest-level bias, half to sampling.
    BiasVariance,
    /// A third each to the finest-level bias, the inter-level bias of
    /// discrete increments, and sampling.
    ThreeWay,
}

impl ErrorSplit {
    pub fn for_distribution(dist: DistributionKind) -> Self {
        if dist.is_discrete() {
            ErrorSplit::ThreeWay
        } else {
            ErrorSplit::BiasVariance
        }
    }

    /// Parts of `ε²` in the error budget: 2 or 3.
    pub fn parts(self) -> f64 {
        match self {
            ErrorSplit::BiasVariance => 2.0,
            ErrorSplit::ThreeWay => 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlmcConfig {
    /// Target root-mean-square error `ε`.
    pub eps: f64,
    /// Steps on the coarsest level.
    pub m0: usize,
    /// Finest level index `L`.
    pub levels: usize,
    /// Initial samples per level.
    pub n_min: u64,
    pub scheme: Scheme,
    pub dist: DistributionKind,
    pub extrapolate: bool,
    pub exact_coarse: bool,
    /// Weak order used for extrapolation and calibration.
    pub alpha: f64,
    pub split: ErrorSplit,
    pub max_rounds: usize,
    pub leaf_budget: u128,
}

impl MlmcConfig {
    /// Gaussian increments, no extrapolation, `N_min = 100`.
    pub fn new(eps: f64, m0: usize, levels: usize, scheme: Scheme) -> Self {
        Self {
            eps,
            m0,
            levels,
            n_min: 100,
            scheme,
            dist: DistributionKind::Gaussian,
            extrapolate: false,
            exact_coarse: false,
            alpha: scheme.weak_order(),
            split: ErrorSplit::BiasVariance,
            max_rounds: 1000,
            leaf_budget: DEFAULT_LEAF_BUDGET,
        }
    }

    /// Switches the increment law and the matching error split.
    pub fn with_distribution(mut self, dist: DistributionKind) -> Self {
        self.dist = dist;
        self.split = ErrorSplit::for_distribution(dist);
        self
    }

    pub fn with_exact_coarse(mut self, on: bool) -> Self {
        self.exact_coarse = on;
        self
    }

    pub fn with_extrapolation(mut self, on: bool) -> Self {
        self.extrapolate = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if self.m0 == 0 {
            return Err(Error::invalid("M0 must be positive"));
        }
        if self.levels >= 48 || self.m0.checked_mul(1usize << self.levels).is_none() {
            return Err(Error::invalid(format!("level count {} is too large", self.levels)));
        }
        if self.n_min < 2 {
            return Err(Error::invalid("N_min must be at least 2"));
        }
        if !(self.alpha >= 0.5) {
            return Err(Error::invalid(format!("weak order must be at least 1/2, got {}", self.alpha)));
        }
        if self.exact_coarse && !self.dist.is_discrete() {
            return Err(Error::invalid("exact coarse evaluation needs a discrete increment law"));
        }
        if self.extrapolate {
            if self.levels < 1 {
                return Err(Error::invalid("extrapolation needs at least two levels"));
            }
            if self.alpha != 1.0 && self.alpha != 2.0 {
                return Err(Error::invalid(format!("extrapolation supports weak order 1 or 2, got {}", self.alpha)));
            }
        }
        if self.max_rounds == 0 {
            return Err(Error::invalid("max_rounds must be positive"));
        }
        Ok(())
    }

    /// `M_ℓ = M0·2^ℓ`
    pub fn steps(&self, level: usize) -> usize {
        self.m0 << level
    }

    /// `h_ℓ = T / M_ℓ`
    pub fn h(&self, level: usize, t_end: f64) -> f64 {
        t_end / self.steps(level) as f64
    }
}
