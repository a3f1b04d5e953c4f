use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

/// Running sums of the level corrections `Y_ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    /// Samples taken. Zero for an exactly evaluated level.
    pub n: u64,
    pub h: f64,
    /// Work units spent on this level.
    pub cost: f64,
    /// Set when the level mean was computed without sampling.
    pub exact: Option<f64>,
    sum_y: NeumaierSum,
    sum_y2: NeumaierSum,
}

/// Partial sums over a contiguous block of sample indices.
#[derive(Clone, Debug)]
pub(crate) struct Partial {
    pub(crate) n: u64,
    pub(crate) sum_y: NeumaierSum,
    pub(crate) sum_y2: NeumaierSum,
    pub(crate) finite: bool,
}

impl Partial {
    pub(crate) fn new() -> Self {
        Self {
            n: 0,
            sum_y: NeumaierSum::new(),
            sum_y2: NeumaierSum::new(),
            finite: true,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, y: f64) {
        self.n += 1;
        self.sum_y.add(y);
        self.sum_y2.add(y * y);
        self.finite &= y.is_finite();
    }
}

impl LevelStats {
    pub fn new(level: usize, h: f64) -> Self {
        Self {
            level,
            n: 0,
            h,
            cost: 0.0,
            exact: None,
            sum_y: NeumaierSum::new(),
            sum_y2: NeumaierSum::new(),
        }
    }

    /// A level whose mean is known exactly, with zero variance.
    pub fn exact(level: usize, h: f64, value: f64, cost: f64) -> Self {
        Self {
            cost,
            exact: Some(value),
            ..Self::new(level, h)
        }
    }

    pub fn push(&mut self, y: f64) {
        self.n += 1;
        self.sum_y.add(y);
        self.sum_y2.add(y * y);
    }

    pub(crate) fn absorb(&mut self, part: &Partial, cost_per_sample: f64) {
        self.n += part.n;
        self.sum_y.merge(&part.sum_y);
        self.sum_y2.merge(&part.sum_y2);
        self.cost += part.n as f64 * cost_per_sample;
    }

    pub fn sum_y(&self) -> f64 {
        self.sum_y.value()
    }

    pub fn sum_y2(&self) -> f64 {
        self.sum_y2.value()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// `Ŷ = Σy / N`
    pub fn yhat(&self) -> f64 {
        match self.exact {
            Some(v) => v,
            None => self.sum_y() / self.n as f64,
        }
    }

    /// `V̂ = (Σy² − (Σy)²/N) / (N − 1)`, clamped at zero against rounding.
    pub fn vhat(&self) -> Result<f64> {
        if self.exact.is_some() {
            return Ok(0.0);
        }
        if self.n < 2 {
            return Err(Error::State(format!(
                "level {} has {} samples; the variance needs at least two",
                self.level, self.n
            )));
        }
        let n = self.n as f64;
        let s = self.sum_y();
        let v = (self.sum_y2() - s * s / n) / (n - 1.0);
        if !v.is_finite() {
            return Err(Error::NonFinite { level: self.level });
        }
        Ok(v.max(0.0))
    }

    /// Variance of the level mean, `V̂ / N`.
    pub fn mean_variance(&self) -> Result<f64> {
        if self.exact.is_some() {
            return Ok(0.0);
        }
        Ok(self.vhat()? / self.n as f64)
    }
}
