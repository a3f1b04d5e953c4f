//! Standardised increment streams and the rules that merge two fine-level
//! increments into one coarse-level increment.
//!
//! Every source emits unit-variance values. Scaling by `√h` or `α_h` is the
//! integrator's job, which keeps the coupling formulas exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistributionKind {
    Gaussian,
    /// `P(0) = 2/3`, `P(±√3) = 1/6`.
    ThreePoint,
    /// `P(±√(3+√6)) = c`, `P(±√(3−√6)) = ½ − c` with `c = ½(1 − (3+√6)/6)`.
    FourPoint,
}

impl DistributionKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, DistributionKind::Gaussian)
    }

    /// Atom table of the discrete laws; `None` for the Gaussian.
    pub fn discrete_law(self) -> Option<DiscreteLaw> {
        match self {
            DistributionKind::Gaussian => None,
            DistributionKind::ThreePoint => {
                let a = 3.0_f64.sqrt();
                Some(DiscreteLaw::new_unchecked(vec![
                    Atom::new(0.0, 2.0 / 3.0),
                    Atom::new(a, 1.0 / 6.0),
                    Atom::new(-a, 1.0 / 6.0),
                ]))
            }
            DistributionKind::FourPoint => {
                let (outer, inner, c) = four_point_constants();
                Some(DiscreteLaw::new_unchecked(vec![
                    Atom::new(outer, c),
                    Atom::new(-outer, c),
                    Atom::new(inner, 0.5 - c),
                    Atom::new(-inner, 0.5 - c),
                ]))
            }
        }
    }
}

/// `(√(3+√6), √(3−√6), c)`.
fn four_point_constants() -> (f64, f64, f64) {
    let s6 = 6.0_f64.sqrt();
    let c = 0.5 * (1.0 - (3.0 + s6) / 6.0);
    ((3.0 + s6).sqrt(), (3.0 - s6).sqrt(), c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub probability: f64,
}

impl Atom {
    pub const fn new(value: f64, probability: f64) -> Self {
        Self { value, probability }
    }
}

/// A finitely supported law on the real line.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLaw {
    atoms: Vec<Atom>,
}

impl DiscreteLaw {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("discrete law needs at least one atom"));
        }
        if atoms.iter().any(|a| !(a.probability >= 0.0) || !a.value.is_finite()) {
            return Err(Error::invalid("atoms need finite values and nonnegative probabilities"));
        }
        let total: f64 = atoms.iter().map(|a| a.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("atom probabilities sum to {total}")));
        }
        Ok(Self { atoms })
    }

    fn new_unchecked(atoms: Vec<Atom>) -> Self {
        Self { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn moment(&self, order: u32) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.probability * a.value.powi(order as i32))
            .sum()
    }

    /// Law of `(r ζ₁ + ζ₂)/√(1+r²)` for independent `ζ₁, ζ₂` from `self`.
    ///
    /// Atoms are listed with the first factor varying slowest and are not
    /// merged, so the table has `q²` entries.
    pub fn ou_combined(&self, cpl: &OuCoupling) -> DiscreteLaw {
        let mut atoms = Vec::with_capacity(self.atoms.len() * self.atoms.len());
        for a in &self.atoms {
            for b in &self.atoms {
                atoms.push(Atom::new(
                    cpl.combine_scalar(a.value, b.value),
                    a.probability * b.probability,
                ));
            }
        }
        DiscreteLaw::new_unchecked(atoms)
    }
}

/// Exact moment `E[ζ^order]` of the selected law.
pub fn moments(kind: DistributionKind, order: u32) -> f64 {
    match kind {
        DistributionKind::Gaussian => {
            if order % 2 == 1 {
                0.0
            } else {
                // (order − 1)!!
                (1..order).step_by(2).map(|k| k as f64).product()
            }
        }
        discrete => discrete.discrete_law().expect("discrete kind").moment(order),
    }
}

/// Stream identifier for sample `index` on MLMC level `level`.
///
/// Levels occupy the top 16 bits, so each level has 2⁴⁸ private streams.
pub fn stream_id(level: usize, index: u64) -> u64 {
    debug_assert!(index < 1 << 48);
    ((level as u64) << 48) | index
}

/// SplitMix64 finaliser, used to derive independent seeds for separate phases
/// (pilot runs, replications) from one user seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible stream of i.i.d. standardised increments.
///
/// Backed by ChaCha8 with the 64-bit stream selector, so `(seed, stream_id)`
/// pairs give independent, replayable sequences.
#[derive(Clone, Debug)]
pub struct IncrementSource {
    kind: DistributionKind,
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    four_point: (f64, f64, f64),
}

impl IncrementSource {
    pub fn new(kind: DistributionKind, seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            kind,
            seed,
            stream_id,
            rng,
            four_point: four_point_constants(),
        }
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn next_value(&mut self) -> f64 {
        match self.kind {
            DistributionKind::Gaussian => self.rng.sample(StandardNormal),
            DistributionKind::ThreePoint => match self.rng.random_range(0..6u32) {
                0..=3 => 0.0,
                4 => 3.0_f64.sqrt(),
                _ => -(3.0_f64.sqrt()),
            },
            DistributionKind::FourPoint => {
                let (outer, inner, c) = self.four_point;
                let u: f64 = self.rng.random();
                if u < c {
                    outer
                } else if u < 2.0 * c {
                    -outer
                } else if u < 0.5 + c {
                    inner
                } else {
                    -inner
                }
            }
        }
    }

    #[inline]
    pub fn fill(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.next_value();
        }
    }

    pub fn draw(&mut self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.fill(&mut out);
        out
    }
}

/// `α_h = √((1 − e^{−2λh})/(2λ))`, the standard deviation of the exact OU
/// noise integral over a step `h`.
#[inline]
pub fn ou_alpha(lambda: f64, h: f64) -> f64 {
    (-(-2.0 * lambda * h).exp_m1() / (2.0 * lambda)).sqrt()
}

/// Coefficients for merging two OU increments of step `h` into one of `2h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuCoupling {
    pub lambda: f64,
    pub h: f64,
    /// `e^{−λh}`
    pub r: f64,
    pub alpha_h: f64,
    pub alpha_2h: f64,
    inv_norm: f64,
}

impl OuCoupling {
    pub fn new(lambda: f64, h: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("friction must be positive, got {lambda}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("step must be positive, got {h}")));
        }
        let r = (-lambda * h).exp();
        Ok(Self {
            lambda,
            h,
            r,
            alpha_h: ou_alpha(lambda, h),
            alpha_2h: ou_alpha(lambda, 2.0 * h),
            inv_norm: 1.0 / (1.0 + r * r).sqrt(),
        })
    }

    #[inline]
    pub fn combine_scalar(&self, xi1: f64, xi2: f64) -> f64 {
        (self.r * xi1 + xi2) * self.inv_norm
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// `(ξ₁ + ξ₂)/√2`: the standardised Brownian increment over `2h` built from
/// two standardised increments over `h`.
pub fn combine_brownian(xi1: &[f64], xi2: &[f64]) -> Result<Vector> {
    check_lengths(xi1, xi2)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(xi1.iter().zip(xi2).map(|(a, b)| (a + b) * s).collect())
}

/// `(r ξ₁ + ξ₂)/√(1+r²)`: the standardised OU noise integral over `2h`.
pub fn combine_ou(xi1: &[f64], xi2: &[f64], cpl: &OuCoupling) -> Result<Vector> {
    check_lengths(xi1, xi2)?;
    Ok(xi1.iter().zip(xi2).map(|(a, b)| cpl.combine_scalar(*a, *b)).collect())
}
