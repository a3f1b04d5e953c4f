//! The Langevin system, its quantities of interest, and the closed-form law
//! of the damped harmonic oscillator.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Phase-space vectors; dimensions up to four stay on the stack.
pub type Vector = SmallVec<[f64; 4]>;

/// A point `(Q, P)` in phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub q: Vector,
    pub p: Vector,
}

impl State {
    pub fn new(q: &[f64], p: &[f64]) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                got: p.len(),
            });
        }
        Ok(Self {
            q: Vector::from_slice(q),
            p: Vector::from_slice(p),
        })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    /// `V(Q) = ½ω₀²|Q|²`.
    Harmonic { omega0: f64 },
    /// `V(Q) = ω₀²/(8Q_min²) Σ (Q_i² − Q_min²)²`.
    DoubleWell { omega0: f64, qmin: f64 },
}

impl Potential {
    pub fn value(&self, q: &[f64]) -> f64 {
        match *self {
            Potential::Harmonic { omega0 } => 0.5 * omega0 * omega0 * q.iter().map(|x| x * x).sum::<f64>(),
            Potential::DoubleWell { omega0, qmin } => {
                let k = omega0 * omega0 / (8.0 * qmin * qmin);
                q.iter()
                    .map(|x| {
                        let w = x * x - qmin * qmin;
                        k * w * w
                    })
                    .sum()
            }
        }
    }

    /// Writes `∇V(q)` into `out` (same length as `q`).
    #[inline]
    pub fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        match *self {
            Potential::Harmonic { omega0 } => {
                let k = omega0 * omega0;
                for (o, x) in out.iter_mut().zip(q) {
                    *o = k * x;
                }
            }
            Potential::DoubleWell { omega0, qmin } => {
                let k = omega0 * omega0 / (2.0 * qmin * qmin);
                let q2 = qmin * qmin;
                for (o, x) in out.iter_mut().zip(q) {
                    *o = k * (x * x - q2) * x;
                }
            }
        }
    }

    pub fn gradient(&self, q: &[f64]) -> Vector {
        let mut out = Vector::from_elem(0.0, q.len());
        self.gradient_into(q, &mut out);
        out
    }

    fn validate(&self) -> Result<()> {
        match *self {
            // ω₀ = 0 is the free particle; used by the OU exactness checks.
            Potential::Harmonic { omega0 } if omega0.is_finite() && omega0 >= 0.0 => Ok(()),
            Potential::DoubleWell { omega0, qmin }
                if omega0.is_finite() && omega0 > 0.0 && qmin.is_finite() && qmin > 0.0 =>
            {
                Ok(())
            }
            other => Err(Error::invalid(format!("invalid potential parameters {other:?}"))),
        }
    }
}

/// `∇V(q)` for a given potential, checking `q` against the model dimension.
pub fn grad_potential(pot: &Potential, q: &[f64], dim: usize) -> Result<Vector> {
    if q.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: q.len(),
        });
    }
    Ok(pot.gradient(q))
}

/// The Langevin equation with its initial condition and end time.
///
/// Immutable after construction. `sigma = 0` is accepted so that deterministic
/// convergence checks can run through the same code; the analytic oracle still
/// needs `sigma > 0` only in the sense that it is then a point mass.
#[derive(Clone, Debug, PartialEq)]
pub struct LangevinModel {
    lambda: f64,
    sigma: f64,
    potential: Potential,
    q0: Vector,
    p0: Vector,
    t_end: f64,
}

impl LangevinModel {
    pub fn new(potential: Potential, lambda: f64, sigma: f64, q0: &[f64], p0: &[f64], t_end: f64) -> Result<Self> {
        potential.validate()?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!("friction must be positive, got {lambda}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(format!("noise strength must be nonnegative, got {sigma}")));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::invalid(format!("end time must be positive, got {t_end}")));
        }
        if q0.is_empty() {
            return Err(Error::invalid("dimension must be positive"));
        }
        if q0.len() != p0.len() {
            return Err(Error::DimensionMismatch {
                expected: q0.len(),
                got: p0.len(),
            });
        }
        Ok(Self {
            lambda,
            sigma,
            potential,
            q0: Vector::from_slice(q0),
            p0: Vector::from_slice(p0),
            t_end,
        })
    }

    pub fn dim(&self) -> usize {
        self.q0.len()
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn potential(&self) -> &Potential {
        &self.potential
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn q0(&self) -> &[f64] {
        &self.q0
    }
    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn initial_state(&self) -> State {
        State {
            q: self.q0.clone(),
            p: self.p0.clone(),
        }
    }

    pub fn grad_potential(&self, q: &[f64]) -> Result<Vector> {
        grad_potential(&self.potential, q, self.dim())
    }

    pub fn with_t_end(&self, t_end: f64) -> Result<Self> {
        Self::new(self.potential, self.lambda, self.sigma, &self.q0, &self.p0, t_end)
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.potential, self.lambda, sigma, &self.q0, &self.p0, self.t_end)
    }
}

/// A user-supplied phase-space functional.
#[derive(Clone)]
pub struct CustomQoi(pub Arc<dyn Fn(&State) -> f64 + Send + Sync>);

impl fmt::Debug for CustomQoi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomQoi(..)")
    }
}

/// Quantity of interest `φ(Q, P)` evaluated at the end time.
#[derive(Clone, Debug)]
pub enum QoI {
    /// `exp(−2(P−½)²)·√(2/π)` on the first momentum component.
    GaussianBump,
    /// `|Q + Q_min|² + |P|²`.
    ShiftedSquare { qmin: f64 },
    Custom(CustomQoi),
}

impl QoI {
    pub fn custom(f: impl Fn(&State) -> f64 + Send + Sync + 'static) -> Self {
        QoI::Custom(CustomQoi(Arc::new(f)))
    }

    #[inline]
    pub fn evaluate(&self, state: &State) -> f64 {
        match self {
            QoI::GaussianBump => {
                let d = state.p[0] - 0.5;
                (-2.0 * d * d).exp() * (2.0 / PI).sqrt()
            }
            QoI::ShiftedSquare { qmin } => {
                let q: f64 = state.q.iter().map(|x| (x + qmin) * (x + qmin)).sum();
                let p: f64 = state.p.iter().map(|x| x * x).sum();
                q + p
            }
            QoI::Custom(f) => (f.0)(state),
        }
    }
}

/// Joint Gaussian law of `(Q, P)` in one dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianLaw {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl GaussianLaw {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        let scale = 1.0_f64.max(cov[0][0].abs()).max(cov[1][1].abs());
        if (cov[0][1] - cov[1][0]).abs() > 1e-12 * scale {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        let (lo, _) = symmetric_eigenvalues(&cov);
        if lo < -1e-12 * scale {
            return Err(Error::invalid(format!("covariance has negative eigenvalue {lo}")));
        }
        Ok(Self { mean, cov })
    }

    pub fn point_mass(q: f64, p: f64) -> Self {
        Self {
            mean: [q, p],
            cov: [[0.0; 2]; 2],
        }
    }
}

/// Eigenvalues `(min, max)` of a symmetric 2×2 matrix.
pub fn symmetric_eigenvalues(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mid - rad, mid + rad)
}

/// Exact law of `X(t)` for the harmonic potential in one dimension.
///
/// Mean is `exp(−Λt)X₀`; the covariance integral
/// `∫₀ᵗ exp(−Λu) ΣΣᵀ exp(−Λᵀu) du` is evaluated by adaptive Gauss–Kronrod
/// quadrature.
pub fn harmonic_exact_law(model: &LangevinModel, t: f64) -> Result<GaussianLaw> {
    let omega0 = match model.potential() {
        Potential::Harmonic { omega0 } => *omega0,
        other => {
            return Err(Error::UnsupportedOracle(format!(
                "closed-form law needs a harmonic potential, got {other:?}"
            )))
        }
    };
    if model.dim() != 1 {
        return Err(Error::UnsupportedOracle(format!(
            "closed-form law is one-dimensional, model has d = {}",
            model.dim()
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    let generator = drift_matrix(omega0, model.lambda());
    let decay = expm(scale(&generator, -t));
    let x0 = [model.q0()[0], model.p0()[0]];
    let mean = [
        decay[0][0] * x0[0] + decay[0][1] * x0[1],
        decay[1][0] * x0[0] + decay[1][1] * x0[1],
    ];
    let s2 = model.sigma() * model.sigma();
    let integrand = |u: f64| {
        let e = expm(scale(&generator, -u));
        // e · diag(0, σ²) · eᵀ
        [
            s2 * e[0][1] * e[0][1],
            s2 * e[0][1] * e[1][1],
            s2 * e[1][1] * e[1][1],
        ]
    };
    let [qq, qp, pp] = integrate_gk15(&integrand, 0.0, t, 1e-14);
    GaussianLaw::new(mean, [[qq, qp], [qp, pp]])
}

/// Closed-form `E[φ(X)]` for the built-in quantities of interest.
pub fn exact_qoi_expectation(law: &GaussianLaw, qoi: &QoI) -> Result<f64> {
    match qoi {
        QoI::GaussianBump => {
            let mu = law.mean[1];
            let s2 = law.cov[1][1];
            let denom = 1.0 + 4.0 * s2;
            let d = mu - 0.5;
            Ok((2.0 / PI).sqrt() * (-2.0 * d * d / denom).exp() / denom.sqrt())
        }
        QoI::ShiftedSquare { qmin } => {
            let mq = law.mean[0] + qmin;
            Ok(mq * mq + law.cov[0][0] + law.mean[1] * law.mean[1] + law.cov[1][1])
        }
        QoI::Custom(_) => Err(Error::UnsupportedOracle(
            "no closed-form expectation for a custom quantity of interest".into(),
        )),
    }
}

/// The exact value `E[φ(X(T))]` for a one-dimensional harmonic model.
pub fn harmonic_reference(model: &LangevinModel, qoi: &QoI) -> Result<f64> {
    let law = harmonic_exact_law(model, model.t_end())?;
    exact_qoi_expectation(&law, qoi)
}

pub(crate) type Mat2 = [[f64; 2]; 2];

/// `Λ = [[0, −1], [ω₀², λ]]`, so that `dX = −ΛX dt + Σ dW`.
pub(crate) fn drift_matrix(omega0: f64, lambda: f64) -> Mat2 {
    [[0.0, -1.0], [omega0 * omega0, lambda]]
}

fn scale(m: &Mat2, s: f64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor core.
pub(crate) fn expm(m: Mat2) -> Mat2 {
    let norm = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scaled = m;
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as i32;
        scaled = scale(&m, 0.5_f64.powi(squarings));
    }
    let mut result = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = result;
    for k in 1..=18 {
        term = scale(&matmul(&term, &scaled), 1.0 / k as f64);
        for i in 0..2 {
            for j in 0..2 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights at the odd-indexed Kronrod nodes.
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15_panel<F: Fn(f64) -> [f64; 3]>(f: &F, a: f64, b: f64) -> ([f64; 3], f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kronrod = [0.0; 3];
    let mut gauss = [0.0; 3];
    let centre = f(mid);
    for c in 0..3 {
        kronrod[c] = K15_WEIGHTS[7] * centre[c];
        gauss[c] = G7_WEIGHTS[3] * centre[c];
    }
    for (i, &x) in GK_NODES[..7].iter().enumerate() {
        let lo = f(mid - half * x);
        let hi = f(mid + half * x);
        for c in 0..3 {
            let pair = lo[c] + hi[c];
            kronrod[c] += K15_WEIGHTS[i] * pair;
            if i % 2 == 1 {
                gauss[c] += G7_WEIGHTS[i / 2] * pair;
            }
        }
    }
    let mut err: f64 = 0.0;
    for c in 0..3 {
        kronrod[c] *= half;
        gauss[c] *= half;
        err = err.max((kronrod[c] - gauss[c]).abs());
    }
    (kronrod, err)
}

/// Adaptive bisection Gauss–Kronrod for a three-component integrand.
///
/// A panel is accepted once its error estimate meets its share of `tol` or
/// drops to rounding level relative to the whole integral.
pub(crate) fn integrate_gk15<F: Fn(f64) -> [f64; 3]>(f: &F, a: f64, b: f64, tol: f64) -> [f64; 3] {
    fn recurse<F: Fn(f64) -> [f64; 3]>(f: &F, a: f64, b: f64, tol: f64, noise: f64, depth: u32) -> [f64; 3] {
        let (value, err) = gk15_panel(f, a, b);
        let local = value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= tol || err <= noise * (b - a) || err <= 64.0 * f64::EPSILON * local || depth >= 40 {
            return value;
        }
        let mid = 0.5 * (a + b);
        let left = recurse(f, a, mid, 0.5 * tol, noise, depth + 1);
        let right = recurse(f, mid, b, 0.5 * tol, noise, depth + 1);
        [left[0] + right[0], left[1] + right[1], left[2] + right[2]]
    }
    if b <= a {
        return [0.0; 3];
    }
    let (rough, _) = gk15_panel(f, a, b);
    let scale = rough.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 64.0 * f64::EPSILON * scale / (b - a);
    recurse(f, a, b, tol, noise, 0)
}

/// Parameter presets used by the experiment suites.
pub mod presets {
    use super::*;

    fn harmonic(lambda: f64, sigma: f64, t_end: f64) -> LangevinModel {
        LangevinModel::new(Potential::Harmonic { omega0: 1.0 }, lambda, sigma, &[-1.0], &[-1.0], t_end)
            .expect("preset parameters are valid")
    }

    /// `ω₀ = 1, λ = 4, σ = 2`, `Q₀ = P₀ = −1`.
    pub fn harmonic_set1() -> LangevinModel {
        harmonic(4.0, 2.0, 1.0)
    }

    /// `ω₀ = 1, λ = 9, σ = 3`, `Q₀ = P₀ = −1`.
    pub fn harmonic_set2() -> LangevinModel {
        harmonic(9.0, 3.0, 1.0)
    }

    /// Small-noise oscillator `ω₀ = λ = 1, σ = 0.4` used with discrete increments.
    pub fn harmonic_small_noise() -> LangevinModel {
        harmonic(1.0, 0.4, 1.0)
    }

    /// `Q_min = ω₀ = 1, λ = 2, σ = 4`, `Q₀ = P₀ = −1`.
    pub fn double_well(t_end: f64) -> LangevinModel {
        LangevinModel::new(
            Potential::DoubleWell { omega0: 1.0, qmin: 1.0 },
            2.0,
            4.0,
            &[-1.0],
            &[-1.0],
            t_end,
        )
        .expect("preset parameters are valid")
    }

    /// Published reference values of `E[(Q+1)² + P²]` for the double well.
    pub fn double_well_reference(t_end: f64) -> Option<f64> {
        const TABLE: [(f64, f64); 4] = [
            (1.0, 4.527_826_269_85),
            (2.0, 6.110_756_023_45),
            (4.0, 7.115_707_748_35),
            (8.0, 7.212_587_273_3),
        ];
        TABLE.iter().find(|(t, _)| *t == t_end).map(|(_, v)| *v)
    }
}
