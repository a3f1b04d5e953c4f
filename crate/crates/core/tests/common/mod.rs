//! Reference computations shared by the integration tests.
//!
//! The step matrices below are derived by hand from the scheme definitions for
//! `V(q) = ½ω²q²`, independently of the library's integrators. For a linear
//! scheme `X⁺ = A X + B ξ`, Gaussian increments keep the state Gaussian, so the
//! expected bump is available in closed form at every step count.

#![allow(dead_code)]

use std::f64::consts::PI;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug)]
pub struct Oscillator {
    pub omega: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub q0: f64,
    pub p0: f64,
    pub t_end: f64,
}

pub const SET1: Oscillator = Oscillator {
    omega: 1.0,
    lambda: 4.0,
    sigma: 2.0,
    q0: -1.0,
    p0: -1.0,
    t_end: 1.0,
};

pub const SET2: Oscillator = Oscillator {
    omega: 1.0,
    lambda: 9.0,
    sigma: 3.0,
    q0: -1.0,
    p0: -1.0,
    t_end: 1.0,
};

pub const SMALL_NOISE: Oscillator = Oscillator {
    omega: 1.0,
    lambda: 1.0,
    sigma: 0.4,
    q0: -1.0,
    p0: -1.0,
    t_end: 1.0,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Em,
    Se,
    Sv,
}

pub const BUMP_SET1: f64 = 0.447904416997582;
pub const BUMP_SET2: f64 = 0.418086875513087;

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn apply(a: &Mat2, x: [f64; 2]) -> [f64; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

fn ou_sd(lambda: f64, h: f64) -> f64 {
    ((1.0 - (-2.0 * lambda * h).exp()) / (2.0 * lambda)).sqrt()
}

/// `(A, [B columns])` for one step of size `h`.
pub fn step_matrices(kind: Kind, o: &Oscillator, h: f64) -> (Mat2, Vec<[f64; 2]>) {
    let w2 = o.omega * o.omega;
    match kind {
        Kind::Em => (
            [[1.0, h], [-h * w2, 1.0 - o.lambda * h]],
            vec![[0.0, o.sigma * h.sqrt()]],
        ),
        Kind::Se => {
            let e = (-o.lambda * h).exp();
            let s = o.sigma * ou_sd(o.lambda, h);
            ([[1.0 - h * h * w2, h * e], [-h * w2, e]], vec![[h * s, s]])
        }
        Kind::Sv => {
            let e = (-0.5 * o.lambda * h).exp();
            let s = o.sigma * ou_sd(o.lambda, 0.5 * h);
            let ou = [[1.0, 0.0], [0.0, e]];
            let kick = [[1.0, 0.0], [-0.5 * h * w2, 1.0]];
            let drift = [[1.0, h], [0.0, 1.0]];
            let verlet = mul(&kick, &mul(&drift, &kick));
            let a = mul(&ou, &mul(&verlet, &ou));
            let lead = apply(&mul(&ou, &verlet), [0.0, s]);
            (a, vec![lead, [0.0, s]])
        }
    }
}

/// Mean and covariance of `X_M` for Gaussian increments.
pub fn gaussian_law(kind: Kind, o: &Oscillator, steps: usize) -> ([f64; 2], Mat2) {
    let h = o.t_end / steps as f64;
    let (a, b) = step_matrices(kind, o, h);
    let mut m = [o.q0, o.p0];
    let mut c = [[0.0; 2]; 2];
    for _ in 0..steps {
        m = apply(&a, m);
        let ac = mul(&a, &c);
        let mut next = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                next[i][j] = ac[i][0] * a[j][0] + ac[i][1] * a[j][1];
                for col in &b {
                    next[i][j] += col[i] * col[j];
                }
            }
        }
        c = next;
    }
    (m, c)
}

/// `E[√(2/π) exp(−2(P − ½)²)]` for `P ~ N(mean, var)`.
pub fn bump_of_gaussian(mean: f64, var: f64) -> f64 {
    let s = 1.0 + 4.0 * var;
    (2.0 / PI).sqrt() / s.sqrt() * (-2.0 * (mean - 0.5).powi(2) / s).exp()
}

/// Expected bump of the discrete-time scheme with Gaussian increments.
pub fn scheme_bump(kind: Kind, o: &Oscillator, steps: usize) -> f64 {
    let (m, c) = gaussian_law(kind, o, steps);
    bump_of_gaussian(m[1], c[1][1])
}

/// End-momentum coefficients `P_M = m + Σ c_j ξ_j` for a linear scheme.
pub fn momentum_expansion(kind: Kind, o: &Oscillator, steps: usize) -> (f64, Vec<f64>) {
    let h = o.t_end / steps as f64;
    let (a, b) = step_matrices(kind, o, h);
    let mut m = [o.q0, o.p0];
    for _ in 0..steps {
        m = apply(&a, m);
    }
    let mut w = [0.0, 1.0];
    let mut coeffs = vec![0.0; steps * b.len()];
    for n in (0..steps).rev() {
        for (j, col) in b.iter().enumerate() {
            coeffs[n * b.len() + j] = w[0] * col[0] + w[1] * col[1];
        }
        w = [w[0] * a[0][0] + w[1] * a[1][0], w[0] * a[0][1] + w[1] * a[1][1]];
    }
    (m[1], coeffs)
}

/// Expected bump when every increment is drawn from the atoms `(value, prob)`,
/// by Simpson integration of the characteristic-function representation
/// `exp(−2u²) = E[cos(Ku)]`, `K ~ N(0, 4)`.
pub fn discrete_bump(kind: Kind, o: &Oscillator, steps: usize, atoms: &[(f64, f64)]) -> f64 {
    let (mean, coeffs) = momentum_expansion(kind, o, steps);
    let chi = |t: f64| atoms.iter().map(|&(v, p)| p * (t * v).cos()).sum::<f64>();
    let f = |k: f64| {
        let mut prod = (k * (mean - 0.5)).cos();
        for &c in &coeffs {
            prod *= chi(k * c);
        }
        (-k * k / 8.0).exp() / (2.0 * (2.0 * PI).sqrt()) * prod
    };
    let n = 40_000;
    let (a, b) = (0.0, 26.0);
    let dx = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * dx) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (2.0 / PI).sqrt() * 2.0 * acc * dx / 3.0
}

pub fn three_point() -> Vec<(f64, f64)> {
    let r = 3f64.sqrt();
    vec![(-r, 1.0 / 6.0), (0.0, 2.0 / 3.0), (r, 1.0 / 6.0)]
}

pub fn four_point() -> Vec<(f64, f64)> {
    let r6 = 6f64.sqrt();
    let c = 0.5 * (1.0 - (3.0 + r6) / 6.0);
    let a = (3.0 - r6).sqrt();
    let b = (3.0 + r6).sqrt();
    vec![(-b, c), (-a, 0.5 - c), (a, 0.5 - c), (b, c)]
}

/// Merged law `(r a + b)/√(1 + r²)` of two draws.
pub fn merged(atoms: &[(f64, f64)], r: f64) -> Vec<(f64, f64)> {
    let norm = (1.0 + r * r).sqrt();
    let mut out = Vec::new();
    for &(a, pa) in atoms {
        for &(b, pb) in atoms {
            out.push(((r * a + b) / norm, pa * pb));
        }
    }
    out
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-log slope of `|ys|` against `hs`.
pub fn loglog_slope(hs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = hs.iter().map(|h| h.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().log2()).collect();
    slope(&lx, &ly)
}

/// Sample mean, unbiased variance and standard error.
pub fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var, (var / n).sqrt())
}
