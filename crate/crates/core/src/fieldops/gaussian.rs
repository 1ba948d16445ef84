//! Closed-form Gaussian wave packets and the exact action of every
//! elementary operator on their parameters.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{
    chirp_mul, dilate, free_propagate, quadratic_phase, unitary_fft, ComplexField, Direction, SpectralGrid,
};
use crate::error::{Error, Result};

/// exp(−(a/2)|x|² + β·x + γ), equivalently
/// amplitude·e^{−a|x−x₀|²/2 + iξ₀·x} with β = a x₀ + iξ₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexGaussian {
    pub d: usize,
    pub a: Complex64,
    pub beta: [Complex64; 2],
    pub gamma: Complex64,
}

impl ComplexGaussian {
    pub fn new(d: usize, amplitude: Complex64, x0: &[f64], xi0: &[f64], a: Complex64) -> Result<Self> {
        if !(1..=2).contains(&d) || x0.len() != d || xi0.len() != d {
            return Err(Error::Domain(format!("gaussian needs d ∈ {{1,2}} and length-d center/momentum, d = {d}")));
        }
        if !(a.re > 0.0) {
            return Err(Error::Domain(format!("gaussian width needs Re a > 0, got {a}")));
        }
        if amplitude == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("gaussian amplitude must be nonzero".into()));
        }
        let mut beta = [Complex64::new(0.0, 0.0); 2];
        let mut r2 = 0.0;
        for i in 0..d {
            beta[i] = a * x0[i] + Complex64::new(0.0, xi0[i]);
            r2 += x0[i] * x0[i];
        }
        Ok(Self { d, a, beta, gamma: amplitude.ln() - a * r2 / 2.0 })
    }

    /// e^{−|x|²/2}.
    pub fn unit(d: usize) -> Self {
        Self { d, a: Complex64::new(1.0, 0.0), beta: [Complex64::new(0.0, 0.0); 2], gamma: Complex64::new(0.0, 0.0) }
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.d).map(|i| self.beta[i].re / self.a.re).collect()
    }

    pub fn momentum(&self) -> Vec<f64> {
        let x0 = self.center();
        (0..self.d).map(|i| self.beta[i].im - self.a.im * x0[i]).collect()
    }

    pub fn amplitude(&self) -> Complex64 {
        let r2: f64 = self.center().iter().map(|v| v * v).sum();
        (self.gamma + self.a * r2 / 2.0).exp()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut e = self.gamma;
        for i in 0..self.d {
            e += -self.a * x[i] * x[i] / 2.0 + self.beta[i] * x[i];
        }
        e.exp()
    }

    pub fn to_field(&self, grid: &SpectralGrid) -> Result<ComplexField> {
        if grid.d != self.d {
            return Err(Error::GridMismatch(format!("gaussian d = {} vs grid d = {}", self.d, grid.d)));
        }
        ComplexField::new(*grid, ComplexField::from_fn(*grid, |x| self.eval(x)).values)
    }

    pub fn norm_l2(&self) -> f64 {
        let ra = self.a.re;
        let rb2: f64 = (0..self.d).map(|i| self.beta[i].re.powi(2)).sum();
        ((PI / ra).powf(self.d as f64 / 2.0) * (rb2 / ra + 2.0 * self.gamma.re).exp()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        let x0 = self.center();
        self.eval(&x0).norm()
    }

    /// Minimum, over space and frequency, of the Gaussian exponent at the grid
    /// edge; values ≳ 40 mean both tails are below round-off.
    pub fn resolution_margin(&self, grid: &SpectralGrid) -> f64 {
        let edge = |g: &ComplexGaussian, half: f64| {
            g.center().iter().map(|c| 0.5 * g.a.re * (half - c.abs()).max(0.0).powi(2)).fold(f64::INFINITY, f64::min)
        };
        let space = edge(self, 0.5 * grid.length);
        let freq = Op::F.apply_gaussian(self).map(|h| edge(&h, grid.nyquist())).unwrap_or(0.0);
        space.min(freq)
    }

    /// Whether the two describe the same function to relative tolerance `tol`.
    pub fn approx_eq(&self, other: &ComplexGaussian, tol: f64) -> bool {
        let scale = self.a.norm().max(1.0);
        self.d == other.d
            && (self.a - other.a).norm() <= tol * scale
            && (0..self.d).all(|i| (self.beta[i] - other.beta[i]).norm() <= tol * scale.max(self.beta[i].norm()))
            && (self.gamma.exp() - other.gamma.exp()).norm() <= tol * self.gamma.exp().norm()
    }
}

/// Elementary operators. Sequences are applied first element first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Op {
    /// M(τ): e^{i|x|²/(2τ)}.
    M(f64),
    /// D(τ): (iτ)^{−d/2}φ(x/τ).
    D(f64),
    F,
    FInv,
    /// U(τ) = e^{iτΔ/2}.
    U(f64),
    /// e^{is|x|²/2}.
    E(f64),
    Scale(Complex64),
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::M(t) => write!(f, "M({t})"),
            Op::D(t) => write!(f, "D({t})"),
            Op::F => write!(f, "F"),
            Op::FInv => write!(f, "F⁻¹"),
            Op::U(t) => write!(f, "U({t})"),
            Op::E(s) => write!(f, "E({s})"),
            Op::Scale(c) => write!(f, "×({c})"),
        }
    }
}

fn fourier(g: &ComplexGaussian, sign: f64) -> ComplexGaussian {
    let a = g.a;
    let mut beta = [Complex64::new(0.0, 0.0); 2];
    let mut bb = Complex64::new(0.0, 0.0);
    for i in 0..g.d {
        beta[i] = Complex64::new(0.0, sign) * g.beta[i] / a;
        bb += g.beta[i] * g.beta[i];
    }
    ComplexGaussian { d: g.d, a: 1.0 / a, beta, gamma: g.gamma + bb / (2.0 * a) - a.ln() * (g.d as f64 / 2.0) }
}

impl Op {
    /// Exact parameter map. Fails if the result is not normalizable.
    pub fn apply_gaussian(&self, g: &ComplexGaussian) -> Result<ComplexGaussian> {
        let i = Complex64::new(0.0, 1.0);
        let out = match *self {
            Op::M(tau) => {
                if tau == 0.0 {
                    return Err(Error::Domain("M(0) is undefined".into()));
                }
                ComplexGaussian { a: g.a - i / tau, ..*g }
            }
            Op::E(s) => ComplexGaussian { a: g.a - i * s, ..*g },
            Op::F => fourier(g, -1.0),
            Op::FInv => fourier(g, 1.0),
            Op::D(tau) => {
                if tau == 0.0 {
                    return Err(Error::Domain("D(0) is undefined".into()));
                }
                let mut beta = g.beta;
                beta.iter_mut().for_each(|b| *b /= tau);
                ComplexGaussian {
                    d: g.d,
                    a: g.a / (tau * tau),
                    beta,
                    gamma: g.gamma - Complex64::new(0.0, tau).ln() * (g.d as f64 / 2.0),
                }
            }
            Op::U(tau) => {
                let mut h = fourier(g, -1.0);
                h.a += i * tau;
                if !(h.a.re > 0.0) {
                    return Err(Error::OracleBreakdown { step: 0, re_a: h.a.re });
                }
                fourier(&h, 1.0)
            }
            Op::Scale(c) => ComplexGaussian { gamma: g.gamma + c.ln(), ..*g },
        };
        if !(out.a.re > 0.0) {
            return Err(Error::OracleBreakdown { step: 0, re_a: out.a.re });
        }
        Ok(out)
    }

    pub fn apply_field(&self, f: &ComplexField) -> Result<ComplexField> {
        match *self {
            Op::M(tau) => chirp_mul(f, tau),
            Op::E(s) => quadratic_phase(f, s),
            Op::F => Ok(unitary_fft(f, Direction::Forward)),
            Op::FInv => Ok(unitary_fft(f, Direction::Inverse)),
            Op::D(tau) => dilate(f, tau),
            Op::U(tau) => Ok(free_propagate(f, tau)),
            Op::Scale(c) => Ok(f.clone().scaled(c)),
        }
    }
}

/// Composes the exact maps of `ops` (first element applied first).
pub fn gaussian_propagate(ops: &[Op], g: &ComplexGaussian) -> Result<ComplexGaussian> {
    ops.iter().enumerate().try_fold(*g, |acc, (step, op)| {
        op.apply_gaussian(&acc).map_err(|e| match e {
            Error::OracleBreakdown { re_a, .. } => Error::OracleBreakdown { step, re_a },
            other => other,
        })
    })
}

/// Applies `ops` to a grid field (first element applied first).
pub fn apply_ops(ops: &[Op], f: &ComplexField) -> Result<ComplexField> {
    ops.iter().try_fold(f.clone(), |acc, op| op.apply_field(&acc))
}
