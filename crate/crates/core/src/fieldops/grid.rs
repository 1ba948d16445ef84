//! Periodic grids, complex fields, the unitary transform and the elementary
//! operators M(τ), D(τ), U(τ) on sampled data.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A chirp's local wavenumber must stay below this fraction of Nyquist.
pub const NYQUIST_FRACTION: f64 = 0.8;
/// Largest total point count a grid operation may allocate.
pub const MAX_GRID_POINTS: usize = 1 << 24;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform periodic grid on (−L/2, L/2]^d with n points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub d: usize,
    pub n: usize,
    pub length: f64,
}

impl SpectralGrid {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::Domain(format!("grids support d = 1 or 2, got {d}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("points per axis must be a power of two ≥ 4, got {n}")));
        }
        if n.pow(d as u32) > MAX_GRID_POINTS {
            return Err(Error::Resolution(format!("{n}^{d} points exceeds the cap {MAX_GRID_POINTS}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!("grid length must be > 0, got {length}")));
        }
        Ok(Self { d, n, length })
    }

    /// The grid whose dual is itself: L = √(2πn).
    pub fn self_dual(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, (2.0 * PI * n as f64).sqrt())
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// x_j = (j − n/2 + 1)·dx.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64 + 1.0) * self.dx()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Frequency grid: same n, length 2πn/L, so its nodes are the ξ_k.
    pub fn dual(&self) -> SpectralGrid {
        SpectralGrid { d: self.d, n: self.n, length: 2.0 * PI * self.n as f64 / self.length }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.dual().coords()
    }

    /// Largest |ξ| per axis, πn/L.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// Coordinates of flat index `idx` (row-major, first axis slowest).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        if self.d == 1 {
            [self.coord(idx), 0.0]
        } else {
            [self.coord(idx / self.n), self.coord(idx % self.n)]
        }
    }

    pub fn radius_sq(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        p[0] * p[0] + p[1] * p[1]
    }

    pub fn matches(&self, other: &SpectralGrid) -> bool {
        self.d == other.d
            && self.n == other.n
            && (self.length - other.length).abs() <= 1e-12 * self.length.max(other.length)
    }

    /// Checks the sampling criterion for e^{i|x|²/(2τ)}: max|x|/|τ| ≤ 0.8·πn/L per axis.
    pub fn check_chirp(&self, tau: f64) -> Result<()> {
        if tau == 0.0 || !tau.is_finite() {
            return Err(Error::Domain(format!("chirp parameter τ must be finite and nonzero, got {tau}")));
        }
        let k = 0.5 * self.length / tau.abs();
        let limit = NYQUIST_FRACTION * self.nyquist();
        if k > limit {
            return Err(Error::Sampling(format!(
                "chirp 1/τ = {:.4e}: wavenumber {k:.4e} at the edge exceeds {limit:.4e} (n = {}, L = {})",
                1.0 / tau,
                self.n,
                self.length
            )));
        }
        Ok(())
    }
}

/// Complex samples on a grid, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub grid: SpectralGrid,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: SpectralGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: SpectralGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..grid.d])
            })
            .collect();
        Self { grid, values }
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// ‖f‖_r by the rectangle rule; r = ∞ gives the sup norm.
    pub fn lr_norm(&self, r: f64) -> f64 {
        if r.is_infinite() {
            return self.sup_norm();
        }
        (self.values.iter().map(|v| v.norm().powf(r)).sum::<f64>() * self.grid.cell_volume()).powf(1.0 / r)
    }

    pub fn scale(&mut self, c: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        self.scale(c);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// ‖self − other‖₂ on a shared grid.
    pub fn distance_l2(&self, other: &ComplexField) -> Result<f64> {
        if !self.grid.matches(&other.grid) {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    /// ‖self − other‖₂ / ‖self‖₂, resampling `other` onto this grid if needed.
    pub fn relative_distance(&self, other: &ComplexField) -> Result<f64> {
        let other = if self.grid.matches(&other.grid) { other.clone() } else { resample(other, &self.grid)? };
        let diff = self.distance_l2(&other)?;
        let norm = self.norm_l2();
        Ok(if norm == 0.0 { diff } else { diff / norm })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Centered transform of every axis with the (2π)^{−1/2}·h weight per axis.
fn transform_in_place(values: &mut [Complex64], d: usize, n: usize, h: f64, dir: Direction) {
    let m = n / 2 - 1;
    let s = match dir {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let turn = |p: usize| 2.0 * PI * (p % n) as f64 / n as f64;
    // e^{s·i(j−m)(k−m)·2π/n} = e^{s·2πi jk/n} · e^{−s·2πi jm/n} · e^{−s·2πi mk/n} · e^{s·2πi m²/n}
    let pre: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, -s * turn(j * m))).collect();
    let w = h / (2.0 * PI).sqrt();
    let post: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(w, -s * turn(m * k) + s * turn(m * m))).collect();
    let fft_dir = match dir {
        Direction::Forward => FftDirection::Forward,
        Direction::Inverse => FftDirection::Inverse,
    };
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft(n, fft_dir));

    let along_rows = |buf: &mut [Complex64]| {
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= pre[i % n];
        }
        plan.process(buf);
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= post[i % n];
        }
    };
    along_rows(values);
    if d == 2 {
        transpose(values, n);
        along_rows(values);
        transpose(values, n);
    }
}

fn transpose(values: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            values.swap(i * n + j, j * n + i);
        }
    }
}

/// û(ξ) = (2π)^{−d/2}∫e^{−ix·ξ}u(x)dx on the dual grid (inverse: sign +).
pub fn unitary_fft(f: &ComplexField, dir: Direction) -> ComplexField {
    let mut values = f.values.clone();
    transform_in_place(&mut values, f.grid.d, f.grid.n, f.grid.dx(), dir);
    ComplexField { grid: f.grid.dual(), values }
}

/// M(τ): multiply by e^{i|x|²/(2τ)}.
pub fn chirp_mul(f: &ComplexField, tau: f64) -> Result<ComplexField> {
    f.grid.check_chirp(tau)?;
    let mut out = f.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, f.grid.radius_sq(i) / (2.0 * tau));
    }
    Ok(out)
}

/// M(τ) after refining the grid (same box, more points) until the chirp meets
/// the sampling criterion.
pub fn chirp_mul_refined(f: &ComplexField, tau: f64) -> Result<ComplexField> {
    let mut factor = 1;
    loop {
        let g = SpectralGrid { n: f.grid.n * factor, ..f.grid };
        match g.check_chirp(tau) {
            Ok(()) => break,
            Err(Error::Sampling(msg)) => {
                factor *= 2;
                if (f.grid.n * factor).pow(f.grid.d as u32) > MAX_GRID_POINTS {
                    return Err(Error::Resolution(format!("cannot refine far enough: {msg}")));
                }
            }
            Err(e) => return Err(e),
        }
    }
    chirp_mul(&spectral_pad(f, factor)?, tau)
}

/// Multiply by e^{is|x|²/2}; s = 0 is the identity.
pub fn quadratic_phase(f: &ComplexField, s: f64) -> Result<ComplexField> {
    if s == 0.0 {
        Ok(f.clone())
    } else {
        chirp_mul(f, 1.0 / s)
    }
}

/// U(τ) = e^{iτΔ/2} via the multiplier e^{−iτ|ξ|²/2}.
pub fn free_propagate(f: &ComplexField, tau: f64) -> ComplexField {
    if tau == 0.0 {
        return f.clone();
    }
    let mut hat = unitary_fft(f, Direction::Forward);
    for (i, v) in hat.values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, -0.5 * tau * hat.grid.radius_sq(i));
    }
    unitary_fft(&hat, Direction::Inverse)
}

/// Band-limited interpolation onto n·factor points over the same box.
pub fn spectral_pad(f: &ComplexField, factor: usize) -> Result<ComplexField> {
    if factor == 1 {
        return Ok(f.clone());
    }
    if !factor.is_power_of_two() {
        return Err(Error::Domain(format!("padding factor must be a power of two, got {factor}")));
    }
    let n = f.grid.n;
    let big = SpectralGrid::new(f.grid.d, n * factor, f.grid.length)?;
    let hat = unitary_fft(f, Direction::Forward);
    let nb = big.n;
    let off = nb / 2 - n / 2;
    let mut padded = vec![Complex64::new(0.0, 0.0); big.len()];
    if f.grid.d == 1 {
        padded[off..off + n].copy_from_slice(&hat.values);
    } else {
        for r in 0..n {
            let dst = (r + off) * nb + off;
            padded[dst..dst + n].copy_from_slice(&hat.values[r * n..(r + 1) * n]);
        }
    }
    let hat_big = ComplexField { grid: big.dual(), values: padded };
    Ok(unitary_fft(&hat_big, Direction::Inverse))
}

/// (iτ)^{−d/2} on the principal branch.
pub fn dilation_factor(tau: f64, d: usize) -> Complex64 {
    (Complex64::new(0.0, tau)).powf(-(d as f64) / 2.0)
}

/// D(τ)φ = (iτ)^{−d/2}φ(x/τ). The field is zero-padded spectrally by the
/// smallest power of two P ≥ τ and relabelled onto (nP, τL).
pub fn dilate(f: &ComplexField, tau: f64) -> Result<ComplexField> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("grid dilation needs τ > 0, got {tau}")));
    }
    let p = (tau.ceil() as usize).max(1).next_power_of_two();
    if (f.grid.n * p).pow(f.grid.d as u32) > MAX_GRID_POINTS {
        return Err(Error::Resolution(format!(
            "dilation by τ = {tau} needs {}^{} points (cap {MAX_GRID_POINTS})",
            f.grid.n * p,
            f.grid.d
        )));
    }
    let padded = spectral_pad(f, p)?;
    let grid = SpectralGrid::new(f.grid.d, padded.grid.n, tau * f.grid.length)?;
    let c = dilation_factor(tau, f.grid.d);
    Ok(ComplexField { grid, values: padded.values.into_iter().map(|v| v * c).collect() })
}

/// D(τ)φ evaluated directly on `target` through the band-limited interpolant.
pub fn dilate_to(f: &ComplexField, tau: f64, target: &SpectralGrid) -> Result<ComplexField> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("grid dilation needs τ > 0, got {tau}")));
    }
    let pts: Vec<f64> = target.coords().iter().map(|x| x / tau).collect();
    let mut out = interpolate(f, target, &pts)?;
    out.scale(dilation_factor(tau, f.grid.d));
    Ok(out)
}

/// Band-limited interpolation onto `target`. Nodes outside the source box get 0.
pub fn resample(f: &ComplexField, target: &SpectralGrid) -> Result<ComplexField> {
    if f.grid.matches(target) {
        return Ok(ComplexField { grid: *target, values: f.values.clone() });
    }
    interpolate(f, target, &target.coords())
}

/// Evaluates the interpolant of `f` at `pts` along every axis; the result is
/// stored on `target`, whose per-axis node count must equal `pts.len()`.
fn interpolate(f: &ComplexField, target: &SpectralGrid, pts: &[f64]) -> Result<ComplexField> {
    if target.d != f.grid.d || pts.len() != target.n {
        return Err(Error::GridMismatch(format!("cannot interpolate {:?} onto {:?}", f.grid, target)));
    }
    let hat = unitary_fft(f, Direction::Forward);
    let basis = interpolation_basis(&f.grid, pts);
    let (n, nt) = (f.grid.n, target.n);
    let contract = |row: &[Complex64], t: usize| -> Complex64 {
        basis[t * n..(t + 1) * n].iter().zip(row).map(|(b, v)| b * v).sum()
    };
    let values = if f.grid.d == 1 {
        (0..nt).map(|t| contract(&hat.values, t)).collect()
    } else {
        // Contract the fast axis, then the slow one.
        let mut tmp = vec![Complex64::new(0.0, 0.0); n * nt];
        for k0 in 0..n {
            let row = &hat.values[k0 * n..(k0 + 1) * n];
            for t1 in 0..nt {
                tmp[t1 * n + k0] = contract(row, t1);
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); nt * nt];
        for t1 in 0..nt {
            let col = &tmp[t1 * n..(t1 + 1) * n];
            for t0 in 0..nt {
                out[t0 * nt + t1] = contract(col, t0);
            }
        }
        out
    };
    ComplexField::new(*target, values)
}

/// Row t holds e^{i x_t ξ_k}·dξ/√(2π), or zeros when x_t lies outside (−L/2, L/2].
fn interpolation_basis(src: &SpectralGrid, pts: &[f64]) -> Vec<Complex64> {
    let n = src.n;
    let xi = src.frequencies();
    let dxi = 2.0 * PI / src.length;
    let w = dxi / (2.0 * PI).sqrt();
    let half = 0.5 * src.length;
    let slack = 1e-9 * src.dx();
    let mut basis = vec![Complex64::new(0.0, 0.0); pts.len() * n];
    for (t, &x) in pts.iter().enumerate() {
        if x <= -half - slack || x > half + slack {
            continue;
        }
        let row = &mut basis[t * n..(t + 1) * n];
        let step = Complex64::from_polar(1.0, x * dxi);
        let mut cur = Complex64::new(0.0, 0.0);
        for (k, slot) in row.iter_mut().enumerate() {
            // Re-anchor the recurrence every 32 steps to bound round-off growth.
            cur = if k % 32 == 0 { Complex64::from_polar(1.0, x * xi[k]) } else { cur * step };
            *slot = cur * w;
        }
    }
    basis
}
