//! Homogeneous nonlinearities F(z) = |z|^{1+p_c} g(arg z) and the Fourier
//! coefficients of their periodic symbol g.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::fit::fit_line;
use crate::params::{a_d, critical_exponent};

/// Default truncation of the coefficient table.
pub const DEFAULT_TRUNCATION: usize = 2048;
/// Successive quadrature tables must agree to this (max abs difference).
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;
/// Largest quadrature size tried before giving up.
pub const MAX_QUADRATURE_POINTS: usize = 1 << 22;
/// Safety margin subtracted from the fitted decay rate in the tail bound.
pub const TAIL_MARGIN: f64 = 0.2;
/// Threshold for the "≈ 0" flags on g₀ and Im g₁.
pub const VANISHING_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityParams {
    pub d: usize,
    pub lambda: f64,
    pub p_c: f64,
    pub eta: f64,
}

impl NonlinearityParams {
    pub fn new(d: usize, lambda: f64, eta: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Domain(format!("d must be 1, 2 or 3, got {d}")));
        }
        if !(0.0..0.5).contains(&lambda) {
            return Err(Error::Domain(format!("λ must lie in [0, 1/2), got {lambda}")));
        }
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("η must be > 0, got {eta}")));
        }
        Ok(Self { d, lambda, p_c: critical_exponent(d, lambda), eta })
    }
}

type Evaluator = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A 2π-periodic symbol g(θ) = F(e^{iθ}).
#[derive(Clone)]
pub struct PeriodicSymbol {
    eval: Arc<Evaluator>,
    label: String,
}

impl fmt::Debug for PeriodicSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicSymbol").field("label", &self.label).finish()
    }
}

impl PeriodicSymbol {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), label: label.into() }
    }

    /// μe^{iθ}, i.e. F(u) = μ|u|^{p_c}u.
    pub fn gauge(mu: f64) -> Self {
        Self::new(format!("gauge(mu={mu})"), move |th| Complex64::from_polar(mu, th))
    }

    /// |cos θ|^α cos θ, i.e. F(u) = |Re u|^α Re u for α = p_c.
    pub fn re_power(alpha: f64) -> Self {
        Self::new(format!("re-power(alpha={alpha})"), move |th| {
            let c = th.cos();
            Complex64::new(c.abs().powf(alpha) * c, 0.0)
        })
    }

    /// |cos θ|^α cos θ − i|sin θ|^α sin θ, whose resonant coefficient vanishes.
    pub fn two_term(alpha: f64) -> Self {
        Self::new(format!("two-term(alpha={alpha})"), move |th| {
            let (s, c) = th.sin_cos();
            Complex64::new(c.abs().powf(alpha) * c, -s.abs().powf(alpha) * s)
        })
    }

    pub fn cos() -> Self {
        Self::new("cos", |th| Complex64::new(th.cos(), 0.0))
    }

    /// Identically zero symbol (F ≡ 0).
    pub fn zero() -> Self {
        Self::new("zero", |_| Complex64::new(0.0, 0.0))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        (self.eval)(theta)
    }

    /// Largest |g(θ+2π) − g(θ)| over `samples` uniform points.
    pub fn periodicity_defect(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|j| {
                let th = -PI + 2.0 * PI * j as f64 / samples as f64;
                (self.eval(th + 2.0 * PI) - self.eval(th)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Whether g is real on `samples` uniform points (to `tol`).
    pub fn is_real_valued(&self, samples: usize, tol: f64) -> bool {
        (0..samples).all(|j| self.eval(2.0 * PI * j as f64 / samples as f64).im.abs() <= tol)
    }
}

/// F(z) = |z|^{1+p_c} g(arg z), with F(0) = 0.
pub fn evaluate_f(g: &PeriodicSymbol, params: &NonlinearityParams, z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    g.eval(z.arg()) * z.norm().powf(1.0 + params.p_c)
}

/// Fourier coefficients g_n for |n| ≤ N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub n_max: usize,
    /// g_n stored at index n + n_max.
    pub coeffs: Vec<Complex64>,
    pub quadrature_points: usize,
    /// Max difference to the table at half the quadrature size.
    pub last_change: f64,
}

impl CoefficientTable {
    pub fn get(&self, n: i64) -> Complex64 {
        let idx = n + self.n_max as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// (n, g_n) in ascending n.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n_max = self.n_max as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - n_max, c))
    }

    /// Σ_{|n|≤N} g_n e^{inθ}.
    pub fn reconstruct(&self, theta: f64) -> Complex64 {
        self.iter().map(|(n, c)| c * Complex64::from_polar(1.0, n as f64 * theta)).sum()
    }

    /// Magnitude below which a coefficient is treated as zero.
    pub fn noise_floor(&self) -> f64 {
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (1e-12 * peak).max(self.last_change).max(f64::MIN_POSITIVE)
    }
}

fn sample_coefficients(g: &PeriodicSymbol, n_max: usize, m: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..m).map(|j| g.eval(2.0 * PI * j as f64 / m as f64)).collect();
    planner.plan_fft_forward(m).process(&mut buf);
    let n_max = n_max as i64;
    (-n_max..=n_max)
        .map(|n| buf[n.rem_euclid(m as i64) as usize] / m as f64)
        .collect()
}

/// g_n by the M-point trapezoid rule, doubling M until successive tables agree
/// to `DEFAULT_QUADRATURE_TOL`.
pub fn fourier_coefficients(g: &PeriodicSymbol, n_max: usize, m: usize) -> Result<CoefficientTable> {
    fourier_coefficients_with_tol(g, n_max, m, DEFAULT_QUADRATURE_TOL)
}

pub fn fourier_coefficients_with_tol(
    g: &PeriodicSymbol,
    n_max: usize,
    m: usize,
    tol: f64,
) -> Result<CoefficientTable> {
    if !m.is_power_of_two() || m < 4 * n_max.max(1) {
        return Err(Error::Domain(format!(
            "quadrature size M = {m} must be a power of two with M ≥ 4N = {}",
            4 * n_max.max(1)
        )));
    }
    let mut planner = FftPlanner::new();
    let mut m = m;
    let mut prev = sample_coefficients(g, n_max, m, &mut planner);
    loop {
        let next_m = 2 * m;
        if next_m > MAX_QUADRATURE_POINTS {
            return Err(Error::Quadrature { points: m, change: f64::NAN });
        }
        let next = sample_coefficients(g, n_max, next_m, &mut planner);
        let change = prev.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if !change.is_finite() {
            return Err(Error::Quadrature { points: next_m, change });
        }
        if change <= tol {
            return Ok(CoefficientTable { n_max, coeffs: next, quadrature_points: next_m, last_change: change });
        }
        if 2 * next_m > MAX_QUADRATURE_POINTS {
            return Err(Error::Quadrature { points: next_m, change });
        }
        prev = next;
        m = next_m;
    }
}

/// Gauge part 𝒢(u) = g₁|u|^{p_c}u, non-resonant part 𝒩(u) = Σ_{n≠0,1} g_n|u|^{1+p_c−n}uⁿ
/// (truncated to the table) and the g₀ part g₀|u|^{1+p_c}.
pub fn resonant_split(
    table: &CoefficientTable,
    params: &NonlinearityParams,
    u: Complex64,
) -> (Complex64, Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    if u == zero {
        return (zero, zero, zero);
    }
    // |u|^{1+p_c−n}uⁿ = |u|^{1+p_c} e^{inθ}; the polar form avoids overflow in uⁿ.
    let r = u.norm().powf(1.0 + params.p_c);
    let th = u.arg();
    let gauge = table.get(1) * r * Complex64::from_polar(1.0, th);
    let g0 = table.get(0) * r;
    let non_res: Complex64 = table
        .iter()
        .filter(|(n, _)| *n != 0 && *n != 1)
        .map(|(n, c)| c * Complex64::from_polar(1.0, n as f64 * th))
        .sum::<Complex64>()
        * r;
    (gauge, non_res, g0)
}

/// Least-squares slope of log|g_n| against log n over odd n ≥ 4 above the
/// noise floor, with |g_n| taken as the root mean square of ±n.
pub fn decay_exponent_fit(table: &CoefficientTable) -> Result<f64> {
    decay_fit(table).map(|(slope, _)| slope)
}

/// (slope, usable points).
fn decay_fit(table: &CoefficientTable) -> Result<(f64, Vec<(f64, f64)>)> {
    let floor = table.noise_floor();
    let pts: Vec<(f64, f64)> = (4..=table.n_max as i64)
        .filter(|n| n % 2 == 1)
        .filter_map(|n| {
            let mag = (0.5 * (table.get(n).norm_sqr() + table.get(-n).norm_sqr())).sqrt();
            (mag > floor).then_some((n as f64, mag))
        })
        .collect();
    if pts.len() < 8 {
        return Err(Error::DegenerateFit { usable: pts.len(), needed: 8 });
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    Ok((fit_line(&x, &y)?.slope, pts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub a_d: f64,
    /// 1 + a_d(λ) + η.
    pub weight_exponent: f64,
    /// Σ_{|n|≤N} |n|^{1+a+η}|g_n|.
    pub partial_sum: f64,
    /// Bound on the omitted tail; `None` when it cannot be certified.
    pub tail_bound: Option<f64>,
    pub fitted_decay: Option<f64>,
    pub g0_abs: f64,
    pub im_g1_abs: f64,
    pub g0_vanishes: bool,
    pub im_g1_vanishes: bool,
    pub weighted_sum_finite: bool,
    /// Largest η for which the tail bound still converges; `None` if unbounded
    /// (finitely many nonzero coefficients) or if no decay could be fitted.
    pub max_certified_eta: Option<f64>,
    pub finite_support: bool,
    pub passed: bool,
}

/// Checks g₀ ≈ 0, Im g₁ ≈ 0 and Σ|n|^{1+a_d(λ)+η}|g_n| < ∞.
pub fn check_a2(table: &CoefficientTable, params: &NonlinearityParams) -> Result<A2Report> {
    let a = a_d(params.d, params.lambda)?;
    let w = 1.0 + a + params.eta;
    let partial_sum: f64 = table.iter().map(|(n, c)| (n.unsigned_abs() as f64).powf(w) * c.norm()).sum();
    let g0_abs = table.get(0).norm();
    let im_g1_abs = table.get(1).im.abs();

    let floor = table.noise_floor();
    let half = table.n_max as i64 / 2;
    let upper_silent = table.iter().filter(|(n, _)| n.abs() > half).all(|(_, c)| c.norm() <= floor);

    let (tail_bound, fitted_decay, max_eta, finite_support) = match decay_fit(table) {
        Ok((slope, pts)) => {
            let s = slope + TAIL_MARGIN;
            // |g_n| ≤ C n^s fitted on the upper half of the usable points.
            let c = pts[pts.len() / 2..].iter().map(|(n, m)| m / n.powf(s)).fold(0.0, f64::max);
            let p = w + s;
            let big_n = table.n_max as f64;
            let tail = (p < -1.0).then(|| 2.0 * c * big_n.powf(p + 1.0) / (-p - 1.0));
            (tail, Some(slope), Some(-s - 2.0 - a), false)
        }
        Err(Error::DegenerateFit { .. }) if upper_silent => (Some(0.0), None, None, true),
        Err(Error::DegenerateFit { .. }) => (None, None, None, false),
        Err(e) => return Err(e),
    };

    let g0_vanishes = g0_abs < VANISHING_TOL;
    let im_g1_vanishes = im_g1_abs < VANISHING_TOL;
    let weighted_sum_finite = partial_sum.is_finite() && tail_bound.is_some_and(f64::is_finite);
    Ok(A2Report {
        a_d: a,
        weight_exponent: w,
        partial_sum,
        tail_bound,
        fitted_decay,
        g0_abs,
        im_g1_abs,
        g0_vanishes,
        im_g1_vanishes,
        weighted_sum_finite,
        max_certified_eta: max_eta,
        finite_support,
        passed: g0_vanishes && im_g1_vanishes && weighted_sum_finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P_C: f64 = 20.0 / 9.0;

    fn params() -> NonlinearityParams {
        NonlinearityParams::new(1, 0.1, 0.1).unwrap()
    }

    /// 1/Γ(z), valid for all real z via reflection.
    fn recip_gamma(z: f64) -> f64 {
        if z <= 0.0 && z.fract() == 0.0 {
            0.0
        } else if z < 0.5 {
            (PI * z).sin() * statrs::function::gamma::gamma(1.0 - z) / PI
        } else {
            1.0 / statrs::function::gamma::gamma(z)
        }
    }

    /// Coefficients of |cos θ|^α cos θ: g_n = 2Γ(α+2) / (2^{α+2} Γ((α+3+n)/2) Γ((α+3−n)/2))
    /// for odd n, zero for even n.
    fn re_power_exact(alpha: f64, n: i64) -> f64 {
        if n % 2 == 0 {
            return 0.0;
        }
        let nf = n as f64;
        2.0 * statrs::function::gamma::gamma(alpha + 2.0) / 2f64.powf(alpha + 2.0)
            * recip_gamma((alpha + 3.0 + nf) / 2.0)
            * recip_gamma((alpha + 3.0 - nf) / 2.0)
    }

    #[test]
    fn evaluate_examples() {
        let nl = NonlinearityParams { d: 1, lambda: 0.0, p_c: 2.0, eta: 0.1 };
        let g = PeriodicSymbol::gauge(1.0);
        assert!((evaluate_f(&g, &nl, Complex64::new(2.0, 0.0)) - 8.0).norm() < 1e-14);
        assert_eq!(evaluate_f(&g, &nl, Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn a1_value() {
        assert!((a_d(1, 0.1).unwrap() - 0.184375).abs() < 1e-15);
    }

    #[test]
    fn gauge_coefficients() {
        let t = fourier_coefficients(&PeriodicSymbol::gauge(0.7), 64, 256).unwrap();
        for (n, c) in t.iter() {
            let want = if n == 1 { 0.7 } else { 0.0 };
            assert!((c - want).norm() < 1e-12, "n={n}: {c}");
        }
        let r = check_a2(&t, &params()).unwrap();
        assert!(r.finite_support && r.passed);
        assert!((r.partial_sum - 0.7).abs() < 1e-12);
        assert!(matches!(decay_exponent_fit(&t), Err(Error::DegenerateFit { .. })));
    }

    #[test]
    fn rejects_bad_quadrature_size() {
        let g = PeriodicSymbol::cos();
        assert!(fourier_coefficients(&g, 64, 200).is_err());
        assert!(fourier_coefficients(&g, 64, 128).is_err());
        assert!(matches!(decay_exponent_fit(&fourier_coefficients(&g, 16, 64).unwrap()), Err(Error::DegenerateFit { .. })));
    }

    #[test]
    fn re_power_matches_gamma_closed_form() {
        let t = fourier_coefficients(&PeriodicSymbol::re_power(P_C), 256, 1024).unwrap();
        for n in -40..=40 {
            let want = re_power_exact(P_C, n);
            assert!((t.get(n) - want).norm() < 1e-12, "n={n}: {} vs {want}", t.get(n));
        }
        assert!(t.get(0).norm() < 1e-12);
        assert!(t.get(1).re > 0.0);
    }

    #[test]
    fn re_power_decay_and_a2() {
        let t = fourier_coefficients(&PeriodicSymbol::re_power(P_C), DEFAULT_TRUNCATION, 4 * DEFAULT_TRUNCATION).unwrap();
        let slope = decay_exponent_fit(&t).unwrap();
        assert!((slope + P_C + 2.0).abs() < 0.15, "{slope}");
        let r = check_a2(&t, &params()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_certified_eta.unwrap() > 0.1);
    }

    // Brute-force partial sums at increasing N approach the certified total.
    #[test]
    fn tail_bound_covers_brute_force() {
        let g = PeriodicSymbol::re_power(P_C);
        let small = fourier_coefficients(&g, 128, 512).unwrap();
        let big = fourier_coefficients(&g, 2048, 8192).unwrap();
        let r_small = check_a2(&small, &params()).unwrap();
        let r_big = check_a2(&big, &params()).unwrap();
        assert!(r_big.partial_sum > r_small.partial_sum);
        assert!(r_small.partial_sum + r_small.tail_bound.unwrap() >= r_big.partial_sum);
    }

    #[test]
    fn two_term_has_no_resonant_part() {
        let t = fourier_coefficients(&PeriodicSymbol::two_term(P_C), 256, 1024).unwrap();
        assert!(t.get(1).norm() < 1e-12, "{}", t.get(1));
        assert!(t.get(0).norm() < 1e-12);
    }

    #[test]
    fn parseval() {
        let g = PeriodicSymbol::re_power(P_C);
        let t = fourier_coefficients(&g, 2048, 8192).unwrap();
        let lhs: f64 = t.coeffs.iter().map(|c| c.norm_sqr()).sum();
        let m = 1 << 16;
        let rhs: f64 = (0..m).map(|j| g.eval(2.0 * PI * j as f64 / m as f64).norm_sqr()).sum::<f64>() / m as f64;
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn reconstruction_improves_with_n() {
        let g = PeriodicSymbol::re_power(P_C);
        let full = fourier_coefficients(&g, 256, 1024).unwrap();
        let mut prev = f64::INFINITY;
        for n in [4usize, 8, 16, 32, 64, 128, 256] {
            let t = CoefficientTable {
                n_max: n,
                coeffs: (-(n as i64)..=n as i64).map(|k| full.get(k)).collect(),
                quadrature_points: full.quadrature_points,
                last_change: full.last_change,
            };
            let err = (0..97)
                .map(|j| {
                    let th = -PI + 2.0 * PI * j as f64 / 97.0;
                    (g.eval(th) - t.reconstruct(th)).norm()
                })
                .fold(0.0, f64::max);
            assert!(err < prev, "N={n}: {err} !< {prev}");
            prev = err;
        }
    }

    #[test]
    fn conjugate_symmetry_for_real_symbols() {
        for g in [PeriodicSymbol::re_power(P_C), PeriodicSymbol::cos()] {
            assert!(g.is_real_valued(512, 0.0));
            let t = fourier_coefficients(&g, 128, 512).unwrap();
            for n in 1..=128 {
                assert!((t.get(-n) - t.get(n).conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn split_examples() {
        let nl = params();
        let t = fourier_coefficients(&PeriodicSymbol::gauge(1.3), 32, 128).unwrap();
        let u = Complex64::new(0.4, -0.9);
        let (gg, nn, g0) = resonant_split(&t, &nl, u);
        assert!((gg - 1.3 * u.norm().powf(nl.p_c) * u).norm() < 1e-12);
        assert!(nn.norm() < 1e-12 && g0.norm() < 1e-12);
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(resonant_split(&t, &nl, z), (z, z, z));

        let g = PeriodicSymbol::re_power(P_C);
        let t = fourier_coefficients(&g, 2048, 8192).unwrap();
        for k in 0..16 {
            let th = -3.0 + 0.4 * k as f64;
            let u = Complex64::from_polar(1.0, th);
            let (a, b, c) = resonant_split(&t, &nl, u);
            assert!((a + b + c - g.eval(th)).norm() < 1e-9);
        }
    }

    #[test]
    fn periodic_symbols() {
        for g in [PeriodicSymbol::re_power(P_C), PeriodicSymbol::two_term(P_C), PeriodicSymbol::gauge(2.0)] {
            assert!(g.periodicity_defect(257) < 1e-12, "{}", g.label());
        }
    }

    proptest! {
        #[test]
        fn homogeneity(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let nl = params();
            let z = Complex64::new(re, im);
            for g in [PeriodicSymbol::re_power(P_C), PeriodicSymbol::two_term(P_C), PeriodicSymbol::gauge(0.5)] {
                let lhs = evaluate_f(&g, &nl, 1.7 * z);
                let rhs = 1.7f64.powf(1.0 + nl.p_c) * evaluate_f(&g, &nl, z);
                prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
            }
        }

        // F only sees g through a 2π-periodic argument, so shifting the branch changes nothing.
        #[test]
        fn branch_choice_immaterial(th in -PI..PI, r in 0.1f64..2.0) {
            let nl = params();
            let g = PeriodicSymbol::two_term(P_C);
            let z = Complex64::from_polar(r, th);
            let direct = evaluate_f(&g, &nl, z);
            let shifted = g.eval(th + 2.0 * PI) * r.powf(1.0 + nl.p_c);
            prop_assert!((direct - shifted).norm() < 1e-12);
        }
    }
}
