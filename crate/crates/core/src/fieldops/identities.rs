//! The chirp–dilate–transform–chirp factorization of the linear propagator,
//! the lens identity and the factorization of U(ζ₁/ζ₂)e^{i(n−1)ζ₂ζ₂′|x|²/2}.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gaussian::{apply_ops, ComplexGaussian, Op};
use super::grid::{chirp_mul_refined, ComplexField, SpectralGrid};
use crate::error::{Error, Result};
use crate::potential::FundamentalPair;

/// i^{d/2} on the principal branch.
fn i_pow_half_d(d: usize) -> Complex64 {
    Complex64::new(0.0, 1.0).powf(d as f64 / 2.0)
}

/// U₀(t,0) = M(ζ₂/ζ₂′) D(ζ₂) F M(ζ₂/ζ₁), listed in application order.
pub fn mdfm_ops(pair: &FundamentalPair, t: f64) -> Result<Vec<Op>> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("propagator time must be > 0, got {t}")));
    }
    let s = pair.state_at(t)?;
    if s.zeta1 == 0.0 || s.zeta2p == 0.0 || !(s.zeta2 > 0.0) {
        return Err(Error::Precondition(format!(
            "factorization needs ζ₁ ≠ 0, ζ₂′ ≠ 0, ζ₂ > 0 at t = {t}: ({}, {}, {})",
            s.zeta1, s.zeta2p, s.zeta2
        )));
    }
    Ok(vec![Op::M(s.zeta2 / s.zeta1), Op::F, Op::D(s.zeta2), Op::M(s.zeta2 / s.zeta2p)])
}

/// Applies U₀(t,0) on a grid. Both chirps refine the grid spectrally when the
/// current spacing cannot carry them; on the dual grid the two chirps of the
/// free case at t = 1 cannot both satisfy the criterion otherwise.
pub fn mdfm_apply(pair: &FundamentalPair, t: f64, f: &ComplexField) -> Result<ComplexField> {
    let ops = mdfm_ops(pair, t)?;
    ops.iter().try_fold(f.clone(), |acc, op| match *op {
        Op::M(tau) => chirp_mul_refined(&acc, tau),
        other => other.apply_field(&acc),
    })
}

/// Which phase to use on the right of the lens identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LensPhase {
    /// b|x|²/(1+4ab), from completing the square.
    Corrected,
    /// 4ab|x|²/(1+4ab), as printed.
    Displayed,
}

/// Both sides of e^{iaΔ}e^{ib|x|²}φ = i^{d/2}e^{iθ|x|²}e^{ia(1+4ab)Δ}D(1+4ab)φ.
pub fn lens_ops(a: f64, b: f64, d: usize, phase: LensPhase) -> Result<(Vec<Op>, Vec<Op>)> {
    let c = 1.0 + 4.0 * a * b;
    if c.abs() < 1e-14 {
        return Err(Error::Precondition(format!("4ab = −1 is excluded (a = {a}, b = {b})")));
    }
    let theta = match phase {
        LensPhase::Corrected => b / c,
        LensPhase::Displayed => 4.0 * a * b / c,
    };
    let lhs = vec![Op::E(2.0 * b), Op::U(2.0 * a)];
    let rhs = vec![Op::D(c), Op::U(2.0 * a * c), Op::E(2.0 * theta), Op::Scale(i_pow_half_d(d))];
    Ok((lhs, rhs))
}

/// Relative L² residuals (displayed reading, corrected reading) on `grid`.
pub fn lens_identity_residual(a: f64, b: f64, g: &ComplexGaussian, grid: &SpectralGrid) -> Result<(f64, f64)> {
    if 1.0 + 4.0 * a * b <= 0.0 {
        return Err(Error::Precondition(format!("grid dilation needs 1 + 4ab > 0, got {}", 1.0 + 4.0 * a * b)));
    }
    let f = g.to_field(grid)?;
    let (lhs_ops, rhs_corr) = lens_ops(a, b, grid.d, LensPhase::Corrected)?;
    let (_, rhs_disp) = lens_ops(a, b, grid.d, LensPhase::Displayed)?;
    let lhs = apply_ops(&lhs_ops, &f)?;
    let displayed = lhs.relative_distance(&apply_ops(&rhs_disp, &f)?)?;
    let corrected = lhs.relative_distance(&apply_ops(&rhs_corr, &f)?)?;
    Ok((displayed, corrected))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ABCCoefficients {
    pub a_n: f64,
    pub b_n: f64,
    pub c_n: f64,
    pub n: i64,
    pub s: f64,
}

/// C_n = 1+(n−1)ζ₁ζ₂′, A_n = (n−1)ζ₂ζ₂′/(2C_n), B_n = ζ₁C_n/(2ζ₂) at time s.
pub fn abc_coefficients(pair: &FundamentalPair, n: i64, s: f64) -> Result<ABCCoefficients> {
    if !(s > pair.spec.r0) {
        return Err(Error::Domain(format!("s = {s} must exceed r0 = {}", pair.spec.r0)));
    }
    let st = pair.state_at(s)?;
    if st.zeta2 == 0.0 {
        return Err(Error::Precondition(format!("ζ₂({s}) = 0")));
    }
    let m = (n - 1) as f64;
    let c = 1.0 + m * st.zeta1 * st.zeta2p;
    if c.abs() < 1e-12 {
        return Err(Error::Precondition(format!("C_{n}({s}) = 1 + (n−1)ζ₁ζ₂′ vanishes")));
    }
    Ok(ABCCoefficients {
        a_n: m * st.zeta2 * st.zeta2p / (2.0 * c),
        b_n: st.zeta1 * c / (2.0 * st.zeta2),
        c_n: c,
        n,
        s,
    })
}

/// Both sides of U(ζ₁/ζ₂)e^{i(n−1)ζ₂ζ₂′|x|²/2} = i^{d/2}e^{iA_n|x|²}e^{iB_nΔ}D(C_n).
pub fn factorization_ops(pair: &FundamentalPair, n: i64, s: f64, d: usize) -> Result<(Vec<Op>, Vec<Op>)> {
    let abc = abc_coefficients(pair, n, s)?;
    let st = pair.state_at(s)?;
    let lhs = vec![Op::E((n - 1) as f64 * st.zeta2 * st.zeta2p), Op::U(st.zeta1 / st.zeta2)];
    let rhs = vec![Op::D(abc.c_n), Op::U(2.0 * abc.b_n), Op::E(2.0 * abc.a_n), Op::Scale(i_pow_half_d(d))];
    Ok((lhs, rhs))
}

/// Relative L² difference of the two sides applied to `g` on `grid`.
pub fn factorization_residual(
    pair: &FundamentalPair,
    n: i64,
    s: f64,
    g: &ComplexGaussian,
    grid: &SpectralGrid,
) -> Result<f64> {
    let abc = abc_coefficients(pair, n, s)?;
    if !(abc.c_n > 0.0) {
        return Err(Error::Precondition(format!("grid dilation needs C_{n}({s}) > 0, got {}", abc.c_n)));
    }
    let (lhs_ops, rhs_ops) = factorization_ops(pair, n, s, grid.d)?;
    let f = g.to_field(grid)?;
    let lhs = apply_ops(&lhs_ops, &f)?;
    lhs.relative_distance(&apply_ops(&rhs_ops, &f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldops::gaussian::gaussian_propagate;
    use crate::fieldops::grid::free_propagate;
    use crate::harness::fit::fit_line;
    use crate::potential::{eval_sigma, integrate_fundamental, PotentialSpec};

    fn zero_pair() -> FundamentalPair {
        integrate_fundamental(&PotentialSpec::zero(0.5).unwrap(), 100.0, 0.01).unwrap()
    }

    fn inverse_square_pair() -> FundamentalPair {
        integrate_fundamental(&PotentialSpec::inverse_square(0.09, 1.0).unwrap(), 2e4, 0.01).unwrap()
    }

    /// Smallest power-of-two n whose grid of length L admits e^{is|x|²/2}.
    fn n_for_chirp(length: f64, s: f64) -> usize {
        ((s.abs() * length * length / (1.6 * std::f64::consts::PI)).ceil() as usize).max(64).next_power_of_two()
    }

    fn packet(a: f64) -> ComplexGaussian {
        ComplexGaussian::new(1, Complex64::new(1.0, 0.0), &[0.4], &[0.3], Complex64::new(a, 0.0)).unwrap()
    }

    #[test]
    fn mdfm_free_case_is_free_propagator() {
        let grid = SpectralGrid::self_dual(1, 256).unwrap();
        let f = packet(1.0).to_field(&grid).unwrap();
        let via = mdfm_apply(&zero_pair(), 1.0, &f).unwrap();
        let free = free_propagate(&f, 1.0);
        assert!(free.relative_distance(&via).unwrap() < 1e-8);
        assert!((via.norm_l2() - f.norm_l2()).abs() < 1e-10);
    }

    /// For u = exp(−a x²/2 + βx + γ) the equation iuₜ = −½uₓₓ + σx²u/2 reduces to
    /// ȧ = i(σ − a²), β̇ = −iaβ, γ̇ = i(β² − a)/2. σ jumps at r₀, so [0, r₀] and
    /// [r₀, t] are integrated separately.
    fn riccati(spec: &PotentialSpec, g: &ComplexGaussian, t: f64, steps: usize) -> ComplexGaussian {
        let i = Complex64::new(0.0, 1.0);
        let r0 = spec.r0;
        let below = eval_sigma(spec, 0.0).unwrap();
        let mut y = [g.a, g.beta[0], g.gamma];
        for (lo, hi) in [(0.0, r0), (r0, t)] {
            let sigma = |s: f64| if hi <= r0 { below } else { eval_sigma(spec, s.max(r0)).unwrap() };
            let rhs = |s: f64, y: [Complex64; 3]| {
                [i * (sigma(s) - y[0] * y[0]), -i * y[0] * y[1], i * (y[1] * y[1] - y[0]) / 2.0]
            };
            let n = ((hi - lo) / t * steps as f64).ceil() as usize;
            let h = (hi - lo) / n as f64;
            for k in 0..n {
                let t0 = lo + k as f64 * h;
                let k1 = rhs(t0, y);
                let k2 = rhs(t0 + h / 2.0, std::array::from_fn(|j| y[j] + k1[j] * (h / 2.0)));
                let k3 = rhs(t0 + h / 2.0, std::array::from_fn(|j| y[j] + k2[j] * (h / 2.0)));
                let k4 = rhs(t0 + h, std::array::from_fn(|j| y[j] + k3[j] * h));
                y = std::array::from_fn(|j| y[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0));
            }
        }
        ComplexGaussian { d: 1, a: y[0], beta: [y[1], Complex64::new(0.0, 0.0)], gamma: y[2] }
    }

    #[test]
    fn mdfm_matches_independent_gaussian_evolution() {
        let pair = inverse_square_pair();
        let g = packet(1.0);
        let via = gaussian_propagate(&mdfm_ops(&pair, 50.0).unwrap(), &g).unwrap();
        let ode = riccati(&pair.spec, &g, 50.0, 100_000);
        assert!(via.approx_eq(&ode, 1e-8), "{via:?}\n{ode:?}");
    }

    #[test]
    fn mdfm_grid_matches_oracle_at_late_time() {
        let pair = inverse_square_pair();
        let st = pair.state_at(50.0).unwrap();
        let g = packet(1.0);
        // Final chirp lives on the dual grid dilated by ζ₂ (padded by P ≥ ζ₂).
        let length = 40.0;
        let p = (st.zeta2.ceil() as usize).next_power_of_two() as f64;
        let dual_len = |n: usize| 2.0 * std::f64::consts::PI * n as f64 / length;
        let mut n = 256;
        while (st.zeta2 * dual_len(n)).powi(2) * st.zeta2p / st.zeta2 > 1.6 * std::f64::consts::PI * p * n as f64 {
            n *= 2;
        }
        let grid = SpectralGrid::new(1, n, length).unwrap();
        let field = mdfm_apply(&pair, 50.0, &g.to_field(&grid).unwrap()).unwrap();
        let want = gaussian_propagate(&mdfm_ops(&pair, 50.0).unwrap(), &g).unwrap().to_field(&field.grid).unwrap();
        let err = want.relative_distance(&field).unwrap();
        assert!(err < 1e-8, "n = {n}: {err:e}");
        assert!((field.norm_l2() - g.norm_l2()).abs() < 1e-10);
    }

    #[test]
    fn lens_examples() {
        let grid = SpectralGrid::new(1, 256, 30.0).unwrap();
        let g = ComplexGaussian::unit(1);
        let (p, c) = lens_identity_residual(0.3, 0.0, &g, &grid).unwrap();
        assert!(p < 1e-10 && c < 1e-10, "{p:e} {c:e}");
        let (p, c) = lens_identity_residual(0.0, 0.2, &g, &grid).unwrap();
        assert!(c < 1e-10, "{c:e}");
        assert!(p > 1e-3, "{p:e}");
        let (p, c) = lens_identity_residual(0.3, 0.2, &g, &grid).unwrap();
        assert!(c < 1e-8, "{c:e}");
        assert!(p > 1e-3, "{p:e}");
        assert!(matches!(lens_identity_residual(0.5, -0.5, &g, &grid), Err(Error::Precondition(_))));
        assert!(matches!(lens_ops(0.5, -0.5, 1, LensPhase::Corrected), Err(Error::Precondition(_))));
    }

    #[test]
    fn lens_oracle() {
        for d in [1, 2] {
            let g = ComplexGaussian::unit(d);
            let (lhs, rhs) = lens_ops(0.3, 0.2, d, LensPhase::Corrected).unwrap();
            let l = gaussian_propagate(&lhs, &g).unwrap();
            let r = gaussian_propagate(&rhs, &g).unwrap();
            assert!(l.approx_eq(&r, 1e-13), "{l:?} {r:?}");
            let (_, rhs) = lens_ops(0.3, 0.2, d, LensPhase::Displayed).unwrap();
            assert!(!l.approx_eq(&gaussian_propagate(&rhs, &g).unwrap(), 1e-3));
        }
    }

    #[test]
    fn lens_residual_shrinks_with_refinement() {
        let g = packet(4.0);
        let res: Vec<f64> =
            [64, 128, 256].iter().map(|&n| lens_identity_residual(0.3, 0.2, &g, &SpectralGrid::new(1, n, 24.0).unwrap()).unwrap().1).collect();
        assert!(res[1] < res[0] || res[1] < 1e-12, "{res:?}");
        assert!(res[2] < 1e-10, "{res:?}");
    }

    #[test]
    fn abc_examples() {
        let pair = zero_pair();
        let one = abc_coefficients(&pair, 1, 10.0).unwrap();
        assert_eq!((one.a_n, one.c_n), (0.0, 1.0));
        assert!((one.b_n - 1.0 / 20.0).abs() < 1e-14);
        for n in [-2i64, 2, 3, 7] {
            let s = 10.0;
            let c = abc_coefficients(&pair, n, s).unwrap();
            let nf = n as f64;
            assert!((c.c_n - nf).abs() < 1e-12);
            assert!((c.a_n - (nf - 1.0) * s / (2.0 * nf)).abs() < 1e-12);
            assert!((c.b_n - nf / (2.0 * s)).abs() < 1e-12);
        }
        assert!(matches!(abc_coefficients(&pair, 0, 10.0), Err(Error::Precondition(_))));
        assert!(abc_coefficients(&pair, 2, 0.1).is_err());
    }

    // A_n′ ~ s^{−2λ} and B_n′ ~ n s^{2λ−2}, by central differences over a decade.
    #[test]
    fn abc_derivative_scaling() {
        let pair = inverse_square_pair();
        let lambda = 0.1;
        for n in [2i64, 3, 5] {
            let (mut ls, mut la, mut lb) = (vec![], vec![], vec![]);
            for k in 0..=20 {
                let s = 1e3 * 10f64.powf(k as f64 / 20.0);
                let h = 1e-3 * s;
                let lo = abc_coefficients(&pair, n, s - h).unwrap();
                let hi = abc_coefficients(&pair, n, s + h).unwrap();
                ls.push(s.ln());
                la.push(((hi.a_n - lo.a_n) / (2.0 * h)).abs().ln());
                lb.push(((hi.b_n - lo.b_n) / (2.0 * h)).abs().ln());
            }
            let sa = fit_line(&ls, &la).unwrap().slope;
            let sb = fit_line(&ls, &lb).unwrap().slope;
            assert!((sa + 2.0 * lambda).abs() < 0.05, "n={n}: A′ slope {sa}");
            assert!((sb - (2.0 * lambda - 2.0)).abs() < 0.05, "n={n}: B′ slope {sb}");
        }
    }

    #[test]
    fn factorization_examples() {
        let g = packet(4.0);
        let grid = SpectralGrid::new(1, 256, 20.0).unwrap();
        let r = factorization_residual(&zero_pair(), 1, 10.0, &g, &grid).unwrap();
        assert!(r < 1e-12, "{r:e}");

        // e^{i(n−1)ζ₂ζ₂′|x|²/2} is the fastest chirp on the left.
        let pair = zero_pair();
        let st = pair.state_at(10.0).unwrap();
        let length = 28.0;
        let grid = SpectralGrid::new(1, n_for_chirp(length, 2.0 * st.zeta2 * st.zeta2p), length).unwrap();
        let r = factorization_residual(&pair, 3, 10.0, &g, &grid).unwrap();
        assert!(r < 1e-8, "{r:e}");

        let pair = inverse_square_pair();
        let st = pair.state_at(50.0).unwrap();
        let grid = SpectralGrid::new(1, n_for_chirp(length, st.zeta2 * st.zeta2p), length).unwrap();
        let r = factorization_residual(&pair, 2, 50.0, &g, &grid).unwrap();
        assert!(r < 1e-7, "{r:e}");
    }

    #[test]
    fn factorization_oracle() {
        let pair = inverse_square_pair();
        for n in [2i64, 3, 6] {
            let (lhs, rhs) = factorization_ops(&pair, n, 50.0, 1).unwrap();
            let g = packet(1.0);
            let l = gaussian_propagate(&lhs, &g).unwrap();
            let r = gaussian_propagate(&rhs, &g).unwrap();
            assert!(l.approx_eq(&r, 1e-10), "n={n}: {l:?} {r:?}");
        }
    }
}
