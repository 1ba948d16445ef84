//! The log-corrected final-state profile and the remainder operator R(t).

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldops::{
    chirp_mul, chirp_mul_refined, dilate, dilate_to, dilation_factor, unitary_fft, ComplexField, ComplexGaussian,
    Direction, SpectralGrid,
};
use crate::potential::FundamentalPair;

/// Default smallness threshold ε₀ for ‖û₊‖_∞.
pub const DEFAULT_EPS0: f64 = 0.5;
/// Default frequency-side center of the Gaussian datum.
pub const DEFAULT_FREQUENCY_CENTER: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FinalRepr {
    Gaussian { gaussian: ComplexGaussian },
    Sampled { field: ComplexField },
}

/// Whether û₊ is known to lie in the weighted spaces required of final data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Certified,
    Unchecked,
}

/// The frequency-side final datum û₊.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalData {
    pub repr: FinalRepr,
    /// ‖û₊‖_∞.
    pub amplitude_sup: f64,
}

impl FinalData {
    pub fn gaussian(g: ComplexGaussian) -> Self {
        Self { amplitude_sup: g.sup_norm(), repr: FinalRepr::Gaussian { gaussian: g } }
    }

    pub fn sampled(field: ComplexField) -> Self {
        Self { amplitude_sup: field.sup_norm(), repr: FinalRepr::Sampled { field } }
    }

    /// A real Gaussian bump of height `sup`, unit width, centered at
    /// ξ = (0.25, …) so it stays away from the origin.
    pub fn default_gaussian(d: usize, sup: f64) -> Result<Self> {
        let c = vec![DEFAULT_FREQUENCY_CENTER; d];
        let g = ComplexGaussian::new(d, Complex64::new(sup, 0.0), &c, &vec![0.0; d], Complex64::new(1.0, 0.0))?;
        Ok(Self::gaussian(g))
    }

    /// The zero datum (sampled, on `grid`).
    pub fn zero(grid: SpectralGrid) -> Self {
        Self::sampled(ComplexField::zeros(grid))
    }

    pub fn d(&self) -> usize {
        match &self.repr {
            FinalRepr::Gaussian { gaussian } => gaussian.d,
            FinalRepr::Sampled { field } => field.grid.d,
        }
    }

    pub fn membership(&self) -> Membership {
        match self.repr {
            FinalRepr::Gaussian { .. } => Membership::Certified,
            FinalRepr::Sampled { .. } => Membership::Unchecked,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude_sup == 0.0
    }

    /// Fails unless ‖û₊‖_∞ < ε₀.
    pub fn check_smallness(&self, eps0: f64) -> Result<()> {
        if self.amplitude_sup < eps0 {
            Ok(())
        } else {
            Err(Error::Precondition(format!("‖û₊‖_∞ = {} is not below ε₀ = {eps0}", self.amplitude_sup)))
        }
    }

    pub fn norm_l2(&self) -> f64 {
        match &self.repr {
            FinalRepr::Gaussian { gaussian } => gaussian.norm_l2(),
            FinalRepr::Sampled { field } => field.norm_l2(),
        }
    }

    /// û₊ on `grid` (the Gaussian is sampled, sampled data is resampled).
    pub fn on_grid(&self, grid: &SpectralGrid) -> Result<ComplexField> {
        match &self.repr {
            FinalRepr::Gaussian { gaussian } => gaussian.to_field(grid),
            FinalRepr::Sampled { field } => crate::fieldops::resample(field, grid),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub g1: f64,
    pub c_plus: f64,
    pub p_c: f64,
}

impl ProfileParams {
    pub fn new(g1: f64, c_plus: f64, p_c: f64) -> Result<Self> {
        if !(c_plus > 0.0 && c_plus.is_finite()) {
            return Err(Error::Domain(format!("c₊ must be > 0, got {c_plus}")));
        }
        if !(p_c > 0.0) {
            return Err(Error::Domain(format!("p_c must be > 0, got {p_c}")));
        }
        Ok(Self { g1, c_plus, p_c })
    }

    /// The same parameters with the logarithmic phase switched off.
    pub fn without_log(&self) -> Self {
        Self { g1: 0.0, ..*self }
    }

    /// e^{−i g₁|v|^{p_c} log t / c₊}·v.
    pub fn rotate(&self, v: Complex64, t: f64) -> Complex64 {
        if self.g1 == 0.0 || v == Complex64::new(0.0, 0.0) {
            return v;
        }
        v * Complex64::from_polar(1.0, -self.g1 * v.norm().powf(self.p_c) * t.ln() / self.c_plus)
    }
}

/// ŵ(t) = û₊ exp(−i g₁|û₊|^{p_c} log t / c₊) on `grid`.
pub fn w_hat(data: &FinalData, pp: &ProfileParams, t: f64, grid: &SpectralGrid) -> Result<ComplexField> {
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("ŵ(t) needs t ≥ 1, got {t}")));
    }
    let mut f = data.on_grid(grid)?;
    f.values.iter_mut().for_each(|v| *v = pp.rotate(*v, t));
    Ok(f)
}

fn check_profile_time(pair: &FundamentalPair, t: f64) -> Result<crate::potential::ZetaState> {
    if !(t > pair.spec.r0) {
        return Err(Error::Domain(format!("t = {t} must exceed r0 = {}", pair.spec.r0)));
    }
    let st = pair.state_at(t)?;
    if !(st.zeta2 > 0.0) || st.zeta2p == 0.0 {
        return Err(Error::Precondition(format!("profile needs ζ₂ > 0 and ζ₂′ ≠ 0 at t = {t}")));
    }
    Ok(st)
}

/// u_p(t) = M(ζ₂/ζ₂′)D(ζ₂)ŵ(t), i.e.
/// (iζ₂)^{−d/2} e^{i|x|²ζ₂′/(2ζ₂)} ŵ(t, x/ζ₂), on `grid`.
pub fn u_p_field(
    pair: &FundamentalPair,
    data: &FinalData,
    pp: &ProfileParams,
    t: f64,
    grid: &SpectralGrid,
) -> Result<ComplexField> {
    let st = check_profile_time(pair, t)?;
    grid.check_chirp(st.zeta2 / st.zeta2p)?;
    let z = st.zeta2;
    let mut out = match &data.repr {
        FinalRepr::Gaussian { gaussian } => {
            let c = dilation_factor(z, grid.d);
            ComplexField::from_fn(*grid, |x| {
                let mut buf = [0.0; 2];
                for (b, xi) in buf.iter_mut().zip(x) {
                    *b = xi / z;
                }
                c * pp.rotate(gaussian.eval(&buf[..x.len()]), t)
            })
        }
        FinalRepr::Sampled { field } => dilate_to(&w_hat(data, pp, t, &field.grid)?, z, grid)?,
    };
    let rate = st.zeta2p / st.zeta2;
    for (i, v) in out.values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, 0.5 * rate * grid.radius_sq(i));
    }
    Ok(out)
}

/// u_p(t) built by applying D(ζ₂) and M(ζ₂/ζ₂′) to ŵ(t) on `w_grid`; the
/// result lives on the dilated (and possibly refined) grid.
pub fn u_p_operator_form(
    pair: &FundamentalPair,
    data: &FinalData,
    pp: &ProfileParams,
    t: f64,
    w_grid: &SpectralGrid,
) -> Result<ComplexField> {
    let st = check_profile_time(pair, t)?;
    let w = w_hat(data, pp, t, w_grid)?;
    chirp_mul_refined(&dilate(&w, st.zeta2)?, st.zeta2 / st.zeta2p)
}

/// (F M₂ F⁻¹ − 1)f with M₂ = M(ζ₂/ζ₁). Since M₁ and D(ζ₂) are isometries,
/// its norm equals ‖R(t)f‖₂.
pub fn remainder_core(pair: &FundamentalPair, t: f64, f: &ComplexField) -> Result<ComplexField> {
    let st = check_profile_time(pair, t)?;
    if st.zeta1 == 0.0 {
        return Err(Error::Precondition(format!("ζ₁({t}) = 0")));
    }
    let x_side = unitary_fft(f, Direction::Inverse);
    let chirped = chirp_mul(&x_side, st.zeta2 / st.zeta1)?;
    let mut back = unitary_fft(&chirped, Direction::Forward);
    for (b, v) in back.values.iter_mut().zip(&f.values) {
        *b -= v;
    }
    Ok(back)
}

/// R(t)f = M₁D(ζ₂)(F M₂ F⁻¹ − 1)f.
pub fn remainder_r_apply(pair: &FundamentalPair, t: f64, f: &ComplexField) -> Result<ComplexField> {
    let st = check_profile_time(pair, t)?;
    let core = remainder_core(pair, t, f)?;
    chirp_mul_refined(&dilate(&core, st.zeta2)?, st.zeta2 / st.zeta2p)
}

/// ‖R(t)f‖₂.
pub fn remainder_norm(pair: &FundamentalPair, t: f64, f: &ComplexField) -> Result<f64> {
    Ok(remainder_core(pair, t, f)?.norm_l2())
}

/// Writes a 1-d field as `x,re,im,abs` (2-d: `x,y,re,im,abs`).
pub fn write_profile_csv(field: &ComplexField, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if field.grid.d == 1 {
        w.write_record(["x", "re", "im", "abs"])?;
    } else {
        w.write_record(["x", "y", "re", "im", "abs"])?;
    }
    for (i, v) in field.values.iter().enumerate() {
        let p = field.grid.point(i);
        let mut rec: Vec<String> = p[..field.grid.d].iter().map(|c| format!("{c:.17e}")).collect();
        rec.extend([format!("{:.17e}", v.re), format!("{:.17e}", v.im), format!("{:.17e}", v.norm())]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `field` as pretty JSON (grid plus values).
pub fn write_field_json(field: &ComplexField, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer(&mut f, field)?;
    f.flush()?;
    Ok(())
}
