//! Admissibility windows for (λ, δ, δ′, b, ε₁, q, r).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the admissible-pair identity.
pub const PAIR_TOLERANCE: f64 = 1e-12;

/// Shrink applied to open intervals when a concrete interior value is picked.
pub const INTERIOR_SHRINK: f64 = 1e-9;

const EPS1_CAP: f64 = 0.25;

fn check_d(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension d must be 1, 2 or 3, got {d}")))
    }
}

/// Upper bound on the decay exponent λ for dimension d.
pub fn lambda_max(d: usize) -> Result<f64> {
    check_d(d)?;
    Ok(match d {
        1 => 4.0 - 15f64.sqrt(),
        2 => 0.2,
        _ => (13.0 - 2.0 * 37f64.sqrt()) / 21.0,
    })
}

/// Critical power p_c = 2/(d(1−λ)).
pub fn critical_exponent(d: usize, lambda: f64) -> f64 {
    2.0 / (d as f64 * (1.0 - lambda))
}

/// Weight exponent a_d(λ) of the coefficient summability condition.
pub fn a_d(d: usize, lambda: f64) -> Result<f64> {
    check_d(d)?;
    if !(0.0..0.5).contains(&lambda) {
        return Err(Error::Domain(format!("λ must lie in [0, 1/2), got {lambda}")));
    }
    Ok(if d == 1 {
        (6.0 * lambda - lambda * lambda) / (4.0 * (1.0 - 2.0 * lambda))
    } else {
        3.0 * d as f64 * lambda / (4.0 * (1.0 - 2.0 * lambda))
    })
}

/// Open δ window for (d, λ, η).
pub fn delta_window(d: usize, lambda: f64, eta: f64) -> Result<(f64, f64)> {
    let a = a_d(d, lambda)?;
    let df = d as f64;
    Ok(if d == 1 {
        (
            (1.0 + 4.0 * lambda - lambda * lambda) / (2.0 * (1.0 - 2.0 * lambda)),
            1f64.min(0.5 + 2.0 * a + 2.0 * eta),
        )
    } else {
        let p_c = critical_exponent(d, lambda);
        (
            df * (lambda + 1.0) / (2.0 * (1.0 - 2.0 * lambda)),
            2f64.min(1.0 + p_c).min(df / 2.0 + 2.0 * a + 2.0 * eta),
        )
    })
}

/// Lower end of b required by the contraction argument. ε₁ is ignored for d = 1.
pub fn b_prop_lower(d: usize, lambda: f64, eps1: f64) -> f64 {
    if d == 1 {
        (1.0 + 8.0 * lambda - lambda * lambda) / 4.0
    } else {
        let df = d as f64;
        df * (lambda + 1.0) / 4.0 + lambda + df * (1.0 - lambda) * lambda * eps1 / 2.0
    }
}

/// Upper end of every b window, λ + δ(1−2λ)/2.
pub fn b_upper(lambda: f64, delta: f64) -> f64 {
    lambda + delta * (1.0 - 2.0 * lambda) / 2.0
}

/// First ε₁ constraint: d(λ+1)/4 + d(1−λ)λε₁/2 < δ(1−2λ)/2.
pub fn eps1_first(d: usize, lambda: f64, delta: f64, eps1: f64) -> bool {
    let df = d as f64;
    df * (lambda + 1.0) / 4.0 + df * (1.0 - lambda) * lambda * eps1 / 2.0 < delta * (1.0 - 2.0 * lambda) / 2.0
}

/// Second ε₁ constraint: λ+1+2(1−λ)λε₁ > 2(1−λ)/(d+(1−2d)λ−d(1−λ)ε₁).
pub fn eps1_second(d: usize, lambda: f64, eps1: f64) -> bool {
    let df = d as f64;
    let den = df + (1.0 - 2.0 * df) * lambda - df * (1.0 - lambda) * eps1;
    den > 0.0 && lambda + 1.0 + 2.0 * (1.0 - lambda) * lambda * eps1 > 2.0 * (1.0 - lambda) / den
}

/// Largest ε in (0, cap] with `pred` true on (0, ε], assuming a single switch.
fn feasible_upper(pred: impl Fn(f64) -> bool, cap: f64) -> Option<f64> {
    let tiny = 1e-14;
    if !pred(tiny) {
        return None;
    }
    if pred(cap) {
        return Some(cap);
    }
    let (mut lo, mut hi) = (tiny, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// The Strichartz-type pair (q_d, r_d); `r` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    #[serde(with = "extended_real")]
    pub q: f64,
    #[serde(with = "extended_real")]
    pub r: f64,
}

/// Serializes ±∞ and NaN as the strings "inf"/"-inf"/"nan" so the value
/// survives JSON.
pub mod extended_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_str("nan")
        } else if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
            },
        }
    }
}

/// (q_d, r_d): (4, ∞) for d = 1, (2/(1−2ε₁), 1/ε₁) for d = 2,
/// (2/(1−2ε₁), 6/(1+4ε₁)) for d = 3.
pub fn strichartz_pair(d: usize, eps1: f64) -> Result<ExponentPair> {
    check_d(d)?;
    Ok(match d {
        1 => ExponentPair { q: 4.0, r: f64::INFINITY },
        2 => ExponentPair { q: 2.0 / (1.0 - 2.0 * eps1), r: 1.0 / eps1 },
        _ => ExponentPair { q: 2.0 / (1.0 - 2.0 * eps1), r: 6.0 / (1.0 + 4.0 * eps1) },
    })
}

/// 1/q + d/(2r) = d/4, q > 2, r ≥ 2 (to 1e−12). Infinite exponents are allowed.
pub fn is_admissible_pair(q: f64, r: f64, d: usize) -> bool {
    if d == 0 || q.is_nan() || r.is_nan() || !(q > 2.0) || !(r >= 2.0) {
        return false;
    }
    let inv = |v: f64| if v.is_infinite() { 0.0 } else { 1.0 / v };
    let df = d as f64;
    (inv(q) + df * inv(r) / 2.0 - df / 4.0).abs() <= PAIR_TOLERANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamWindows {
    pub d: usize,
    pub lambda: f64,
    pub eta: f64,
    pub lambda_max: f64,
    pub a_d: f64,
    pub p_c: f64,
    /// The δ in use: the caller's value or the midpoint of `delta_window`.
    pub delta: f64,
    pub delta_window: (f64, f64),
    pub delta_prime: f64,
    pub b_window_theorem: (f64, f64),
    pub b_window_prop: (f64, f64),
    pub eps1_feasible: bool,
    pub eps1: Option<f64>,
    pub pair: ExponentPair,
}

impl ParamWindows {
    /// Midpoint of the tighter b window.
    pub fn default_b(&self) -> f64 {
        0.5 * (self.b_window_prop.0 + self.b_window_prop.1)
    }

    pub fn b_in_prop_window(&self, b: f64) -> bool {
        b > self.b_window_prop.0 && b < self.b_window_prop.1
    }

    pub fn b_in_theorem_window(&self, b: f64) -> bool {
        b > self.b_window_theorem.0 && b < self.b_window_theorem.1
    }
}

/// Computes every window for (d, λ, η). With `delta = None` the midpoint of the
/// δ window is used. Any empty window or failed bound is an admissibility error.
pub fn parameter_windows(d: usize, lambda: f64, eta: f64, delta: Option<f64>) -> Result<ParamWindows> {
    check_d(d)?;
    if !(lambda >= 0.0) {
        return Err(Error::Admissibility(format!("λ = {lambda} must be ≥ 0")));
    }
    let lmax = lambda_max(d)?;
    if lambda >= lmax {
        return Err(Error::Admissibility(format!(
            "λ = {lambda} violates λ < λ_max = {lmax} for d = {d}"
        )));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Admissibility(format!("η = {eta} must be > 0")));
    }
    let a = a_d(d, lambda)?;
    let p_c = critical_exponent(d, lambda);
    let dw = delta_window(d, lambda, eta)?;
    if !(dw.0 < dw.1) {
        return Err(Error::Admissibility(format!("δ window ({}, {}) is empty", dw.0, dw.1)));
    }
    let delta = match delta {
        Some(v) if v > dw.0 && v < dw.1 => v,
        Some(v) => {
            return Err(Error::Admissibility(format!("δ = {v} outside window ({}, {})", dw.0, dw.1)))
        }
        None => 0.5 * (dw.0 + dw.1),
    };

    let eps1 = if d == 1 {
        None
    } else {
        let e2 = feasible_upper(|e| eps1_first(d, lambda, delta, e), EPS1_CAP);
        let e3 = feasible_upper(|e| eps1_second(d, lambda, e), EPS1_CAP);
        match (e2, e3) {
            (Some(a2), Some(a3)) => Some(0.5 * a2.min(a3)),
            (None, _) => {
                return Err(Error::Admissibility(format!(
                    "no ε₁ ∈ (0, {EPS1_CAP}] satisfies d(λ+1)/4 + d(1−λ)λε₁/2 < δ(1−2λ)/2"
                )))
            }
            (_, None) => {
                return Err(Error::Admissibility(format!(
                    "no ε₁ ∈ (0, {EPS1_CAP}] satisfies λ+1+2(1−λ)λε₁ > 2(1−λ)/(d+(1−2d)λ−d(1−λ)ε₁)"
                )))
            }
        }
    };

    let hi = b_upper(lambda, delta);
    let theorem = (2.0 * lambda, hi);
    let prop = (b_prop_lower(d, lambda, eps1.unwrap_or(0.0)), hi);
    for (name, w) in [("theorem b", theorem), ("b", prop)] {
        if !(w.0 < w.1) {
            return Err(Error::Admissibility(format!("{name} window ({}, {}) is empty", w.0, w.1)));
        }
    }
    let pair = strichartz_pair(d, eps1.unwrap_or(0.0))?;
    if !is_admissible_pair(pair.q, pair.r, d) {
        return Err(Error::Admissibility(format!("pair ({}, {}) is not admissible", pair.q, pair.r)));
    }

    Ok(ParamWindows {
        d,
        lambda,
        eta,
        lambda_max: lmax,
        a_d: a,
        p_c,
        delta,
        delta_window: dw,
        delta_prime: if d == 1 { 1.0 } else { delta },
        b_window_theorem: theorem,
        b_window_prop: prop,
        eps1_feasible: eps1.is_some() || d == 1,
        eps1,
        pair,
    })
}

/// A value strictly inside (lo, hi), pulled in by `INTERIOR_SHRINK`.
pub fn interior(window: (f64, f64), frac: f64) -> f64 {
    let (lo, hi) = (window.0 + INTERIOR_SHRINK, window.1 - INTERIOR_SHRINK);
    lo + frac.clamp(0.0, 1.0) * (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_example() {
        let w = parameter_windows(1, 0.1, 0.1, Some(0.95)).unwrap();
        assert!((w.lambda_max - (4.0 - 15f64.sqrt())).abs() < 1e-15);
        assert!((w.delta_window.0 - 0.86875).abs() < 1e-12);
        assert_eq!(w.delta_window.1, 1.0);
        assert!((w.b_window_prop.0 - 0.4475).abs() < 1e-12);
        assert!((w.b_window_prop.1 - 0.48).abs() < 1e-12);
        assert!((w.a_d - 0.184375).abs() < 1e-15);
        assert_eq!(w.delta_prime, 1.0);
        assert_eq!(w.pair, ExponentPair { q: 4.0, r: f64::INFINITY });
    }

    #[test]
    fn lambda_zero() {
        let w = parameter_windows(1, 0.0, 0.3, Some(0.8)).unwrap();
        assert_eq!(w.p_c, 2.0);
        assert_eq!(w.delta_window, (0.5, 1.0));
        assert_eq!(w.b_window_theorem, (0.0, 0.4));
        assert_eq!(w.b_window_prop.0, 0.25);
    }

    #[test]
    fn rejects_large_lambda() {
        let e = parameter_windows(2, 0.25, 0.1, None).unwrap_err();
        assert!(matches!(e, Error::Admissibility(ref m) if m.contains("λ_max")), "{e}");
        assert!(parameter_windows(1, 0.1, 0.1, Some(0.5)).is_err());
    }

    #[test]
    fn lambda_max_values() {
        assert!((lambda_max(3).unwrap() - 0.0396).abs() < 1e-3);
        assert!(lambda_max(4).is_err());
    }

    #[test]
    fn admissible_pairs() {
        assert!(is_admissible_pair(4.0, f64::INFINITY, 1));
        let e = 0.05;
        assert!(is_admissible_pair(2.0 / (1.0 - 2.0 * e), 1.0 / e, 2));
        assert!(is_admissible_pair(2.0 / (1.0 - 2.0 * e), 6.0 / (1.0 + 4.0 * e), 3));
        assert!(!is_admissible_pair(2.0, 2.0, 1));
        assert!(!is_admissible_pair(4.0, 4.0, 1));
    }

    #[test]
    fn pair_survives_json() {
        let p = ExponentPair { q: 4.0, r: f64::INFINITY };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<ExponentPair>(&s).unwrap(), p);
    }

    #[test]
    fn two_dimensional_witness() {
        let w = parameter_windows(2, 0.1, 0.1, None).unwrap();
        let e = w.eps1.unwrap();
        assert!(eps1_first(2, 0.1, w.delta, e) && eps1_second(2, 0.1, e));
        assert!(is_admissible_pair(w.pair.q, w.pair.r, 2));
        let w3 = parameter_windows(3, 0.02, 0.1, None).unwrap();
        assert!(eps1_second(3, 0.02, w3.eps1.unwrap()));
        // λ = 0 in d = 2 leaves no room for ε₁.
        assert!(parameter_windows(2, 0.0, 0.1, None).is_err());
    }

    proptest! {
        #[test]
        fn a_d_increasing(d in 1usize..=3, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let lm = lambda_max(d).unwrap();
            let (l1, l2) = (u.min(v) * lm, u.max(v) * lm);
            prop_assume!(l2 - l1 > 1e-9);
            prop_assert!(a_d(d, l2).unwrap() > a_d(d, l1).unwrap());
        }

        #[test]
        fn prop_lower_dominates_theorem_lower(d in 1usize..=3, u in 0.01f64..0.99, f in 0.01f64..0.99) {
            let lambda = u * lambda_max(d).unwrap();
            let dw = delta_window(d, lambda, 0.2).unwrap();
            prop_assume!(dw.0 < dw.1);
            let delta = interior(dw, f);
            if let Ok(w) = parameter_windows(d, lambda, 0.2, Some(delta)) {
                prop_assert!(w.b_window_prop.0 >= w.b_window_theorem.0);
            }
        }

        #[test]
        fn eps1_witness_satisfies_constraints(d in 2usize..=3, u in 0.01f64..0.99, f in 0.01f64..0.99) {
            let lambda = u * lambda_max(d).unwrap();
            let dw = delta_window(d, lambda, 0.2).unwrap();
            prop_assume!(dw.0 < dw.1);
            let delta = interior(dw, f);
            if let Ok(w) = parameter_windows(d, lambda, 0.2, Some(delta)) {
                let e = w.eps1.unwrap();
                prop_assert!(e > 0.0 && e <= EPS1_CAP);
                prop_assert!(eps1_first(d, lambda, delta, e));
                prop_assert!(eps1_second(d, lambda, e));
                prop_assert!(is_admissible_pair(w.pair.q, w.pair.r, d));
            }
        }
    }
}
