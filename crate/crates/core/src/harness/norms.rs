//! Time-weighted Bochner-Lebesgue norms of sampled series.

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::harness::fit::fit_power_law;
use crate::harness::report::ProfileKind;
use crate::params::{extended_real, is_admissible_pair};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    /// (∫_τ^{t1}⟨s⟩^{−λ}‖f(s)‖^q ds)^{1/q}, or the weighted sup for q = ∞.
    pub value: f64,
    /// Estimated ∫_{t1}^∞ of the same integrand from the fitted decay of ‖f‖
    /// (for q = ∞, the sup of the fitted extension). Infinite if the fitted
    /// integrand does not decay fast enough; NaN if no fit was possible.
    #[serde(with = "extended_real")]
    pub tail: f64,
}

impl WeightedNorm {
    /// The norm with the estimated tail included.
    pub fn value_with_tail(&self, q: f64) -> f64 {
        if self.tail.is_nan() {
            return self.value;
        }
        if q.is_infinite() {
            self.value.max(self.tail)
        } else {
            (self.value.powf(q) + self.tail).powf(1.0 / q)
        }
    }
}

fn japanese(s: f64) -> f64 {
    (1.0 + s * s).sqrt()
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&s| s <= t);
    if k == 0 {
        return values[0];
    }
    if k == times.len() {
        return values[k - 1];
    }
    let (a, b) = (times[k - 1], times[k]);
    let w = (t - a) / (b - a);
    values[k - 1] * (1.0 - w) + values[k] * w
}

/// The weighted norm of a series (s_i, ‖f(s_i)‖) over [τ, t1] by the
/// trapezoid rule; τ and t1 may fall between samples (linear interpolation of
/// the integrand).
pub fn weighted_norm_series(times: &[f64], values: &[f64], q: f64, lambda: f64, tau: f64, t1: f64) -> Result<WeightedNorm> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::Domain("need at least two samples of equal length".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("sample times must be strictly ascending".into()));
    }
    if values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("norm samples must be nonnegative".into()));
    }
    let (first, last) = (times[0], *times.last().unwrap());
    if !(tau >= first && tau <= last) {
        return Err(Error::Domain(format!("τ = {tau} outside the record [{first}, {last}]")));
    }
    if !(t1 > tau && t1 <= last) {
        return Err(Error::Domain(format!("t1 = {t1} must lie in (τ, {last}]")));
    }
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("q = {q} must be ≥ 1")));
    }

    let mut nodes = vec![tau];
    nodes.extend(times.iter().copied().filter(|&s| s > tau && s < t1));
    nodes.push(t1);

    let value = if q.is_infinite() {
        nodes
            .iter()
            .map(|&s| japanese(s).powf(-lambda) * interp(times, values, s))
            .fold(0.0, f64::max)
    } else {
        let integrand: Vec<f64> = nodes
            .iter()
            .map(|&s| japanese(s).powf(-lambda) * interp(times, values, s).powf(q))
            .collect();
        let integral: f64 = nodes
            .windows(2)
            .zip(integrand.windows(2))
            .map(|(s, f)| 0.5 * (s[1] - s[0]) * (f[0] + f[1]))
            .sum();
        integral.powf(1.0 / q)
    };

    Ok(WeightedNorm { value, tail: tail_estimate(times, values, q, lambda, t1) })
}

/// Tail beyond t1 from a power-law fit ‖f(s)‖ ≈ C s^α with ⟨s⟩ ≈ s.
fn tail_estimate(times: &[f64], values: &[f64], q: f64, lambda: f64, t1: f64) -> f64 {
    let (ts, vs): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| v > 0.0 && t <= t1)
        .map(|(&t, &v)| (t, v))
        .unzip();
    let Ok(fit) = fit_power_law(&ts, &vs) else { return f64::NAN };
    let c = fit.intercept.exp();
    if q.is_infinite() {
        let e = fit.slope - lambda;
        return if e <= 0.0 { c * t1.powf(e) } else { f64::INFINITY };
    }
    let e = q * fit.slope - lambda;
    if e < -1.0 {
        c.powf(q) * t1.powf(e + 1.0) / (-(e + 1.0))
    } else {
        f64::INFINITY
    }
}

/// The (q, r) weighted norm of a run's residual. (q, r) must be admissible
/// for the run's dimension, or (∞, 2).
pub fn weighted_norm(
    traj: &Trajectory,
    kind: ProfileKind,
    q: f64,
    r: f64,
    lambda: f64,
    tau: f64,
    t1: f64,
) -> Result<WeightedNorm> {
    let sup_l2 = q.is_infinite() && r == 2.0;
    if !sup_l2 && !is_admissible_pair(q, r, traj.d) {
        return Err(Error::Admissibility(format!("({q}, {r}) is not admissible in d = {}", traj.d)));
    }
    let series = traj.series(kind);
    let values = if r == 2.0 {
        &series.l2
    } else if r == traj.lr_exponent {
        &series.lr
    } else {
        return Err(Error::Precondition(format!("run recorded L^{} norms, not L^{r}", traj.lr_exponent)));
    };
    weighted_norm_series(&traj.times, values, q, lambda, tau, t1)
}
