//! Split-step spectral integrator for i∂ₜu = −½Δu + σ(t)|x|²u/2 + F(u) and
//! the final-state experiments built on it.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldops::{ComplexField, SpectralGrid, MAX_GRID_POINTS, NYQUIST_FRACTION};
use crate::harness::fit::{fit_power_law, LineFit};
use crate::harness::norms::{weighted_norm, WeightedNorm};
use crate::harness::report::{DecayReport, ProfileKind, RunSummary, WeightedNormSample};
use crate::nonlinearity::{evaluate_f, CoefficientTable, NonlinearityParams, PeriodicSymbol};
use crate::params::ParamWindows;
use crate::potential::{eval_sigma, FundamentalPair, PotentialSpec};
use crate::profile::{u_p_field, FinalData, FinalRepr, ProfileParams};

/// Largest admissible time step.
pub const MAX_DT: f64 = 0.05;
/// Multiplier on the profile's support when sizing the box.
pub const BOX_FACTOR: f64 = 2.5;
/// Gaussian widths (in 1/√Re a) counted as support.
pub const SUPPORT_WIDTHS: f64 = 4.0;

/// Pointwise nonlinear updates smaller than this relative change are skipped.
const NEGLIGIBLE: f64 = 1e-17;

/// How u is tied to the profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    /// u(t0) = u_p(t0), evolved forward.
    Forward,
    /// u(T) = u_p(T) for some T ≥ t1, evolved backward through [t0, t1].
    Backward,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub grid: SpectralGrid,
    pub pair: Arc<FundamentalPair>,
    pub symbol: PeriodicSymbol,
    pub nonlinearity: NonlinearityParams,
    pub coeffs: CoefficientTable,
    pub data: FinalData,
    pub profile: ProfileParams,
    pub windows: ParamWindows,
    pub b: f64,
    pub eps0: f64,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    /// Time at which u is set equal to u_p.
    pub seed_time: f64,
    /// Ascending sample times inside [t0, t1].
    pub record_times: Vec<f64>,
    pub norm_taus: Vec<f64>,
    pub margin: f64,
    pub keep_fields: bool,
}

/// `count` log-spaced times from `t0` to `t1` inclusive.
pub fn log_spaced(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![t0];
    }
    let (a, b) = (t0.ln(), t1.ln());
    let mut out: Vec<f64> = (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect();
    out[0] = t0;
    out[count - 1] = t1;
    out
}

/// Radius of the frequency-side support of û₊.
pub fn data_radius(data: &FinalData) -> f64 {
    match &data.repr {
        FinalRepr::Gaussian { gaussian } => {
            let c = gaussian.center();
            let r = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            r + SUPPORT_WIDTHS / gaussian.a.re.sqrt()
        }
        FinalRepr::Sampled { field } => 0.5 * field.grid.length,
    }
}

/// Box holding u_p on [t_lo, t_hi], with n large enough that the profile chirp
/// is resolved at every time in the window.
pub fn auto_grid(pair: &FundamentalPair, data: &FinalData, t_lo: f64, t_hi: f64) -> Result<SpectralGrid> {
    let d = data.d();
    let hi = pair.state_at(t_hi)?;
    let length = 2.0 * BOX_FACTOR * hi.zeta2 * data_radius(data);
    let mut rate: f64 = 0.0;
    for t in log_spaced(t_lo, t_hi, 64) {
        let s = pair.state_at(t)?;
        rate = rate.max((s.zeta2p / s.zeta2).abs());
    }
    // Chirp wavenumber at the edge plus the datum's own bandwidth.
    let k_edge = rate * 0.5 * length + data_radius(data) / pair.state_at(t_lo)?.zeta2;
    let n_min = (k_edge * length / (NYQUIST_FRACTION * std::f64::consts::PI)).ceil() as usize;
    let n = n_min.max(64).next_power_of_two();
    if n.pow(d as u32) > MAX_GRID_POINTS {
        return Err(Error::Resolution(format!("box needs {n}^{d} points")));
    }
    SpectralGrid::new(d, n, length)
}

impl SolverConfig {
    pub fn seeding(&self) -> Seeding {
        if self.seed_time > self.t0 {
            Seeding::Backward
        } else {
            Seeding::Forward
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r0 = self.pair.spec.r0;
        if !(self.t0 > r0 && self.t1 > self.t0) {
            return Err(Error::Precondition(format!("need r0 = {r0} < t0 = {} < t1 = {}", self.t0, self.t1)));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::Precondition(format!("dt = {} must lie in (0, {MAX_DT}]", self.dt)));
        }
        if !(self.seed_time == self.t0 || self.seed_time >= self.t1) {
            return Err(Error::Precondition(format!(
                "seed time {} must equal t0 or be ≥ t1",
                self.seed_time
            )));
        }
        if self.seed_time > self.pair.t_max() {
            return Err(Error::Precondition(format!(
                "fundamental pair ends at {} before the seed time {}",
                self.pair.t_max(),
                self.seed_time
            )));
        }
        if self.record_times.is_empty()
            || self.record_times.windows(2).any(|w| !(w[1] > w[0]))
            || self.record_times[0] < self.t0
            || *self.record_times.last().unwrap() > self.t1
        {
            return Err(Error::Precondition("record times must be ascending inside [t0, t1]".into()));
        }
        if self.grid.d != self.data.d() || self.nonlinearity.d != self.grid.d {
            return Err(Error::Precondition("grid, data and nonlinearity dimensions differ".into()));
        }
        if !self.windows.b_in_prop_window(self.b) {
            return Err(Error::Admissibility(format!(
                "b = {} outside ({}, {})",
                self.b, self.windows.b_window_prop.0, self.windows.b_window_prop.1
            )));
        }
        self.data.check_smallness(self.eps0)?;
        for t in log_spaced(self.t0, self.seed_time.max(self.t1), 64) {
            let s = self.pair.state_at(t)?;
            self.grid.check_chirp(s.zeta2 / s.zeta2p)?;
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        -(self.b - self.windows.lambda)
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            d: self.grid.d,
            n: self.grid.n,
            length: self.grid.length,
            potential: self.pair.spec.clone(),
            symbol: self.symbol.label().to_string(),
            lambda: self.windows.lambda,
            delta: self.windows.delta,
            eta: self.windows.eta,
            b: self.b,
            g1: self.profile.g1,
            c_plus: self.profile.c_plus,
            p_c: self.profile.p_c,
            amplitude_sup: self.data.amplitude_sup,
            eps0: self.eps0,
            t0: self.t0,
            t1: self.t1,
            dt: self.dt,
            seed_time: self.seed_time,
            seeding: self.seeding(),
            threshold: self.threshold(),
            margin: self.margin,
            pair: self.windows.pair,
            norm_taus: self.norm_taus.clone(),
        }
    }
}

/// FFT along every axis of a row-major n^d array.
struct AxisFft {
    d: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl AxisFft {
    fn new(d: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { d, n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn run(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        plan.process(buf);
        if self.d == 2 {
            transpose(buf, self.n);
            plan.process(buf);
            transpose(buf, self.n);
        }
    }
}

fn transpose(values: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            values.swap(i * n + j, j * n + i);
        }
    }
}

/// One Strang step is K(h/2) V(h/2) N(h) V(h/2) K(h/2); consecutive half
/// kinetic steps are fused.
pub struct Stepper {
    grid: SpectralGrid,
    spec: PotentialSpec,
    nonlinear: Option<(PeriodicSymbol, NonlinearityParams)>,
    g_max: f64,
    r2: Vec<f64>,
    k2: Vec<f64>,
    fft: AxisFft,
}

impl Stepper {
    /// `nonlinear = None` (or a zero symbol) means F ≡ 0.
    pub fn new(grid: SpectralGrid, spec: &PotentialSpec, nonlinear: Option<(PeriodicSymbol, NonlinearityParams)>) -> Self {
        let n = grid.n;
        let dk = 2.0 * std::f64::consts::PI / grid.length;
        let freq = |k: usize| if k < n / 2 { k as f64 * dk } else { (k as f64 - n as f64) * dk };
        let k2: Vec<f64> = (0..grid.len())
            .map(|i| if grid.d == 1 { freq(i).powi(2) } else { freq(i / n).powi(2) + freq(i % n).powi(2) })
            .collect();
        let r2 = (0..grid.len()).map(|i| grid.radius_sq(i)).collect();
        let g_max = nonlinear
            .as_ref()
            .map(|(g, _)| {
                (0..256)
                    .map(|j| g.eval(2.0 * std::f64::consts::PI * j as f64 / 256.0).norm())
                    .fold(0.0, f64::max)
            })
            .unwrap_or(0.0);
        let nonlinear = if g_max == 0.0 { None } else { nonlinear };
        Self { grid, spec: spec.clone(), nonlinear, g_max: 2.0 * g_max, r2, k2, fft: AxisFft::new(grid.d, n) }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// e^{−i|ξ|²h/2}/n in FFT order.
    fn kinetic_factors(&self, h: f64) -> Vec<Complex64> {
        let norm = 1.0 / self.grid.len() as f64;
        self.k2.iter().map(|&k2| Complex64::from_polar(norm, -0.5 * k2 * h)).collect()
    }

    fn kinetic(&self, u: &mut [Complex64], factors: &[Complex64]) {
        self.fft.run(u, &self.fft.forward);
        for (v, f) in u.iter_mut().zip(factors) {
            *v *= f;
        }
        self.fft.run(u, &self.fft.inverse);
    }

    /// V(h/2) N(h) V(h/2), pointwise.
    fn potential_nonlinear(&self, u: &mut [Complex64], sigma: f64, h: f64) {
        for (v, &r2) in u.iter_mut().zip(&self.r2) {
            let phase = if sigma == 0.0 { None } else { Some(Complex64::from_polar(1.0, -0.25 * sigma * r2 * h)) };
            if let Some(p) = phase {
                *v *= p;
            }
            self.nonlinear_point(v, h);
            if let Some(p) = phase {
                *v *= p;
            }
        }
    }

    fn nonlinear_point(&self, v: &mut Complex64, h: f64) {
        let Some((g, params)) = &self.nonlinear else { return };
        let a = v.norm();
        if a == 0.0 || self.g_max * a.powf(params.p_c) * h.abs() < NEGLIGIBLE {
            return;
        }
        let f = |z: Complex64| -Complex64::i() * evaluate_f(g, params, z);
        let k1 = f(*v);
        let k2 = f(*v + k1 * (0.5 * h));
        let k3 = f(*v + k2 * (0.5 * h));
        let k4 = f(*v + k3 * h);
        *v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }

    /// Evolves `u` from `t_from` to `t_to` (either direction) in equal steps of
    /// size at most `dt_max`. Returns the number of steps.
    pub fn evolve(&self, u: &mut ComplexField, t_from: f64, t_to: f64, dt_max: f64) -> Result<usize> {
        if !u.grid.matches(&self.grid) {
            return Err(Error::GridMismatch(format!("field grid {:?} vs stepper grid {:?}", u.grid, self.grid)));
        }
        if !(dt_max > 0.0) {
            return Err(Error::Domain(format!("dt must be > 0, got {dt_max}")));
        }
        let span = t_to - t_from;
        if span == 0.0 {
            return Ok(0);
        }
        let steps = ((span.abs() / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let vals = &mut u.values;
        let half = self.kinetic_factors(0.5 * h);
        let full = if steps > 1 { self.kinetic_factors(h) } else { vec![] };
        self.kinetic(vals, &half);
        for k in 0..steps {
            let t = t_from + k as f64 * h;
            let sigma = eval_sigma(&self.spec, t + 0.5 * h)?;
            self.potential_nonlinear(vals, sigma, h);
            self.kinetic(vals, if k + 1 == steps { &half } else { &full });
            if vals.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::EvolutionAbort {
                    last_good_time: t,
                    reason: format!("non-finite values after the step from t = {t}"),
                });
            }
        }
        Ok(steps)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    /// ‖u − u_p‖₂.
    pub l2: Vec<f64>,
    /// ‖u − u_p‖_r for the run's Strichartz exponent r.
    pub lr: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub d: usize,
    /// Exponent r of `ResidualSeries::lr` (∞ allowed).
    #[serde(with = "crate::params::extended_real")]
    pub lr_exponent: f64,
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub linf: Vec<f64>,
    /// Against the log-corrected profile.
    pub residual: ResidualSeries,
    /// Against the profile without the log phase.
    pub residual_no_log: ResidualSeries,
    pub seed_time: f64,
    pub steps: usize,
    /// u at the sample times (all of them with `keep_fields`, else first and last).
    #[serde(skip)]
    pub fields: Vec<(f64, ComplexField)>,
}

impl Trajectory {
    pub fn is_finite(&self) -> bool {
        [&self.mass, &self.linf, &self.residual.l2, &self.residual.lr, &self.residual_no_log.l2, &self.residual_no_log.lr]
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn series(&self, kind: ProfileKind) -> &ResidualSeries {
        match kind {
            ProfileKind::Corrected => &self.residual,
            ProfileKind::NoLog => &self.residual_no_log,
        }
    }
}

fn lr(f: &ComplexField, r: f64) -> f64 {
    if r.is_infinite() {
        f.sup_norm()
    } else {
        f.lr_norm(r)
    }
}

fn residual(u: &ComplexField, up: &ComplexField, r: f64) -> (f64, f64) {
    let mut diff = up.clone();
    for (dv, v) in diff.values.iter_mut().zip(&u.values) {
        *dv = v - *dv;
    }
    (diff.norm_l2(), lr(&diff, r))
}

/// Evolves `u0`, the state at `cfg.seed_time`, through every record time and
/// measures it against both profiles.
pub fn split_step_evolve(cfg: &SolverConfig, u0: ComplexField) -> Result<Trajectory> {
    cfg.validate()?;
    let stepper = Stepper::new(cfg.grid, &cfg.pair.spec, Some((cfg.symbol.clone(), cfg.nonlinearity)));
    let r = cfg.windows.pair.r;
    let no_log = cfg.profile.without_log();
    let mut order: Vec<usize> = (0..cfg.record_times.len()).collect();
    if cfg.seeding() == Seeding::Backward {
        order.reverse();
    }
    let m = order.len();
    let mut traj = Trajectory {
        d: cfg.grid.d,
        lr_exponent: r,
        times: cfg.record_times.clone(),
        mass: vec![0.0; m],
        linf: vec![0.0; m],
        residual: ResidualSeries { l2: vec![0.0; m], lr: vec![0.0; m] },
        residual_no_log: ResidualSeries { l2: vec![0.0; m], lr: vec![0.0; m] },
        seed_time: cfg.seed_time,
        steps: 0,
        fields: vec![],
    };
    let mut u = u0;
    let mut t = cfg.seed_time;
    for (pos, &k) in order.iter().enumerate() {
        let tk = cfg.record_times[k];
        traj.steps += stepper.evolve(&mut u, t, tk, cfg.dt)?;
        t = tk;
        let up = u_p_field(&cfg.pair, &cfg.data, &cfg.profile, tk, &cfg.grid)?;
        (traj.residual.l2[k], traj.residual.lr[k]) = residual(&u, &up, r);
        if cfg.profile.g1 == 0.0 {
            traj.residual_no_log.l2[k] = traj.residual.l2[k];
            traj.residual_no_log.lr[k] = traj.residual.lr[k];
        } else {
            let up0 = u_p_field(&cfg.pair, &cfg.data, &no_log, tk, &cfg.grid)?;
            (traj.residual_no_log.l2[k], traj.residual_no_log.lr[k]) = residual(&u, &up0, r);
        }
        traj.mass[k] = u.norm_l2();
        traj.linf[k] = u.sup_norm();
        if cfg.keep_fields || pos == 0 || pos + 1 == m {
            traj.fields.push((tk, u.clone()));
        }
    }
    traj.fields.sort_by(|a, b| a.0.total_cmp(&b.0));
    if !traj.is_finite() {
        return Err(Error::EvolutionAbort { last_good_time: t, reason: "non-finite diagnostics".into() });
    }
    Ok(traj)
}

/// Seeds u = u_p at the configured seed time and evolves.
pub fn run_experiment(cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let u0 = u_p_field(&cfg.pair, &cfg.data, &cfg.profile, cfg.seed_time, &cfg.grid)?;
    split_step_evolve(cfg, u0)
}

/// Fit and weighted norms for one residual series of a finished run.
pub fn decay_report(summary: &RunSummary, traj: &Trajectory, kind: ProfileKind, runtime_s: f64) -> Result<DecayReport> {
    let series = traj.series(kind);
    let (ts, rs): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&series.l2)
        .filter(|(&t, &r)| r > 0.0 && t >= summary.t0 && t <= summary.t1)
        .map(|(&t, &r)| (t, r))
        .unzip();
    let identically_zero = series.l2.iter().all(|&r| r == 0.0);
    let fit: Option<LineFit> = if ts.len() >= 5 { Some(fit_power_law(&ts, &rs)?) } else { None };
    let pass = match &fit {
        Some(f) => f.slope <= summary.threshold + summary.margin,
        None => identically_zero,
    };
    let mut norms = vec![];
    for &tau in &summary.norm_taus {
        let w: WeightedNorm = weighted_norm(traj, kind, summary.pair.q, summary.pair.r, summary.lambda, tau, summary.t1)?;
        let scale = tau.powf(summary.b - 2.0 * summary.lambda);
        norms.push(WeightedNormSample {
            tau,
            value: w.value,
            tail: w.tail,
            scaled: scale * w.value,
            scaled_with_tail: scale * w.value_with_tail(summary.pair.q),
        });
    }
    let mass0 = traj.mass.first().copied().unwrap_or(0.0);
    let mass_drift = traj.mass.iter().map(|m| (m - mass0).abs()).fold(0.0, f64::max);
    Ok(DecayReport {
        summary: summary.clone(),
        profile: kind,
        fit,
        identically_zero,
        threshold: summary.threshold,
        margin: summary.margin,
        pass,
        weighted_norms: norms,
        mass_drift,
        max_residual: series.l2.iter().copied().fold(0.0, f64::max),
        steps: traj.steps,
        runtime_s,
    })
}

/// Runs once and reports against the log-corrected profile.
pub fn final_state_experiment(cfg: &SolverConfig) -> Result<DecayReport> {
    let start = Instant::now();
    let traj = run_experiment(cfg)?;
    decay_report(&cfg.summary(), &traj, ProfileKind::Corrected, start.elapsed().as_secs_f64())
}

/// Runs once and reports against the profile with the log phase removed.
pub fn ablation_no_log(cfg: &SolverConfig) -> Result<DecayReport> {
    let start = Instant::now();
    let traj = run_experiment(cfg)?;
    decay_report(&cfg.summary(), &traj, ProfileKind::NoLog, start.elapsed().as_secs_f64())
}

/// Both reports from a single evolution, plus the trajectory.
pub fn paired_experiment(cfg: &SolverConfig) -> Result<(DecayReport, DecayReport, Trajectory)> {
    let start = Instant::now();
    let traj = run_experiment(cfg)?;
    let secs = start.elapsed().as_secs_f64();
    let summary = cfg.summary();
    let main = decay_report(&summary, &traj, ProfileKind::Corrected, secs)?;
    let ablation = decay_report(&summary, &traj, ProfileKind::NoLog, secs)?;
    Ok((main, ablation, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldops::{free_propagate, gaussian_propagate, mdfm_ops, ComplexGaussian};
    use crate::potential::integrate_fundamental;

    fn packet(d: usize) -> ComplexGaussian {
        ComplexGaussian::new(d, Complex64::new(1.0, 0.0), &vec![0.3; d], &vec![0.8; d], Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn free_flow_matches_free_propagator() {
        let grid = SpectralGrid::new(1, 256, 40.0).unwrap();
        let spec = PotentialSpec::zero(1.0).unwrap();
        let st = Stepper::new(grid, &spec, None);
        let u0 = packet(1).to_field(&grid).unwrap();
        let mut u = u0.clone();
        assert_eq!(st.evolve(&mut u, 2.0, 3.0, 0.01).unwrap(), 100);
        let want = free_propagate(&u0, 1.0);
        assert!(u.distance_l2(&want).unwrap() < 1e-8);
    }

    #[test]
    fn free_flow_in_two_dimensions() {
        let grid = SpectralGrid::new(2, 64, 24.0).unwrap();
        let st = Stepper::new(grid, &PotentialSpec::zero(1.0).unwrap(), None);
        let u0 = packet(2).to_field(&grid).unwrap();
        let mut u = u0.clone();
        st.evolve(&mut u, 1.0, 1.5, 0.05).unwrap();
        assert!(u.distance_l2(&free_propagate(&u0, 0.5)).unwrap() < 1e-10);
    }

    /// Exact Gaussian at time t under the σ-flow started at time 0.
    fn oracle(pair: &FundamentalPair, g: &ComplexGaussian, t: f64, grid: &SpectralGrid) -> ComplexField {
        gaussian_propagate(&mdfm_ops(pair, t).unwrap(), g).unwrap().to_field(grid).unwrap()
    }

    #[test]
    fn second_order_against_the_mdfm_oracle() {
        let pair = integrate_fundamental(&PotentialSpec::inverse_square(0.09, 1.0).unwrap(), 20.0, 1e-3).unwrap();
        let grid = SpectralGrid::new(1, 512, 60.0).unwrap();
        let st = Stepper::new(grid, &pair.spec, None);
        let g = packet(1);
        let (ta, tb) = (1.5, 4.0);
        let start = oracle(&pair, &g, ta, &grid);
        let want = oracle(&pair, &g, tb, &grid);
        let err = |dt: f64| {
            let mut u = start.clone();
            st.evolve(&mut u, ta, tb, dt).unwrap();
            u.distance_l2(&want).unwrap()
        };
        let (e1, e2, e3) = (err(0.05), err(0.025), err(0.0125));
        assert!((e1 / e2 - 4.0).abs() < 0.5, "{e1:e} {e2:e}");
        assert!((e2 / e3 - 4.0).abs() < 0.5, "{e2:e} {e3:e}");
    }

    #[test]
    fn gauge_flow_conserves_mass() {
        let pair = integrate_fundamental(&PotentialSpec::inverse_square(0.09, 1.0).unwrap(), 20.0, 1e-2).unwrap();
        let grid = SpectralGrid::new(1, 512, 60.0).unwrap();
        let params = NonlinearityParams::new(1, 0.1, 0.1).unwrap();
        let st = Stepper::new(grid, &pair.spec, Some((PeriodicSymbol::gauge(-1.7), params)));
        // Small data, as in the final-state runs; RK4 damps a rotation by (ωh)⁶/144 per step.
        let mut u = packet(1).to_field(&grid).unwrap().scaled(Complex64::new(0.3, 0.0));
        let m0 = u.norm_l2();
        for k in 0..10 {
            st.evolve(&mut u, 2.0 + k as f64, 3.0 + k as f64, 0.05).unwrap();
            assert!((u.norm_l2() - m0).abs() < 1e-8, "{:e}", u.norm_l2() - m0);
        }
    }

    #[test]
    fn free_stepper_is_reversible() {
        let grid = SpectralGrid::new(1, 256, 40.0).unwrap();
        let st = Stepper::new(grid, &PotentialSpec::zero(1.0).unwrap(), None);
        let u0 = packet(1).to_field(&grid).unwrap();
        let mut u = u0.clone();
        st.evolve(&mut u, 3.0, 3.05, 0.05).unwrap();
        st.evolve(&mut u, 3.05, 3.0, 0.05).unwrap();
        assert!(u.distance_l2(&u0).unwrap() < 1e-10);
    }

    #[test]
    fn nonlinear_flow_is_reversible_to_scheme_accuracy() {
        let pair = integrate_fundamental(&PotentialSpec::inverse_square(0.09, 1.0).unwrap(), 20.0, 1e-2).unwrap();
        let grid = SpectralGrid::new(1, 256, 40.0).unwrap();
        let params = NonlinearityParams::new(1, 0.1, 0.1).unwrap();
        let st = Stepper::new(grid, &pair.spec, Some((PeriodicSymbol::re_power(params.p_c), params)));
        let u0 = packet(1).to_field(&grid).unwrap();
        let mut u = u0.clone();
        st.evolve(&mut u, 2.0, 4.0, 0.01).unwrap();
        st.evolve(&mut u, 4.0, 2.0, 0.01).unwrap();
        assert!(u.distance_l2(&u0).unwrap() < 1e-6);
    }

    #[test]
    fn blow_up_aborts_with_last_good_time() {
        let grid = SpectralGrid::new(1, 64, 20.0).unwrap();
        let params = NonlinearityParams::new(1, 0.1, 0.1).unwrap();
        let sym = PeriodicSymbol::new("growth", |th| Complex64::from_polar(1.0, th) * Complex64::new(0.0, 1.0));
        let st = Stepper::new(grid, &PotentialSpec::zero(1.0).unwrap(), Some((sym, params)));
        let mut u = ComplexGaussian::new(1, Complex64::new(1.0, 0.0), &[0.0], &[0.0], Complex64::new(1.0, 0.0))
            .unwrap()
            .to_field(&grid)
            .unwrap();
        match st.evolve(&mut u, 2.0, 30.0, 0.05) {
            Err(Error::EvolutionAbort { last_good_time, .. }) => assert!(last_good_time > 2.0 && last_good_time < 30.0),
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn log_spacing() {
        let t = log_spaced(20.0, 120.0, 7);
        assert_eq!(t.len(), 7);
        assert_eq!(t[0], 20.0);
        assert_eq!(t[6], 120.0);
        let r: Vec<f64> = t.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(r.iter().all(|q| (q - r[0]).abs() < 1e-12));
    }
}
