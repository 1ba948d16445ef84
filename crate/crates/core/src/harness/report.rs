//! Decay reports, the identity suite, and run-directory I/O.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{decay_report, ResidualSeries, Seeding, Trajectory};
use crate::error::{Error, Result};
use crate::fieldops::{
    factorization_residual, free_propagate, lens_identity_residual, mdfm_apply, ComplexGaussian, SpectralGrid,
};
use crate::harness::config::ExperimentConfig;
use crate::harness::fit::LineFit;
use crate::params::{extended_real, ExponentPair, ParamWindows};
use crate::potential::{integrate_fundamental, PotentialSpec};

/// Residuals below this are treated as converged when checking refinement.
pub const RESIDUAL_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// u_p with the logarithmic phase.
    Corrected,
    /// u_p with g₁ set to zero.
    NoLog,
}

/// Echo of the resolved run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub d: usize,
    pub n: usize,
    pub length: f64,
    pub potential: PotentialSpec,
    pub symbol: String,
    pub lambda: f64,
    pub delta: f64,
    pub eta: f64,
    pub b: f64,
    pub g1: f64,
    pub c_plus: f64,
    pub p_c: f64,
    pub amplitude_sup: f64,
    pub eps0: f64,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub seed_time: f64,
    pub seeding: Seeding,
    /// −(b − λ).
    pub threshold: f64,
    pub margin: f64,
    pub pair: ExponentPair,
    pub norm_taus: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSample {
    pub tau: f64,
    /// Truncated at t1.
    pub value: f64,
    #[serde(with = "extended_real")]
    pub tail: f64,
    /// τ^{b−2λ}·value.
    pub scaled: f64,
    /// τ^{b−2λ}·(value with the tail estimate included).
    #[serde(with = "extended_real")]
    pub scaled_with_tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub summary: RunSummary,
    pub profile: ProfileKind,
    /// log r against log t over [t0, t1]; `None` if fewer than five positive samples.
    pub fit: Option<LineFit>,
    pub identically_zero: bool,
    pub threshold: f64,
    pub margin: f64,
    /// slope ≤ threshold + margin (or r ≡ 0).
    pub pass: bool,
    pub weighted_norms: Vec<WeightedNormSample>,
    pub mass_drift: f64,
    pub max_residual: f64,
    pub steps: usize,
    pub runtime_s: f64,
}

impl DecayReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// max/min − 1 over a set of positive values.
pub fn relative_spread(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    hi / lo - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpread {
    #[serde(with = "extended_real")]
    pub truncated: f64,
    #[serde(with = "extended_real")]
    pub with_tail: f64,
}

/// Residuals of one identity on a sequence of refined grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityLadder {
    pub label: String,
    /// (points per axis, box length) per level.
    pub grids: Vec<(usize, f64)>,
    pub residuals: Vec<f64>,
}

impl IdentityLadder {
    pub fn finest(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }

    /// Every refinement lowers the residual, unless both are at the floor.
    pub fn refines(&self) -> bool {
        self.residuals
            .windows(2)
            .all(|w| w[1] < w[0] || (w[0] < RESIDUAL_FLOOR && w[1] < RESIDUAL_FLOOR))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub mdfm_free: IdentityLadder,
    pub lens_corrected: IdentityLadder,
    /// The lens identity with the displayed phase 4ab/c, on the finest lens grid.
    pub lens_displayed: f64,
    pub factorization_n2: IdentityLadder,
    pub factorization_n3: IdentityLadder,
}

impl IdentityResiduals {
    pub fn ladders(&self) -> [&IdentityLadder; 4] {
        [&self.mdfm_free, &self.lens_corrected, &self.factorization_n2, &self.factorization_n3]
    }
}

fn packet(a: f64) -> Result<ComplexGaussian> {
    ComplexGaussian::new(1, Complex64::new(1.0, 0.0), &[0.4], &[0.3], Complex64::new(a, 0.0))
}

/// Smallest power-of-two n whose box of length L admits e^{is|x|²/2}.
fn n_for_chirp(length: f64, s: f64) -> usize {
    ((s.abs() * length * length / (1.6 * std::f64::consts::PI)).ceil() as usize).max(64).next_power_of_two()
}

/// Runs every exact identity on resolved Gaussians over growing boxes.
pub fn identity_suite() -> Result<IdentityResiduals> {
    let zero = integrate_fundamental(&PotentialSpec::zero(0.5)?, 20.0, 0.01)?;
    let inv = integrate_fundamental(&PotentialSpec::inverse_square(0.09, 1.0)?, 100.0, 0.01)?;

    let mut mdfm = IdentityLadder { label: "mdfm (σ ≡ 0) vs free propagator, t = 1".into(), grids: vec![], residuals: vec![] };
    for n in [16, 32, 64, 128] {
        let grid = SpectralGrid::self_dual(1, n)?;
        let f = packet(1.0)?.to_field(&grid)?;
        let via = mdfm_apply(&zero, 1.0, &f)?;
        mdfm.grids.push((n, grid.length));
        mdfm.residuals.push(free_propagate(&f, 1.0).relative_distance(&via)?);
    }

    let g4 = packet(4.0)?;
    let mut lens = IdentityLadder { label: "lens identity, corrected phase, a = 0.3, b = 0.2".into(), grids: vec![], residuals: vec![] };
    let mut displayed = f64::NAN;
    for (n, length) in [(32, 8.0), (64, 12.0), (128, 18.0), (256, 24.0)] {
        let grid = SpectralGrid::new(1, n, length)?;
        let (p, c) = lens_identity_residual(0.3, 0.2, &g4, &grid)?;
        lens.grids.push((n, length));
        lens.residuals.push(c);
        displayed = p;
    }

    let fac = |label: &str, pair: &crate::potential::FundamentalPair, order: i64, s: f64| -> Result<IdentityLadder> {
        let st = pair.state_at(s)?;
        let rate = (order as f64 - 1.0) * st.zeta2 * st.zeta2p;
        let mut ladder = IdentityLadder { label: label.into(), grids: vec![], residuals: vec![] };
        for length in [10.0, 14.0, 20.0, 28.0] {
            let grid = SpectralGrid::new(1, n_for_chirp(length, rate), length)?;
            ladder.grids.push((grid.n, length));
            ladder.residuals.push(factorization_residual(pair, order, s, &g4, &grid)?);
        }
        Ok(ladder)
    };
    let factorization_n2 = fac("factorization n = 2, inverse_square(0.09, 1), s = 50", &inv, 2, 50.0)?;
    let factorization_n3 = fac("factorization n = 3, σ ≡ 0, s = 10", &zero, 3, 10.0)?;

    Ok(IdentityResiduals { mdfm_free: mdfm, lens_corrected: lens, lens_displayed: displayed, factorization_n2, factorization_n3 })
}

/// The single document written by `report`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub run: RunSummary,
    pub windows: ParamWindows,
    pub main: DecayReport,
    pub ablation: DecayReport,
    /// Ablated slope minus corrected slope.
    pub log_phase_gap: Option<f64>,
    /// Spread of the τ-scaled weighted norms of the main residual.
    pub norm_spread: Option<NormSpread>,
    pub identities: Option<IdentityResiduals>,
}

impl ExperimentReport {
    pub fn new(windows: ParamWindows, main: DecayReport, ablation: DecayReport, identities: Option<IdentityResiduals>) -> Self {
        let log_phase_gap = match (main.slope(), ablation.slope()) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        let norm_spread = (main.weighted_norms.len() >= 2).then(|| NormSpread {
            truncated: relative_spread(&main.weighted_norms.iter().map(|w| w.scaled).collect::<Vec<_>>()),
            with_tail: relative_spread(&main.weighted_norms.iter().map(|w| w.scaled_with_tail).collect::<Vec<_>>()),
        });
        Self { run: main.summary.clone(), windows, main, ablation, log_phase_gap, norm_spread, identities }
    }
}

pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Everything needed to rebuild reports from a run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: ExperimentConfig,
    pub summary: RunSummary,
    pub windows: ParamWindows,
    #[serde(with = "extended_real")]
    pub lr_exponent: f64,
    pub steps: usize,
    pub runtime_s: f64,
}

pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "residual_l2", "mass", "linf"];
pub const RESIDUALS_HEADER: [&str; 4] = ["t", "residual_lr", "residual_l2_no_log", "residual_lr_no_log"];

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// Writes trajectory.csv, residuals.csv and meta.json into `dir`.
pub fn write_run(dir: &Path, meta: &RunMeta, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("trajectory.csv"))?;
    w.write_record(TRAJECTORY_HEADER)?;
    for k in 0..traj.times.len() {
        w.write_record([fmt(traj.times[k]), fmt(traj.residual.l2[k]), fmt(traj.mass[k]), fmt(traj.linf[k])])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("residuals.csv"))?;
    w.write_record(RESIDUALS_HEADER)?;
    for k in 0..traj.times.len() {
        w.write_record([
            fmt(traj.times[k]),
            fmt(traj.residual.lr[k]),
            fmt(traj.residual_no_log.l2[k]),
            fmt(traj.residual_no_log.lr[k]),
        ])?;
    }
    w.flush()?;
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

fn read_columns(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Config {
            field: path.display().to_string(),
            reason: format!("header {found:?}, expected {header:?}"),
        });
    }
    let mut cols = vec![vec![]; header.len()];
    for rec in r.records() {
        let rec = rec?;
        for (c, v) in cols.iter_mut().zip(rec.iter()) {
            c.push(v.trim().parse::<f64>().map_err(|e| Error::Config {
                field: path.display().to_string(),
                reason: format!("bad number {v:?}: {e}"),
            })?);
        }
    }
    Ok(cols)
}

/// Reads back what `write_run` wrote (fields are not stored).
pub fn read_run(dir: &Path) -> Result<(RunMeta, Trajectory)> {
    let meta: RunMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    let a = read_columns(&dir.join("trajectory.csv"), &TRAJECTORY_HEADER)?;
    let b = read_columns(&dir.join("residuals.csv"), &RESIDUALS_HEADER)?;
    if a[0] != b[0] {
        return Err(Error::Config { field: "residuals.csv".into(), reason: "time column differs from trajectory.csv".into() });
    }
    let mut it = a.into_iter();
    let (times, l2, mass, linf) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    let mut it = b.into_iter().skip(1);
    let (lr, l2n, lrn) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    let traj = Trajectory {
        d: meta.summary.d,
        lr_exponent: meta.lr_exponent,
        times,
        mass,
        linf,
        residual: ResidualSeries { l2, lr },
        residual_no_log: ResidualSeries { l2: l2n, lr: lrn },
        seed_time: meta.summary.seed_time,
        steps: meta.steps,
        fields: vec![],
    };
    Ok((meta, traj))
}

/// Builds the full report for a run directory.
pub fn report_from_run(dir: &Path, with_identities: bool) -> Result<ExperimentReport> {
    let (meta, traj) = read_run(dir)?;
    let main = decay_report(&meta.summary, &traj, ProfileKind::Corrected, meta.runtime_s)?;
    let ablation = decay_report(&meta.summary, &traj, ProfileKind::NoLog, meta.runtime_s)?;
    let identities = if with_identities { Some(identity_suite()?) } else { None };
    Ok(ExperimentReport::new(meta.windows, main, ablation, identities))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_suite_residuals() {
        let s = identity_suite().unwrap();
        for l in s.ladders() {
            assert!(l.finest() < 1e-7, "{}: {:?}", l.label, l.residuals);
            assert!(l.refines(), "{}: {:?}", l.label, l.residuals);
        }
        assert!(s.lens_displayed > 1e-3);
    }

    #[test]
    fn spread() {
        assert!((relative_spread(&[1.0, 1.2, 1.1]) - 0.2).abs() < 1e-12);
    }
}
