//! Experiment configuration files (TOML, or JSON by extension).

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{auto_grid, log_spaced, SolverConfig, MAX_DT};
use crate::error::{Error, Result};
use crate::fieldops::{ComplexGaussian, SpectralGrid};
use crate::nonlinearity::{fourier_coefficients, NonlinearityParams, PeriodicSymbol, VANISHING_TOL};
use crate::params::parameter_windows;
use crate::potential::{default_fit_window, fit_asymptotics, integrate_fundamental, BelowOnset, PotentialSpec};
use crate::profile::{FinalData, ProfileParams};

/// Default seed time as a multiple of t1.
pub const DEFAULT_SEED_FACTOR: f64 = 2.0;
/// The fundamental pair is integrated at least this far (for c₊).
pub const MIN_PAIR_HORIZON: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialChoice {
    Zero,
    InverseSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialChoice,
    #[serde(default)]
    pub sigma1: f64,
    pub r0: f64,
    #[serde(default)]
    pub below_onset: BelowOnset,
    /// Step for the fundamental pair.
    #[serde(default = "default_pair_dt")]
    pub dt: f64,
}

fn default_pair_dt() -> f64 {
    0.01
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolChoice {
    Gauge,
    RePower,
    TwoTerm,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub symbol: SymbolChoice,
    /// Strength of the gauge symbol.
    #[serde(default = "one")]
    pub mu: f64,
    /// Power for re_power / two_term; defaults to p_c.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub eta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    /// Defaults to the midpoint of the δ window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Defaults to the midpoint of the b window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
}

fn default_eps0() -> f64 {
    crate::profile::DEFAULT_EPS0
}

/// û₊(ξ) = A·exp(−a|ξ − c|²/2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub amplitude: f64,
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default = "one")]
    pub width: f64,
}

fn default_center() -> f64 {
    crate::profile::DEFAULT_FREQUENCY_CENTER
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t0: f64,
    pub t1: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Defaults to `DEFAULT_SEED_FACTOR`·t1; t0 gives forward seeding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_time: Option<f64>,
    #[serde(default = "default_records")]
    pub records: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_length: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub norm_taus: Vec<f64>,
    #[serde(default)]
    pub keep_fields: bool,
}

fn default_dt() -> f64 {
    MAX_DT
}

fn default_records() -> usize {
    25
}

fn default_margin() -> f64 {
    0.15
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub potential: PotentialConfig,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default = "default_params")]
    pub params: ParamsConfig,
    pub data: DataConfig,
    pub run: RunConfig,
}

fn default_params() -> ParamsConfig {
    ParamsConfig { delta: None, b: None, eps0: default_eps0() }
}

fn field_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), reason: reason.into() }
}

/// Pulls the field name out of a serde message such as "missing field `t0`".
fn named_field(msg: &str) -> String {
    let mut parts = msg.split('`');
    match (parts.next(), parts.next()) {
        (Some(_), Some(name)) => name.to_string(),
        _ => "<document>".to_string(),
    }
}

impl ExperimentConfig {
    /// The long-range gauge run: d = 1, λ = 0.1, δ = 0.95, b = 0.46, ‖û₊‖_∞ = 0.1.
    pub fn long_range() -> Self {
        Self {
            d: 1,
            potential: PotentialConfig {
                kind: PotentialChoice::InverseSquare,
                sigma1: 0.09,
                r0: 1.0,
                below_onset: BelowOnset::default(),
                dt: default_pair_dt(),
            },
            nonlinearity: NonlinearityConfig { symbol: SymbolChoice::Gauge, mu: 1.0, alpha: None, eta: 0.1 },
            params: ParamsConfig { delta: Some(0.95), b: Some(0.46), eps0: default_eps0() },
            data: DataConfig { amplitude: 0.1, center: default_center(), width: 1.0 },
            run: RunConfig {
                t0: 20.0,
                t1: 120.0,
                dt: default_dt(),
                seed_time: None,
                records: default_records(),
                grid_n: None,
                grid_length: None,
                margin: default_margin(),
                norm_taus: vec![30.0, 50.0, 80.0],
                keep_fields: false,
            },
        }
    }

    /// Field-by-field checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.d) {
            return Err(field_err("d", format!("simulation supports d = 1 or 2, got {}", self.d)));
        }
        let p = &self.potential;
        if !(p.r0 > 0.0 && p.r0.is_finite()) {
            return Err(field_err("potential.r0", format!("must be > 0, got {}", p.r0)));
        }
        if p.kind == PotentialChoice::InverseSquare && !(p.sigma1 >= 0.0 && p.sigma1 < 0.25) {
            return Err(field_err("potential.sigma1", format!("must lie in [0, 1/4), got {}", p.sigma1)));
        }
        if !(p.dt > 0.0 && p.dt <= 0.1) {
            return Err(field_err("potential.dt", format!("must lie in (0, 0.1], got {}", p.dt)));
        }
        if !(self.nonlinearity.eta > 0.0) {
            return Err(field_err("nonlinearity.eta", format!("must be > 0, got {}", self.nonlinearity.eta)));
        }
        if let Some(a) = self.nonlinearity.alpha {
            if !(a > 0.0) {
                return Err(field_err("nonlinearity.alpha", format!("must be > 0, got {a}")));
            }
        }
        if !(self.params.eps0 > 0.0) {
            return Err(field_err("params.eps0", format!("must be > 0, got {}", self.params.eps0)));
        }
        if !(self.data.amplitude >= 0.0 && self.data.amplitude.is_finite()) {
            return Err(field_err("data.amplitude", format!("must be ≥ 0, got {}", self.data.amplitude)));
        }
        if !(self.data.width > 0.0) {
            return Err(field_err("data.width", format!("must be > 0, got {}", self.data.width)));
        }
        let r = &self.run;
        if !(r.t0 > p.r0) {
            return Err(field_err("run.t0", format!("must exceed r0 = {}, got {}", p.r0, r.t0)));
        }
        if !(r.t1 > r.t0) {
            return Err(field_err("run.t1", format!("must exceed t0 = {}, got {}", r.t0, r.t1)));
        }
        if !(r.dt > 0.0 && r.dt <= MAX_DT) {
            return Err(field_err("run.dt", format!("must lie in (0, {MAX_DT}], got {}", r.dt)));
        }
        if let Some(s) = r.seed_time {
            if !(s == r.t0 || s >= r.t1) {
                return Err(field_err("run.seed_time", format!("must equal t0 or be ≥ t1, got {s}")));
            }
        }
        if r.records < 5 {
            return Err(field_err("run.records", format!("need at least 5, got {}", r.records)));
        }
        if r.grid_n.is_some() != r.grid_length.is_some() {
            return Err(field_err("run.grid_n", "grid_n and grid_length must be given together"));
        }
        if !(r.margin >= 0.0) {
            return Err(field_err("run.margin", format!("must be ≥ 0, got {}", r.margin)));
        }
        if let Some(tau) = r.norm_taus.iter().find(|&&t| !(t >= r.t0 && t < r.t1)) {
            return Err(field_err("run.norm_taus", format!("τ = {tau} outside [t0, t1)")));
        }
        Ok(())
    }

    pub fn seed_time(&self) -> f64 {
        self.run.seed_time.unwrap_or(DEFAULT_SEED_FACTOR * self.run.t1)
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let p = &self.potential;
        let spec = match p.kind {
            PotentialChoice::Zero => PotentialSpec::zero(p.r0)?,
            PotentialChoice::InverseSquare => PotentialSpec::inverse_square(p.sigma1, p.r0)?,
        };
        Ok(spec.with_below_onset(p.below_onset))
    }

    pub fn symbol(&self, p_c: f64) -> PeriodicSymbol {
        let nl = &self.nonlinearity;
        match nl.symbol {
            SymbolChoice::Gauge => PeriodicSymbol::gauge(nl.mu),
            SymbolChoice::RePower => PeriodicSymbol::re_power(nl.alpha.unwrap_or(p_c)),
            SymbolChoice::TwoTerm => PeriodicSymbol::two_term(nl.alpha.unwrap_or(p_c)),
            SymbolChoice::Zero => PeriodicSymbol::zero(),
        }
    }

    /// Builds the solver configuration: fundamental pair, c₊, windows, g₁,
    /// final data and grid.
    pub fn resolve(&self) -> Result<SolverConfig> {
        self.validate()?;
        let spec = self.potential_spec()?;
        let lambda = spec
            .lambda_exact()
            .ok_or_else(|| field_err("potential.kind", "decay exponent is not known in closed form"))?;
        let windows = parameter_windows(self.d, lambda, self.nonlinearity.eta, self.params.delta)?;
        let b = self.params.b.unwrap_or_else(|| windows.default_b());
        let seed = self.seed_time();
        let pair = integrate_fundamental(&spec, seed.max(self.run.t1).max(MIN_PAIR_HORIZON), self.potential.dt)?;
        let consts = fit_asymptotics(&pair, default_fit_window(&pair))?;

        let nonlinearity = NonlinearityParams::new(self.d, lambda, self.nonlinearity.eta)?;
        let symbol = self.symbol(nonlinearity.p_c);
        let coeffs = fourier_coefficients(&symbol, 64, 1024)?;
        let g1 = coeffs.get(1);
        if g1.im.abs() > VANISHING_TOL {
            return Err(Error::Precondition(format!("g₁ = {g1} is not real")));
        }
        let g1 = if g1.re.abs() < VANISHING_TOL { 0.0 } else { g1.re };
        let profile = ProfileParams::new(g1, consts.c_plus, nonlinearity.p_c)?;

        let gauss = ComplexGaussian::new(
            self.d,
            Complex64::new(self.data.amplitude, 0.0),
            &vec![self.data.center; self.d],
            &vec![0.0; self.d],
            Complex64::new(self.data.width, 0.0),
        )?;
        let data = FinalData::gaussian(gauss);
        let grid = match (self.run.grid_n, self.run.grid_length) {
            (Some(n), Some(l)) => SpectralGrid::new(self.d, n, l)?,
            _ => auto_grid(&pair, &data, self.run.t0, seed.max(self.run.t1))?,
        };
        let cfg = SolverConfig {
            grid,
            pair: Arc::new(pair),
            symbol,
            nonlinearity,
            coeffs,
            data,
            profile,
            windows,
            b,
            eps0: self.params.eps0,
            t0: self.run.t0,
            t1: self.run.t1,
            dt: self.run.dt,
            seed_time: seed,
            record_times: log_spaced(self.run.t0, self.run.t1, self.run.records),
            norm_taus: self.run.norm_taus.clone(),
            margin: self.run.margin,
            keep_fields: self.run.keep_fields,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Parses a configuration from text; `json` selects the format.
pub fn parse_config(text: &str, json: bool) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = if json {
        serde_json::from_str(text).map_err(|e| field_err(&named_field(&e.to_string()), e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| field_err(&named_field(e.message()), e.to_string()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&fs::read_to_string(path)?, is_json(path))
}

pub fn write_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let text = if is_json(path) {
        serde_json::to_string_pretty(cfg)?
    } else {
        toml::to_string_pretty(cfg).map_err(|e| field_err("<document>", e.to_string()))?
    };
    fs::write(path, text)?;
    Ok(())
}
