use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use decay_lab::dynamics::{decay_report, run_experiment};
use decay_lab::fieldops::ComplexField;
use decay_lab::harness::config::load_config;
use decay_lab::harness::report::{identity_suite, report_from_run, write_report, write_run, ExperimentReport, RunMeta};
use decay_lab::harness::ProfileKind;
use decay_lab::nonlinearity::{check_a2, decay_exponent_fit, fourier_coefficients, NonlinearityParams, PeriodicSymbol};
use decay_lab::params::parameter_windows;
use decay_lab::potential::{
    default_fit_window, fit_asymptotics, integrate_fundamental, validate_a1, BelowOnset, PotentialSpec,
};
use decay_lab::profile::{u_p_field, write_profile_csv};
use decay_lab::Result;

#[derive(Parser)]
#[command(name = "decay-lab", version, about = "NLS with time-decaying harmonic potentials")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Onset {
    Matched,
    Capped,
}

#[derive(Clone, Copy, ValueEnum)]
enum Symbol {
    Gauge,
    RePower,
    TwoTerm,
    Cos,
    Zero,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate ζ₁, ζ₂ and fit their asymptotic constants.
    Zeta {
        /// σ(t) = σ₁t⁻² for t ≥ r₀; 0 means σ ≡ 0.
        #[arg(long, default_value_t = 0.09)]
        sigma1: f64,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, default_value_t = 1e4)]
        t_max: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = Onset::Matched)]
        below_onset: Onset,
        /// CSV with t, zeta1, zeta1p, zeta2, zeta2p, wronskian_defect.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourier coefficients of a symbol and the summability check.
    Coeffs {
        #[arg(long, value_enum, default_value_t = Symbol::Gauge)]
        symbol: Symbol,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Power for re-power / two-term (defaults to p_c).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 256)]
        n_max: usize,
        #[arg(long, default_value_t = 4096)]
        m: usize,
    },
    /// Admissible parameter windows.
    CheckParams {
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// MDFM, lens and factorization residuals on refined grids.
    VerifyIdentities,
    /// Run a final-state experiment into a run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build report.json from a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        skip_identities: bool,
    },
}

fn print(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn zeta(sigma1: f64, r0: f64, t_max: f64, dt: f64, onset: Onset, out: Option<PathBuf>) -> Result<()> {
    let spec = if sigma1 == 0.0 { PotentialSpec::zero(r0)? } else { PotentialSpec::inverse_square(sigma1, r0)? };
    let spec = spec.with_below_onset(match onset {
        Onset::Matched => BelowOnset::Matched,
        Onset::Capped => BelowOnset::Capped,
    });
    let start = Instant::now();
    let pair = integrate_fundamental(&spec, t_max, dt)?;
    let consts = fit_asymptotics(&pair, default_fit_window(&pair))?;
    let validation = validate_a1(&pair, &consts, 1e-2);
    if let Some(path) = out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "zeta1", "zeta1p", "zeta2", "zeta2p", "wronskian_defect"])?;
        let defect = pair.wronskian_defect();
        for k in 0..pair.len() {
            let s = pair.node(k);
            w.write_record(
                [pair.times[k], s.zeta1, s.zeta1p, s.zeta2, s.zeta2p, defect[k]].map(|v| format!("{v:.17e}")),
            )?;
        }
        w.flush()?;
    }
    print(&json!({
        "spec": spec,
        "nodes": pair.len(),
        "max_wronskian_defect": pair.max_wronskian_defect(),
        "lambda_exact": spec.lambda_exact(),
        "constants": consts,
        "validation": validation,
        "runtime_s": start.elapsed().as_secs_f64(),
    }))
}

#[allow(clippy::too_many_arguments)]
fn coeffs(symbol: Symbol, mu: f64, alpha: Option<f64>, d: usize, lambda: f64, eta: f64, n_max: usize, m: usize) -> Result<()> {
    let params = NonlinearityParams::new(d, lambda, eta)?;
    let a = alpha.unwrap_or(params.p_c);
    let g = match symbol {
        Symbol::Gauge => PeriodicSymbol::gauge(mu),
        Symbol::RePower => PeriodicSymbol::re_power(a),
        Symbol::TwoTerm => PeriodicSymbol::two_term(a),
        Symbol::Cos => PeriodicSymbol::cos(),
        Symbol::Zero => PeriodicSymbol::zero(),
    };
    let table = fourier_coefficients(&g, n_max, m)?;
    let a2 = check_a2(&table, &params)?;
    let first: Vec<_> = (-8..=8).map(|n| json!({"n": n, "re": table.get(n).re, "im": table.get(n).im})).collect();
    print(&json!({
        "symbol": g.label(),
        "p_c": params.p_c,
        "quadrature_points": table.quadrature_points,
        "g": first,
        "fitted_decay": decay_exponent_fit(&table).ok(),
        "a2": a2,
    }))
}

fn simulate(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let solver = cfg.resolve()?;
    eprintln!(
        "grid n = {} L = {:.1}, seed at t = {}, {} records",
        solver.grid.n,
        solver.grid.length,
        solver.seed_time,
        solver.record_times.len()
    );
    let start = Instant::now();
    let traj = run_experiment(&solver)?;
    let secs = start.elapsed().as_secs_f64();
    let summary = solver.summary();
    let meta = RunMeta {
        config: cfg.clone(),
        summary: summary.clone(),
        windows: solver.windows.clone(),
        lr_exponent: traj.lr_exponent,
        steps: traj.steps,
        runtime_s: secs,
    };
    write_run(out, &meta, &traj)?;
    let snaps = out.join("snapshots");
    std::fs::create_dir_all(&snaps)?;
    for (t, u) in &traj.fields {
        write_profile_csv(u, &snaps.join(format!("u_t{t:.3}.csv")))?;
        let up: ComplexField = u_p_field(&solver.pair, &solver.data, &solver.profile, *t, &solver.grid)?;
        write_profile_csv(&up, &snaps.join(format!("up_t{t:.3}.csv")))?;
    }
    let main = decay_report(&summary, &traj, ProfileKind::Corrected, secs)?;
    let ablation = decay_report(&summary, &traj, ProfileKind::NoLog, secs)?;
    let report = ExperimentReport::new(solver.windows.clone(), main, ablation, None);
    write_report(&report, &out.join("report.json"))?;
    print(&json!({
        "run_dir": out,
        "steps": traj.steps,
        "runtime_s": secs,
        "slope": report.main.slope(),
        "threshold": report.main.threshold,
        "pass": report.main.pass,
        "ablation_slope": report.ablation.slope(),
        "log_phase_gap": report.log_phase_gap,
    }))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Zeta { sigma1, r0, t_max, dt, below_onset, out } => zeta(sigma1, r0, t_max, dt, below_onset, out)?,
        Cmd::Coeffs { symbol, mu, alpha, d, lambda, eta, n_max, m } => coeffs(symbol, mu, alpha, d, lambda, eta, n_max, m)?,
        Cmd::CheckParams { d, lambda, eta, delta } => print(&parameter_windows(d, lambda, eta, delta)?)?,
        Cmd::VerifyIdentities => {
            let suite = identity_suite()?;
            print(&suite)?;
            return Ok(suite.ladders().iter().all(|l| l.finest() < 1e-7 && l.refines()));
        }
        Cmd::Simulate { config, out } => simulate(&config, &out)?,
        Cmd::Report { run, out, skip_identities } => {
            let report = report_from_run(&run, !skip_identities)?;
            write_report(&report, &out)?;
            print(&json!({"report": out, "slope": report.main.slope(), "pass": report.main.pass}))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
