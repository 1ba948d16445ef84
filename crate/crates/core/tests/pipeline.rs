use std::path::PathBuf;
use std::time::Instant;

use decay_lab::dynamics::{decay_report, run_experiment};
use decay_lab::harness::config::parse_config;
use decay_lab::harness::report::{read_run, report_from_run, write_run, ExperimentReport, RunMeta};
use decay_lab::harness::{load_config, load_report, write_config, write_report, ExperimentConfig, ProfileKind};
use decay_lab::Error;

const SMALL: &str = r#"
d = 1

[potential]
kind = "inverse_square"
sigma1 = 0.09
r0 = 1.0

[nonlinearity]
symbol = "gauge"
eta = 0.1

[params]
delta = 0.95
b = 0.46

[data]
amplitude = 0.1

[run]
t0 = 5.0
t1 = 15.0
seed_time = 30.0
records = 9
norm_taus = [6.0, 8.0]
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("decay-lab-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn config_round_trips_in_both_formats() {
    let dir = scratch("config");
    let cfg = ExperimentConfig::long_range();
    for name in ["c.toml", "c.json"] {
        let path = dir.join(name);
        write_config(&cfg, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_errors_name_the_field() {
    let missing = SMALL.replace("t1 = 15.0\n", "");
    match parse_config(&missing, false) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "t1"),
        other => panic!("{other:?}"),
    }
    let unknown = SMALL.replace("records = 9", "records = 9\nbogus = 1");
    match parse_config(&unknown, false) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "bogus"),
        other => panic!("{other:?}"),
    }
    match parse_config(&SMALL.replace("t0 = 5.0", "t0 = 20.0"), false) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "run.t1"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn run_directory_round_trip_reproduces_the_report() {
    let cfg = parse_config(SMALL, false).unwrap();
    let solver = cfg.resolve().unwrap();
    let start = Instant::now();
    let traj = run_experiment(&solver).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(traj.is_finite());
    assert_eq!(traj.times.len(), 9);

    let summary = solver.summary();
    let main = decay_report(&summary, &traj, ProfileKind::Corrected, secs).unwrap();
    let ablation = decay_report(&summary, &traj, ProfileKind::NoLog, secs).unwrap();
    assert!(main.slope().unwrap() < 0.0);
    assert!(main.mass_drift < 1e-6, "{}", main.mass_drift);
    assert_eq!(main.weighted_norms.len(), 2);

    let dir = scratch("run");
    let meta = RunMeta {
        config: cfg.clone(),
        summary: summary.clone(),
        windows: solver.windows.clone(),
        lr_exponent: traj.lr_exponent,
        steps: traj.steps,
        runtime_s: secs,
    };
    write_run(&dir, &meta, &traj).unwrap();
    let (meta2, traj2) = read_run(&dir).unwrap();
    assert_eq!(meta2.config, cfg);
    assert_eq!(traj2.times, traj.times);
    assert_eq!(traj2.residual.l2, traj.residual.l2);

    let rebuilt = report_from_run(&dir, false).unwrap();
    let direct = ExperimentReport::new(solver.windows.clone(), main, ablation, None);
    assert_eq!(rebuilt.main.fit, direct.main.fit);
    assert_eq!(rebuilt.log_phase_gap, direct.log_phase_gap);

    let path = dir.join("report.json");
    write_report(&rebuilt, &path).unwrap();
    assert_eq!(load_report(&path).unwrap(), rebuilt);
    std::fs::remove_dir_all(&dir).unwrap();
}
