//! Weighted norms, power-law fitting, configuration and reports.

pub mod config;
pub mod fit;
pub mod norms;
pub mod report;

pub use config::{load_config, write_config, ExperimentConfig};
pub use fit::{fit_line, fit_power_law, LineFit};
pub use norms::{weighted_norm, weighted_norm_series, WeightedNorm};
pub use report::{identity_suite, load_report, write_report, DecayReport, ExperimentReport, ProfileKind, RunSummary};
