//! Seeded Monte Carlo engine: configuration, trials, sweeps, rate fits and persistence.

mod config;
mod engine;
mod lemmas;
mod output;
mod stats;

pub use config::{AssumptionConfig, ExperimentConfig, OutputConfig, SelectorConfig};
pub use engine::{
    run_sweep, trial_seed, Cell, CellSummary, Experiment, FitReport, ModelPolicy, Summary, SweepResult, TrialRecord,
    RECORD_HEADER,
};
pub use lemmas::{
    check_sin_theta, concentration_suite, eigengap_suite, proximity_suite, random_frame_pair, sin_theta_suite,
    verify_lemmas, SinThetaReport, SuiteOutcome, CONCENTRATION_SLOPE, EIGENGAP_FREQUENCY, RATIO_CEILING,
    SIN_THETA_PAIRS,
};
pub use output::{read_records_csv, write_rates_csv, write_records_csv, write_summary_json};
pub use stats::{fit_rate, quantile_sorted, Aggregate, RateFit};
