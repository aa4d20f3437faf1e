//! End-to-end experiments: configuration, decay measurement, fits and artifacts.

mod config;
mod decay;
mod pipeline;
mod selftest;
mod stats;

pub use config::{
    DataConfig, DyadicConfig, ExperimentConfig, Pipeline, RawConfig, StoneConfig, TimeConfig,
};
pub use decay::{coarse_gap_count, decay_series, DecayRun, SpectralRoute};
pub use pipeline::{
    classify_config, dyadic_probe, run_experiment, stone_check, RunSummary, StoneRow,
    FREE_GROWTH_MIN, IMPROVED_SPREAD_MAX, POLY_STAT_MAX,
};
pub use selftest::{run_all as selftest_checks, CheckResult};
pub use stats::{
    fit_exponent, improved_statistic, poly_envelope, poly_statistic, spread, DecayFit,
    DecaySeries, SeriesField, MIN_FIT_SAMPLES,
};
