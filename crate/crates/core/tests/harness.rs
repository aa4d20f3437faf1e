use dirac2d_core::harness::{
    decay_series, fit_exponent, run_experiment, ExperimentConfig, Pipeline, SeriesField,
    SpectralRoute,
};
use dirac2d_core::{Error, ThresholdKind};
use std::fs;

const SMALL_FREE: &str = "pipeline = free-decay
[grid]
n = 128
L = 32
[time]
dt = 0.1
t_max = 20
ratio = 1.05
[smoothing]
s = 3.6
[fit]
t_lo = 4
t_hi = 20
";

#[test]
fn unknown_keys_and_duplicates_are_config_errors() {
    let e = ExperimentConfig::parse("[grid]\nn = 16\nsize = 3\n").unwrap_err();
    assert!(matches!(e, Error::Config { line: 3, .. }), "{e}");
    assert!(matches!(
        ExperimentConfig::parse("mass = 1\nmass = 2\n"),
        Err(Error::Config { .. })
    ));
    assert!(matches!(
        ExperimentConfig::parse("[time]\ndt = fast\n"),
        Err(Error::Config { .. })
    ));
}

#[test]
fn pipeline_names_roundtrip() {
    for p in Pipeline::ALL {
        assert_eq!(p.name().parse::<Pipeline>().unwrap(), p);
    }
    assert!(matches!("decay".parse::<Pipeline>(), Err(Error::Usage(_))));
}

#[test]
fn free_decay_writes_series_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SMALL_FREE).unwrap();
    let summary = run_experiment(&cfg, None, dir.path()).unwrap();
    assert_eq!(summary.pipeline, Pipeline::FreeDecay);
    let csv = fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,sup_norm,weighted_log_ratio,improved_stat,poly_stat"
    );
    assert!(lines.count() >= 20);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("config_sha256="));
    assert!(manifest.contains("file=decay.csv"));
    assert!(manifest.contains("calibration.improved_spread_max=5"));
}

#[test]
fn free_sup_norm_decays_like_inverse_time() {
    let cfg = ExperimentConfig::parse(SMALL_FREE).unwrap();
    let run = decay_series(&cfg, true).unwrap();
    assert!(run.wrap.is_none());
    let fit = fit_exponent(&run.series, SeriesField::SupNorm, [4.0, 20.0]).unwrap();
    assert!((fit.exponent + 1.0).abs() < 0.25, "{}", fit.exponent);
}

#[test]
fn perturbed_decay_on_small_grid_uses_dense_route() {
    let cfg = ExperimentConfig::parse(
        "[grid]\nn = 24\nL = 12\n[potential]\nkind = gaussian\namplitude = 0.5\nwidth = 1\nprofile = beta\n\
         [time]\ndt = 0.05\nt_max = 4\n[smoothing]\ns = 2\n[wrap]\nthreshold = 1e-3\n",
    )
    .unwrap();
    let run = decay_series(&cfg, false).unwrap();
    assert_eq!(run.route, SpectralRoute::Dense);
    assert!(run.wrap.is_none(), "{:?}", run.wrap);
    assert!(run.series.len() > 3, "{:?}", run.series.times);
    assert!(run.series.sup_norm.iter().all(|x| x.is_finite() && *x > 0.0));
}

#[test]
fn wrap_violation_is_reported_after_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(
        "pipeline = free-decay\n[grid]\nn = 32\nL = 4\n[time]\ndt = 0.1\nt_max = 30\n",
    )
    .unwrap();
    let e = run_experiment(&cfg, None, dir.path()).unwrap_err();
    assert!(matches!(e, Error::WrapViolation { .. }));
    assert_eq!(e.exit_code(), 4);
    assert!(dir.path().join("manifest.txt").exists());
}

#[test]
fn classify_reports_s_wave_for_zero_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse("pipeline = classify\n[grid]\nn = 12\nL = 4\n").unwrap();
    let s = run_experiment(&cfg, None, dir.path()).unwrap();
    let kind = ThresholdKind::SWaveResonance.to_string();
    assert!(s.notes.iter().any(|n| n.contains(&kind)));
    let report = fs::read_to_string(dir.path().join("threshold_report.txt")).unwrap();
    assert!(report.contains(&kind));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse("").unwrap();
    let s = run_experiment(&cfg, Some(Pipeline::SelfTest), dir.path()).unwrap();
    let body = fs::read_to_string(dir.path().join("selftest.txt")).unwrap();
    assert!(!body.contains("FAIL"), "{body}");
    assert!(s.notes.iter().any(|n| n.ends_with("failed=0")));
}

#[test]
fn dyadic_probe_writes_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse("pipeline = dyadic-probe\n[dyadic]\nj = 1, 2\ntimes = 1, 10\n").unwrap();
    run_experiment(&cfg, None, dir.path()).unwrap();
    let mut r = csv::Reader::from_path(dir.path().join("dyadic_probe.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!(row[4].parse::<f64>().unwrap() <= 10.0);
    }
}
