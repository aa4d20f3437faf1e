//! Pipelines and on-disk artifacts.

use super::config::{ExperimentConfig, Pipeline};
use super::decay::{decay_series, DecayRun};
use super::selftest::{self, CheckResult};
use super::stats::{csv_error, fit_exponent, spread, DecayFit, SeriesField};
use crate::error::{Error, Result};
use crate::evolve::{
    relative_error, restrict_to, split_step, DenseSpectral, GaussianPacket, StoneProblem,
    StoneQuadrature,
};
use crate::grid::Grid;
use crate::oscquad::{dyadic_decay_probe, FreeJump, ProbeRow};
use crate::potential::{factorize, sample, HermitianField};
use crate::threshold::{analyze, ThresholdReport, MAX_DENSE_SIDE};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Boundedness slacks used when the pipelines grade their own output.
pub const IMPROVED_SPREAD_MAX: f64 = 5.0;
pub const FREE_GROWTH_MIN: f64 = 2.0;
pub const POLY_STAT_MAX: f64 = 10.0;

/// Classification of the configured potential, with the gap count when it is computable.
pub fn classify_config(cfg: &ExperimentConfig) -> Result<ThresholdReport> {
    let g = if cfg.grid.n() <= MAX_DENSE_SIDE {
        cfg.grid
    } else {
        cfg.classify_grid
    };
    let v = sample(&cfg.potential, &g)?;
    let analysis = analyze(&factorize(&v)?, cfg.mass, cfg.classify_tol)?;
    let mut report = analysis.report;
    report.gap_eigenvalue_count =
        Some(DenseSpectral::new(g, &v, cfg.mass)?.gap_eigenvalue_count(cfg.gap_tol));
    if g != cfg.grid {
        report.flags.push(format!("classify_grid={}x{}/L={}", g.n(), g.n(), g.half_width()));
    }
    Ok(report)
}

/// One row of the two-route comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct StoneRow {
    pub t: f64,
    pub relative_error: f64,
    pub quadrature_error: f64,
    /// ‖split-step(V) − split-step(0)‖/‖split-step(V)‖.
    pub perturbation: f64,
}

/// Stone-formula evolution of a Gaussian packet against split-step on a refined, enlarged grid.
pub fn stone_check(cfg: &ExperimentConfig) -> Result<Vec<StoneRow>> {
    let coarse = cfg.grid;
    let v = sample(&cfg.potential, &coarse)?;
    let kind = analyze(&factorize(&v)?, cfg.mass, cfg.classify_tol)?.report.kind;
    let problem = StoneProblem::new(coarse, cfg.mass, &v, Some(kind))?;
    let packet = GaussianPacket {
        center: cfg.data.centers[0],
        width: cfg.data.width,
        amplitude: 1.0,
        spinor: cfg.data.spinor,
    };
    let quad = StoneQuadrature {
        z0: cfg.z0,
        z_max: cfg.z_max,
        order: cfg.energy_order,
        smoothing: 0.0,
        ..StoneQuadrature::default()
    };
    let out = problem.evolve_packet(&packet, &cfg.stone.times, &quad)?;

    let sc = &cfg.stone;
    let fine = Grid::new(
        coarse.n() * sc.refine * sc.extend,
        coarse.half_width() * sc.extend as f64,
    )?;
    let vf = sample(&cfg.potential, &fine)?;
    let zero = HermitianField::zero(fine);
    let psi0 = packet.field(fine);
    let mut rows = Vec::new();
    for (k, &t) in sc.times.iter().enumerate() {
        let reference = restrict_to(&split_step(&psi0, &vf, cfg.mass, t, cfg.time.dt)?, &coarse)?;
        let free = restrict_to(&split_step(&psi0, &zero, cfg.mass, t, cfg.time.dt)?, &coarse)?;
        rows.push(StoneRow {
            t,
            relative_error: relative_error(&out.fields[k], &reference),
            quadrature_error: out.error_estimates[k],
            perturbation: relative_error(&free, &reference),
        });
    }
    Ok(rows)
}

/// Free dyadic pieces at the configured offsets, all j and t.
pub fn dyadic_probe(cfg: &ExperimentConfig) -> Result<Vec<ProbeRow>> {
    let kernel = FreeJump {
        mass: cfg.mass,
        offsets: cfg.dyadic.offsets.clone(),
    };
    let mut rows = Vec::new();
    for &j in &cfg.dyadic.j {
        rows.extend(dyadic_decay_probe(&kernel, cfg.mass, j, &cfg.dyadic.times, cfg.dyadic.order)?);
    }
    Ok(rows)
}

/// What a pipeline produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub pipeline: Pipeline,
    pub files: Vec<PathBuf>,
    /// Human-readable result lines, also written to the manifest.
    pub notes: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    }
}

fn fit_text(fit: &DecayFit, field: SeriesField) -> String {
    format!(
        "field={}\nexponent={:.6}\nstderr={:.6e}\nr2={:.6}\nwindow={},{}\nsamples={}\n",
        field.name(),
        fit.exponent,
        fit.stderr,
        fit.r2,
        fit.window[0],
        fit.window[1],
        fit.samples
    )
}

fn decay_notes(run: &DecayRun, notes: &mut Vec<String>) {
    notes.push(format!("spectral_route={:?}", run.route));
    notes.push(format!("gap_removed={}", run.gap_removed));
    notes.push(format!("samples={}", run.series.len()));
    if let Some((t, f)) = run.wrap {
        notes.push(format!("wrap_violation_t={t}"));
        notes.push(format!("wrap_violation_fraction={f:.3e}"));
    }
}

/// Runs `pipeline` (or the config's own) and writes artifacts under `out`.
///
/// The manifest is written last. A wrap violation still writes the partial CSV and manifest
/// before the error is returned.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    pipeline: Option<Pipeline>,
    out: &Path,
) -> Result<RunSummary> {
    let pipeline = pipeline
        .or(cfg.pipeline)
        .ok_or_else(|| Error::Usage("no pipeline given on the command line or in the config".into()))?;
    let mut o = Outputs::new(out)?;
    let mut notes = Vec::new();
    let mut deferred: Option<Error> = None;
    match pipeline {
        Pipeline::Classify => {
            let report = classify_config(cfg)?;
            notes.push(format!("kind={}", report.kind));
            o.text("threshold_report.txt", &report.to_key_value())?;
        }
        Pipeline::FreeDecay | Pipeline::PerturbedDecay => {
            let free = pipeline == Pipeline::FreeDecay;
            if !free {
                let report = classify_config(cfg)?;
                notes.push(format!("kind={}", report.kind));
                o.text("threshold_report.txt", &report.to_key_value())?;
            }
            let run = decay_series(cfg, free)?;
            decay_notes(&run, &mut notes);
            let p = o.path("decay.csv");
            run.series.write_csv(&p)?;
            let window = cfg.fit_window;
            let field = if free {
                SeriesField::SupNorm
            } else {
                SeriesField::WeightedLogRatio
            };
            let mut fit = String::new();
            match fit_exponent(&run.series, field, window) {
                Ok(f) => {
                    notes.push(format!("fit_exponent={:.4}", f.exponent));
                    fit.push_str(&fit_text(&f, field));
                }
                Err(e) => {
                    let _ = writeln!(fit, "fit_error={e}");
                }
            }
            let w = run.series.window(10.0, f64::INFINITY);
            if w.len() >= 2 {
                let st = &w.improved_stat;
                let growth = st[st.len() - 1] / st[0];
                let _ = writeln!(fit, "improved_stat_growth={growth:.6}");
                let _ = writeln!(fit, "improved_stat_spread={:.6}", spread(st));
                let _ = writeln!(fit, "poly_stat_max={:.6e}", w.poly_stat.iter().cloned().fold(0.0, f64::max));
            }
            o.text("fit.txt", &fit)?;
            deferred = run.wrap_error();
        }
        Pipeline::StoneCheck => {
            let rows = stone_check(cfg)?;
            let p = o.path("stone_check.csv");
            let mut w = csv::Writer::from_path(&p).map_err(|e| csv_error(&p, e))?;
            w.write_record(["t", "relative_error", "quadrature_error", "perturbation"])
                .map_err(|e| csv_error(&p, e))?;
            for r in &rows {
                w.write_record([
                    format!("{}", r.t),
                    format!("{:.6e}", r.relative_error),
                    format!("{:.6e}", r.quadrature_error),
                    format!("{:.6e}", r.perturbation),
                ])
                .map_err(|e| csv_error(&p, e))?;
                notes.push(format!("t={} relative_error={:.3e}", r.t, r.relative_error));
            }
            w.flush().map_err(|e| Error::io(&p, e))?;
            if let Some(r) = rows.iter().find(|r| !(r.relative_error <= cfg.stone.tol)) {
                deferred = Some(Error::NonConvergence(format!(
                    "routes disagree at t = {}: {:.3e} > {:.1e}",
                    r.t, r.relative_error, cfg.stone.tol
                )));
            }
        }
        Pipeline::DyadicProbe => {
            let rows = dyadic_probe(cfg)?;
            let p = o.path("dyadic_probe.csv");
            let mut w = csv::Writer::from_path(&p).map_err(|e| csv_error(&p, e))?;
            w.write_record(["j", "t", "measured", "envelope", "ratio", "error_estimate"])
                .map_err(|e| csv_error(&p, e))?;
            let mut worst: f64 = 0.0;
            for r in &rows {
                worst = worst.max(r.measured / r.envelope);
                w.write_record([
                    r.j.to_string(),
                    format!("{}", r.t),
                    format!("{:.6e}", r.measured),
                    format!("{:.6e}", r.envelope),
                    format!("{:.6e}", r.measured / r.envelope),
                    format!("{:.3e}", r.error_estimate),
                ])
                .map_err(|e| csv_error(&p, e))?;
            }
            w.flush().map_err(|e| Error::io(&p, e))?;
            notes.push(format!("max_ratio={worst:.4}"));
        }
        Pipeline::SelfTest => {
            let results = selftest::run_all();
            let mut body = String::new();
            for CheckResult { name, passed, detail } in &results {
                let _ = writeln!(body, "{} {name} {detail}", if *passed { "PASS" } else { "FAIL" });
            }
            o.text("selftest.txt", &body)?;
            let failed: Vec<&str> = results
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.name.as_str())
                .collect();
            notes.push(format!("checks={} failed={}", results.len(), failed.len()));
            if !failed.is_empty() {
                deferred = Some(Error::Validation(format!("selftest failures: {}", failed.join(", "))));
            }
        }
    }
    write_manifest(cfg, pipeline, &mut o, &notes)?;
    match deferred {
        Some(e) => Err(e),
        None => Ok(RunSummary {
            pipeline,
            files: o.files,
            notes,
        }),
    }
}

fn write_manifest(cfg: &ExperimentConfig, pipeline: Pipeline, o: &mut Outputs, notes: &[String]) -> Result<()> {
    let hash = hex::encode(Sha256::digest(cfg.source.as_bytes()));
    let mut m = String::new();
    let _ = writeln!(m, "pipeline={pipeline}");
    let _ = writeln!(m, "config_sha256={hash}");
    let _ = writeln!(m, "crate_version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "grid.n={}", cfg.grid.n());
    let _ = writeln!(m, "grid.L={}", cfg.grid.half_width());
    let _ = writeln!(m, "mass={}", cfg.mass);
    let _ = writeln!(m, "time.dt={}", cfg.time.dt);
    let _ = writeln!(m, "seeds=none");
    let _ = writeln!(m, "calibration.improved_spread_max={IMPROVED_SPREAD_MAX}");
    let _ = writeln!(m, "calibration.free_growth_min={FREE_GROWTH_MIN}");
    let _ = writeln!(m, "calibration.poly_stat_max={POLY_STAT_MAX}");
    for n in notes {
        let _ = writeln!(m, "result.{n}");
    }
    for f in &o.files {
        let name = f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let _ = writeln!(m, "file={name}");
    }
    let p = o.dir.join("manifest.txt");
    fs::write(&p, m).map_err(|e| Error::io(&p, e))?;
    o.files.push(p);
    Ok(())
}
