//! Decay measurements: evolve smoothed, ac-projected bump data and record weighted norms.

use super::config::ExperimentConfig;
use super::stats::{poly_statistic, DecaySeries};
use crate::error::{Error, Result};
use crate::evolve::{
    pac_project, smooth_power, step_count, DenseSpectral, EvolutionConfig, FreePropagator, Method,
    Smoothing, SpinorField, SplitStepper,
};
use crate::potential::{sample, weight_log, HermitianField};
use crate::threshold::MAX_DENSE_SIDE;
use rayon::prelude::*;

/// How P_ac and ⟨H⟩^{−s} were realised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralRoute {
    /// Dense diagonalisation of H on the run grid.
    Dense,
    /// Free multiplier; the absence of gap eigenvalues is checked on the coarse classify grid.
    FreeMultiplier,
}

#[derive(Clone, Debug)]
pub struct DecayRun {
    pub series: DecaySeries,
    /// First (t, boundary mass fraction) beyond the wrap threshold; the series stops before it.
    pub wrap: Option<(f64, f64)>,
    pub gap_removed: usize,
    pub route: SpectralRoute,
}

impl DecayRun {
    pub fn wrap_error(&self) -> Option<Error> {
        self.wrap
            .map(|(t, fraction)| Error::WrapViolation { t, fraction })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Main,
    Poly,
}

struct Track {
    center: [f64; 2],
    role: Role,
    data: SpinorField,
    /// ‖w²ψ0‖₁ for Main tracks, ‖ψ0‖₁ for Poly tracks.
    norm: f64,
}

struct Sample {
    sup: f64,
    value: f64,
}

fn w2(x: [f64; 2]) -> f64 {
    weight_log(x).powi(2)
}

/// Gap eigenvalue count of H on the coarse classify grid.
pub fn coarse_gap_count(cfg: &ExperimentConfig) -> Result<usize> {
    let g = cfg.classify_grid;
    let v = sample(&cfg.potential, &g)?;
    Ok(DenseSpectral::new(g, &v, cfg.mass)?.gap_eigenvalue_count(cfg.gap_tol))
}

/// Runs the free (`free = true`) or perturbed evolution described by `cfg`.
pub fn decay_series(cfg: &ExperimentConfig, free: bool) -> Result<DecayRun> {
    let grid = cfg.grid;
    let times = cfg.sample_times();
    if times.is_empty() {
        return Err(Error::Validation("no sample times in (2, t_max]".into()));
    }
    let potential = if free || cfg.potential.is_zero() {
        HermitianField::zero(grid)
    } else {
        sample(&cfg.potential, &grid)?
    };
    let perturbed = !potential.is_zero();
    if perturbed {
        let ec = EvolutionConfig {
            dt: cfg.time.dt,
            t_max: cfg.time.t_max,
            smoothing: cfg.smoothing,
            gap_tol: cfg.gap_tol,
            method: Method::SplitStep,
        };
        if !ec.resolves(&grid, cfg.mass) {
            return Err(Error::Validation(format!(
                "dt = {} does not resolve the grid frequencies",
                cfg.time.dt
            )));
        }
    }

    let dense = if perturbed && grid.n() <= MAX_DENSE_SIDE {
        Some(DenseSpectral::new(grid, &potential, cfg.mass)?)
    } else {
        None
    };
    let route = if dense.is_some() {
        SpectralRoute::Dense
    } else {
        SpectralRoute::FreeMultiplier
    };
    if perturbed && dense.is_none() {
        let count = coarse_gap_count(cfg)?;
        if count > 0 {
            return Err(Error::Precondition(format!(
                "{count} gap eigenvalues on the classify grid; ac projection needs n ≤ {MAX_DENSE_SIDE}"
            )));
        }
    }

    let mut gap_removed = 0;
    let mut tracks = Vec::new();
    for &c in &cfg.data.centers {
        let raw = SpinorField::gaussian(grid, c, cfg.data.width, cfg.data.spinor);
        let projected = match &dense {
            Some(spec) => {
                let p = pac_project(spec, &raw, cfg.gap_tol)?;
                gap_removed = p.removed;
                p.field
            }
            None => raw,
        };
        let smooth = |s: f64| match &dense {
            Some(spec) => smooth_power(Smoothing::Dense(spec), s, &projected),
            None => smooth_power(Smoothing::Free { mass: cfg.mass }, s, &projected),
        };
        let main = smooth(cfg.smoothing)?;
        let norm = main.weighted_l1(w2);
        tracks.push(Track {
            center: c,
            role: Role::Main,
            data: main,
            norm,
        });
        if let Some(ps) = cfg.poly_smoothing.filter(|&ps| ps != cfg.smoothing) {
            let data = smooth(ps)?;
            let norm = data.weighted_l1(|_| 1.0);
            tracks.push(Track {
                center: c,
                role: Role::Poly,
                data,
                norm,
            });
        }
    }
    for t in &tracks {
        if !(t.norm > 0.0 && t.norm.is_finite()) {
            return Err(Error::Validation(format!(
                "initial data at center {:?} vanish after projection and smoothing",
                t.center
            )));
        }
    }

    let results: Vec<Result<(Vec<Sample>, Vec<f64>, Option<(f64, f64)>)>> = tracks
        .par_iter()
        .map(|tr| run_track(cfg, tr, &potential, &times, perturbed))
        .collect();
    let mut per_track = Vec::with_capacity(results.len());
    for r in results {
        per_track.push(r?);
    }

    let valid = per_track.iter().map(|r| r.0.len()).min().unwrap_or(0);
    let wrap = per_track
        .iter()
        .filter_map(|r| r.2)
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let has_poly = tracks.iter().any(|t| t.role == Role::Poly);
    let mut series = DecaySeries::default();
    for k in 0..valid {
        let t = times[k];
        let mut sup = None;
        let mut ratio: f64 = 0.0;
        let mut poly: f64 = 0.0;
        for (tr, (samples, polys, _)) in tracks.iter().zip(&per_track) {
            match tr.role {
                Role::Main => {
                    sup.get_or_insert(samples[k].sup);
                    ratio = ratio.max(samples[k].value);
                    if !has_poly {
                        poly = poly.max(polys[k]);
                    }
                }
                Role::Poly => poly = poly.max(polys[k]),
            }
        }
        series.push(t, sup.unwrap_or(0.0), ratio, poly);
    }
    Ok(DecayRun {
        series,
        wrap,
        gap_removed,
        route,
    })
}

type TrackOutput = (Vec<Sample>, Vec<f64>, Option<(f64, f64)>);

fn run_track(
    cfg: &ExperimentConfig,
    tr: &Track,
    potential: &HermitianField,
    times: &[f64],
    perturbed: bool,
) -> Result<TrackOutput> {
    let grid = cfg.grid;
    let mut samples = Vec::with_capacity(times.len());
    let mut polys = Vec::with_capacity(times.len());
    let mut stepper = if perturbed {
        Some(SplitStepper::new(grid, cfg.mass, potential, cfg.time.dt)?)
    } else {
        None
    };
    let mut free = FreePropagator::new(grid, cfg.mass);
    let mut psi = tr.data.clone();
    let mut t_now = 0.0;
    for &t in times {
        let field = match stepper.as_mut() {
            Some(st) => {
                let steps = step_count(t, cfg.time.dt)? - step_count(t_now, cfg.time.dt)?;
                st.advance(&mut psi, steps)?;
                t_now = t;
                psi.clone()
            }
            None => free.evolve(&tr.data, t)?,
        };
        let fraction = field.boundary_mass_fraction(cfg.wrap_band);
        if fraction > cfg.wrap_threshold {
            return Ok((samples, polys, Some((t, fraction))));
        }
        let poly_norm = match tr.role {
            Role::Main => tr.data.weighted_l1(|_| 1.0),
            Role::Poly => tr.norm,
        };
        polys.push(poly_statistic(&field, poly_norm, tr.center, t, cfg.eps)?);
        samples.push(Sample {
            sup: field.sup_norm(),
            value: field.weighted_sup(w2) / tr.norm,
        });
    }
    Ok((samples, polys, None))
}
