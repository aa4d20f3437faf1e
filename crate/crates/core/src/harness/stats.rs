//! Decay series, log-log fits and the improved/polynomial decay statistics.

use crate::error::{Error, Result};
use crate::evolve::SpinorField;
use crate::potential::{weight_log, weight_poly};

/// Sampled decay measurements of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    /// ‖ψ(t)‖_∞ for the data at the first center.
    pub sup_norm: Vec<f64>,
    /// max over centers of ‖w⁻²ψ(t)‖_∞ / ‖w²ψ(0)‖₁.
    pub weighted_log_ratio: Vec<f64>,
    /// t·log²t·weighted_log_ratio.
    pub improved_stat: Vec<f64>,
    /// Kernel proxy over the two-term polynomial envelope, max over centers.
    pub poly_stat: Vec<f64>,
}

impl DecaySeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, sup: f64, ratio: f64, poly: f64) {
        self.times.push(t);
        self.sup_norm.push(sup);
        self.weighted_log_ratio.push(ratio);
        self.improved_stat.push(improved_value(t, ratio));
        self.poly_stat.push(poly);
    }

    pub fn column(&self, field: SeriesField) -> &[f64] {
        match field {
            SeriesField::SupNorm => &self.sup_norm,
            SeriesField::WeightedLogRatio => &self.weighted_log_ratio,
            SeriesField::ImprovedStat => &self.improved_stat,
            SeriesField::PolyStat => &self.poly_stat,
        }
    }

    /// Entries finite and positive, times increasing and > 2.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        for f in SeriesField::ALL {
            if self.column(f).len() != n {
                return Err(Error::Validation(format!("column {} has wrong length", f.name())));
            }
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("sample times must increase".into()));
        }
        if self.times.iter().any(|&t| !(t > 2.0 && t.is_finite())) {
            return Err(Error::Validation("sample times must exceed 2".into()));
        }
        for f in SeriesField::ALL {
            if let Some(v) = self.column(f).iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::Validation(format!(
                    "column {} has non-positive or non-finite entry {v}",
                    f.name()
                )));
            }
        }
        Ok(())
    }

    /// Samples with t in [lo, hi].
    pub fn window(&self, lo: f64, hi: f64) -> DecaySeries {
        let mut out = DecaySeries::default();
        for k in 0..self.len() {
            let t = self.times[k];
            if t >= lo && t <= hi {
                out.times.push(t);
                out.sup_norm.push(self.sup_norm[k]);
                out.weighted_log_ratio.push(self.weighted_log_ratio[k]);
                out.improved_stat.push(self.improved_stat[k]);
                out.poly_stat.push(self.poly_stat[k]);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["t", "sup_norm", "weighted_log_ratio", "improved_stat", "poly_stat"])
            .map_err(|e| csv_error(path, e))?;
        for k in 0..self.len() {
            let row = [
                format!("{:.6}", self.times[k]),
                format!("{:.10e}", self.sup_norm[k]),
                format!("{:.10e}", self.weighted_log_ratio[k]),
                format!("{:.10e}", self.improved_stat[k]),
                format!("{:.10e}", self.poly_stat[k]),
            ];
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn csv_error(path: &std::path::Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesField {
    SupNorm,
    WeightedLogRatio,
    ImprovedStat,
    PolyStat,
}

impl SeriesField {
    pub const ALL: [SeriesField; 4] = [
        SeriesField::SupNorm,
        SeriesField::WeightedLogRatio,
        SeriesField::ImprovedStat,
        SeriesField::PolyStat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesField::SupNorm => "sup_norm",
            SeriesField::WeightedLogRatio => "weighted_log_ratio",
            SeriesField::ImprovedStat => "improved_stat",
            SeriesField::PolyStat => "poly_stat",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub stderr: f64,
    pub window: [f64; 2],
    pub r2: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares slope of log(field) against log t over the window.
pub fn fit_exponent(series: &DecaySeries, field: SeriesField, window: [f64; 2]) -> Result<DecayFit> {
    let [lo, hi] = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Validation(format!("invalid fit window [{lo}, {hi}]")));
    }
    let (first, last) = match (series.times.first(), series.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Validation("empty series".into())),
    };
    let slack = 1e-9 * hi;
    if lo < first - slack || hi > last + slack {
        return Err(Error::Validation(format!(
            "fit window [{lo}, {hi}] extends beyond sampled range [{first}, {last}]"
        )));
    }
    let ys = series.column(field);
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(ys)
        .filter(|(t, _)| **t >= lo - slack && **t <= hi + slack)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Validation(format!(
            "fit needs at least {MIN_FIT_SAMPLES} samples in window, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::Validation(format!("{} has non-positive samples", field.name())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(DecayFit {
        exponent: slope,
        stderr,
        window,
        r2,
        samples: pts.len(),
    })
}

fn improved_value(t: f64, ratio: f64) -> f64 {
    let l = t.ln();
    t * l * l * ratio
}

/// t·log²t·ratio for every sample with t > 2; earlier samples are dropped.
pub fn improved_statistic(series: &DecaySeries) -> Vec<f64> {
    series
        .times
        .iter()
        .zip(&series.weighted_log_ratio)
        .filter(|(t, _)| **t > 2.0)
        .map(|(&t, &r)| improved_value(t, r))
        .collect()
}

/// w(x)w(y)/(t log²t) + ⟨x⟩^{3/2}⟨y⟩^{3/2}/t^{1+ε}.
pub fn poly_envelope(t: f64, x: [f64; 2], y: [f64; 2], eps: f64) -> f64 {
    let l = t.ln();
    weight_log(x) * weight_log(y) / (t * l * l)
        + weight_poly(x, 1.5) * weight_poly(y, 1.5) / t.powf(1.0 + eps)
}

/// max over x of |ψ(t, x)| / (data_l1 · envelope(t, x, center)).
pub fn poly_statistic(
    field: &SpinorField,
    data_l1: f64,
    center: [f64; 2],
    t: f64,
    eps: f64,
) -> Result<f64> {
    if !(t > 2.0) {
        return Err(Error::Domain(format!("polynomial statistic needs t > 2, got {t}")));
    }
    if !(data_l1 > 0.0 && data_l1.is_finite()) {
        return Err(Error::Validation("initial data must have positive L¹ norm".into()));
    }
    let mags = field.magnitudes();
    let g = &field.grid;
    Ok((0..g.cells())
        .map(|k| mags[k] / poly_envelope(t, g.point(k), center, eps))
        .fold(0.0, f64::max)
        / data_l1)
}

/// max/min of a positive sequence.
pub fn spread(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
    mx / mn
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> DecaySeries {
        let mut s = DecaySeries::default();
        let mut t = 2.3;
        while t < 600.0 {
            s.push(t, f(t), f(t), 1.0);
            t *= 1.15;
        }
        s
    }

    #[test]
    fn fits_known_power_laws() {
        let s = synthetic(|t| 7.0 / t);
        let f = fit_exponent(&s, SeriesField::SupNorm, [5.0, 100.0]).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!(f.stderr < 1e-10 && (f.r2 - 1.0).abs() < 1e-12);
        let s = synthetic(|t| 3.0 * t.powf(-1.25));
        let f = fit_exponent(&s, SeriesField::SupNorm, [5.0, 100.0]).unwrap();
        assert!((f.exponent + 1.25).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_extrapolation_and_short_windows() {
        let s = synthetic(|t| 1.0 / t);
        assert!(fit_exponent(&s, SeriesField::SupNorm, [1.0, 100.0]).is_err());
        assert!(fit_exponent(&s, SeriesField::SupNorm, [10.0, 1000.0]).is_err());
        assert!(fit_exponent(&s, SeriesField::SupNorm, [10.0, 12.0]).is_err());
    }

    #[test]
    fn improved_statistic_of_exact_rates() {
        let s = synthetic(|t| 1.0 / (t * t.ln().powi(2)));
        for v in improved_statistic(&s) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let s = synthetic(|t| 1.0 / t);
        let w = s.window(10.0, 500.0);
        let st = improved_statistic(&w);
        let expect = (w.times.last().unwrap().ln() / w.times[0].ln()).powi(2);
        assert!((st.last().unwrap() / st[0] - expect).abs() < 1e-12);
        assert!(((500f64.ln() / 10f64.ln()).powi(2) - 7.28).abs() < 0.01);
    }

    #[test]
    fn improved_statistic_drops_early_times() {
        let s = DecaySeries {
            times: vec![1.5, 3.0],
            weighted_log_ratio: vec![1.0, 1.0],
            ..Default::default()
        };
        assert_eq!(improved_statistic(&s).len(), 1);
    }

    #[test]
    fn poly_statistic_on_envelope_field_is_one() {
        let g = crate::Grid::new(16, 8.0).unwrap();
        let (t, eps, c) = (30.0, 0.1, [1.0, -2.0]);
        let f = SpinorField::from_fn(g, |x| {
            [num_complex::Complex64::new(poly_envelope(t, x, c, eps), 0.0), Default::default()]
        });
        let v = poly_statistic(&f, 1.0, c, t, eps).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_entries() {
        let mut s = synthetic(|t| 1.0 / t);
        assert!(s.validate().is_ok());
        s.poly_stat[3] = f64::NAN;
        assert!(s.validate().is_err());
    }
}
