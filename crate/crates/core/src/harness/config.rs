//! Experiment configuration: INI-style `key = value` text with `[section]` headers.
//!
//! Keys may be written flat (`grid.n = 64`) or inside a section (`[grid]` then `n = 64`).

use crate::algebra::{Mat2, Spinor};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::{named_profile, PotentialSpec};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    Classify,
    FreeDecay,
    PerturbedDecay,
    StoneCheck,
    DyadicProbe,
    SelfTest,
}

impl Pipeline {
    pub const ALL: [Pipeline; 6] = [
        Pipeline::Classify,
        Pipeline::FreeDecay,
        Pipeline::PerturbedDecay,
        Pipeline::StoneCheck,
        Pipeline::DyadicProbe,
        Pipeline::SelfTest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Classify => "classify",
            Pipeline::FreeDecay => "free-decay",
            Pipeline::PerturbedDecay => "perturbed-decay",
            Pipeline::StoneCheck => "stone-check",
            Pipeline::DyadicProbe => "dyadic-probe",
            Pipeline::SelfTest => "selftest",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Pipeline::ALL.iter().map(|p| p.name()).collect();
                Error::Usage(format!("unknown pipeline '{s}', expected one of {}", names.join(" | ")))
            })
    }
}

/// Parsed key/value pairs, keyed by `section.key`.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    text: String,
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| Error::Config {
            line: e.line,
            msg: e.msg.to_string(),
        })?;
        let mut values = BTreeMap::new();
        for (section, props) in ini.iter() {
            for (k, v) in props.iter() {
                let key = match section {
                    Some(s) => format!("{}.{}", s.trim(), k.trim()),
                    None => k.trim().to_string(),
                };
                if values.insert(key.clone(), v.trim().to_string()).is_some() {
                    return Err(Error::Config {
                        line: line_of(text, &key),
                        msg: format!("duplicate key '{key}'"),
                    });
                }
            }
        }
        Ok(RawConfig {
            text: text.to_string(),
            values,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|s| s.as_str())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn err(&self, key: &str, msg: String) -> Error {
        Error::Config {
            line: line_of(&self.text, key),
            msg: format!("{key}: {msg}"),
        }
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.err(key, format!("cannot parse '{v}': {e}"))),
        }
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// Comma-separated reals.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_reals(v)
                .map(Some)
                .map_err(|m| self.err(key, m)),
        }
    }

    /// Semicolon-separated points `x,y; x,y`.
    pub fn points(&self, key: &str) -> Result<Option<Vec<[f64; 2]>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for part in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let r = parse_reals(part).map_err(|m| self.err(key, m))?;
            if r.len() != 2 {
                return Err(self.err(key, format!("point '{part}' needs two coordinates")));
            }
            out.push([r[0], r[1]]);
        }
        Ok(Some(out))
    }
}

fn parse_reals(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("cannot parse '{s}': {e}")))
        .collect()
}

/// Best-effort source line of a `section.key` entry, 0 when not found.
fn line_of(text: &str, key: &str) -> usize {
    let (section, name) = match key.rsplit_once('.') {
        Some((s, n)) => (Some(s), n),
        None => (None, key),
    };
    let mut current: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') && l.ends_with(']') {
            current = Some(l[1..l.len() - 1].trim().to_string());
            continue;
        }
        let Some((k, _)) = l.split_once('=') else {
            continue;
        };
        let k = k.trim();
        if k == key && current.is_none() {
            return i + 1;
        }
        if k == name && current.as_deref() == section {
            return i + 1;
        }
    }
    0
}

const KNOWN_KEYS: &[&str] = &[
    "pipeline",
    "mass",
    "grid.n",
    "grid.L",
    "potential.kind",
    "potential.amplitude",
    "potential.width",
    "potential.decay",
    "potential.profile",
    "potential.center",
    "time.dt",
    "time.t_min",
    "time.t_max",
    "time.ratio",
    "time.extra",
    "data.width",
    "data.centers",
    "data.spinor",
    "smoothing.s",
    "smoothing.poly_s",
    "cutoff.z0",
    "cutoff.z_max",
    "cutoff.order",
    "classify.tol",
    "classify.gap_tol",
    "classify.n",
    "classify.L",
    "wrap.band",
    "wrap.threshold",
    "fit.t_lo",
    "fit.t_hi",
    "stats.eps",
    "stone.times",
    "stone.refine",
    "stone.extend",
    "stone.tol",
    "dyadic.j",
    "dyadic.times",
    "dyadic.offsets",
    "dyadic.order",
];

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
    pub extra: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataConfig {
    pub width: f64,
    pub centers: Vec<[f64; 2]>,
    pub spinor: Spinor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoneConfig {
    pub times: Vec<f64>,
    /// Split-step reference grid: spacing divided by `refine`, box multiplied by `extend`.
    pub refine: usize,
    pub extend: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DyadicConfig {
    pub j: Vec<usize>,
    pub times: Vec<f64>,
    pub offsets: Vec<[f64; 2]>,
    pub order: usize,
}

/// Validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub pipeline: Option<Pipeline>,
    pub grid: Grid,
    pub mass: f64,
    pub potential: PotentialSpec,
    pub time: TimeConfig,
    pub data: DataConfig,
    pub smoothing: f64,
    pub poly_smoothing: Option<f64>,
    pub z0: f64,
    pub z_max: f64,
    pub energy_order: usize,
    pub classify_tol: f64,
    pub gap_tol: f64,
    pub classify_grid: Grid,
    pub wrap_band: f64,
    pub wrap_threshold: f64,
    pub fit_window: [f64; 2],
    pub eps: f64,
    pub stone: StoneConfig,
    pub dyadic: DyadicConfig,
    /// Exact source text, hashed into the manifest.
    pub source: String,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        for k in raw.keys() {
            if !KNOWN_KEYS.contains(&k) {
                return Err(raw.err(k, "unknown key".into()));
            }
        }
        let pipeline = raw.get("pipeline").map(Pipeline::from_str).transpose()?;
        let n: usize = raw.or("grid.n", 64)?;
        let half: f64 = raw.or("grid.L", 16.0)?;
        let grid = Grid::new(n, half).map_err(|e| raw.err("grid.n", e.to_string()))?;
        let mass: f64 = raw.or("mass", 1.0)?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(raw.err("mass", format!("must be positive, got {mass}")));
        }

        let profile_name = raw.get("potential.profile").unwrap_or("identity");
        let profile: Mat2 = named_profile(profile_name)
            .ok_or_else(|| raw.err("potential.profile", format!("unknown profile '{profile_name}'")))?;
        let amplitude: f64 = raw.or("potential.amplitude", 0.0)?;
        let mut potential = match raw.get("potential.kind").unwrap_or("none") {
            "none" | "zero" => PotentialSpec::zero(),
            "gaussian" => PotentialSpec::gaussian(amplitude, raw.or("potential.width", 1.0)?, profile),
            "poly" => PotentialSpec {
                width: raw.or("potential.width", 1.0)?,
                ..PotentialSpec::poly(amplitude, raw.or("potential.decay", 4.0)?, profile)
            },
            other => {
                return Err(raw.err(
                    "potential.kind",
                    format!("unknown kind '{other}', expected none | gaussian | poly"),
                ))
            }
        };
        if let Some(c) = raw.list("potential.center")? {
            if c.len() != 2 {
                return Err(raw.err("potential.center", "needs two coordinates".into()));
            }
            potential = potential.with_center([c[0], c[1]]);
        }
        potential
            .validate()
            .map_err(|e| raw.err("potential.kind", e.to_string()))?;

        let time = TimeConfig {
            dt: raw.or("time.dt", 0.1)?,
            t_min: raw.or("time.t_min", 2.0)?,
            t_max: raw.or("time.t_max", 50.0)?,
            ratio: raw.or("time.ratio", 1.15)?,
            extra: raw.list("time.extra")?.unwrap_or_default(),
        };
        if !(time.dt > 0.0 && time.dt.is_finite()) {
            return Err(raw.err("time.dt", format!("must be positive, got {}", time.dt)));
        }
        if !(time.t_min >= 2.0 && time.t_max > time.t_min && time.t_max.is_finite()) {
            return Err(raw.err(
                "time.t_max",
                format!("need 2 ≤ t_min < t_max, got {} and {}", time.t_min, time.t_max),
            ));
        }
        if !(time.ratio > 1.0 && time.ratio.is_finite()) {
            return Err(raw.err("time.ratio", format!("must exceed 1, got {}", time.ratio)));
        }
        if time.extra.iter().any(|&t| !(t > 2.0 && t <= time.t_max)) {
            return Err(raw.err("time.extra", "extra times must lie in (2, t_max]".into()));
        }

        let spinor = match raw.list("data.spinor")? {
            None => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            Some(v) if v.len() == 2 => [C64::new(v[0], 0.0), C64::new(v[1], 0.0)],
            Some(v) if v.len() == 4 => [C64::new(v[0], v[1]), C64::new(v[2], v[3])],
            Some(_) => {
                return Err(raw.err("data.spinor", "expects 2 reals or 4 (re, im) reals".into()))
            }
        };
        if spinor[0].norm_sqr() + spinor[1].norm_sqr() == 0.0 {
            return Err(raw.err("data.spinor", "spinor must be non-zero".into()));
        }
        let data = DataConfig {
            width: raw.or("data.width", 1.0)?,
            centers: raw.points("data.centers")?.unwrap_or_else(|| vec![[0.0, 0.0]]),
            spinor,
        };
        if !(data.width > 0.0 && data.width.is_finite()) {
            return Err(raw.err("data.width", "must be positive".into()));
        }
        if data.centers.is_empty() {
            return Err(raw.err("data.centers", "needs at least one center".into()));
        }

        let smoothing: f64 = raw.or("smoothing.s", 0.0)?;
        let poly_smoothing: Option<f64> = raw.parsed("smoothing.poly_s")?;
        for (k, s) in [("smoothing.s", Some(smoothing)), ("smoothing.poly_s", poly_smoothing)] {
            if let Some(s) = s {
                if !(s >= 0.0 && s.is_finite()) {
                    return Err(raw.err(k, format!("must be ≥ 0, got {s}")));
                }
            }
        }

        let cn: usize = raw.or("classify.n", n.min(24))?;
        let cl: f64 = raw.or("classify.L", if n <= 48 { half } else { 6.0 })?;
        let classify_grid = Grid::new(cn, cl).map_err(|e| raw.err("classify.n", e.to_string()))?;

        let fit_window = [
            raw.or("fit.t_lo", time.t_min)?,
            raw.or("fit.t_hi", time.t_max)?,
        ];
        if !(fit_window[0] < fit_window[1]) {
            return Err(raw.err("fit.t_hi", "fit window is empty".into()));
        }

        let stone = StoneConfig {
            times: raw.list("stone.times")?.unwrap_or_else(|| vec![5.0, 10.0, 20.0]),
            refine: raw.or("stone.refine", 3)?,
            extend: raw.or("stone.extend", 6)?,
            tol: raw.or("stone.tol", 1e-2)?,
        };
        if stone.refine % 2 == 0 || stone.extend == 0 {
            return Err(raw.err(
                "stone.refine",
                "refine must be odd and extend ≥ 1 so that cell centres nest".into(),
            ));
        }
        if stone.times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(raw.err("stone.times", "times must be finite and ≥ 0".into()));
        }

        let j: Vec<usize> = match raw.list("dyadic.j")? {
            None => vec![1, 2, 3],
            Some(v) => {
                if v.iter().any(|&x| x < 1.0 || x.fract() != 0.0) {
                    return Err(raw.err("dyadic.j", "indices must be integers ≥ 1".into()));
                }
                v.iter().map(|&x| x as usize).collect()
            }
        };
        let dyadic = DyadicConfig {
            j,
            times: raw
                .list("dyadic.times")?
                .unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]),
            offsets: raw
                .points("dyadic.offsets")?
                .unwrap_or_else(|| vec![[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]]),
            order: raw.or("dyadic.order", 8)?,
        };

        let cfg = ExperimentConfig {
            pipeline,
            grid,
            mass,
            potential,
            time,
            data,
            smoothing,
            poly_smoothing,
            z0: raw.or("cutoff.z0", 0.1)?,
            z_max: raw.or("cutoff.z_max", 2.0)?,
            energy_order: raw.or("cutoff.order", 8)?,
            classify_tol: raw.or("classify.tol", 1e-6)?,
            gap_tol: raw.or("classify.gap_tol", 1e-6)?,
            classify_grid,
            wrap_band: raw.or("wrap.band", 0.05)?,
            wrap_threshold: raw.or("wrap.threshold", 1e-6)?,
            fit_window,
            eps: raw.or("stats.eps", 0.1)?,
            stone,
            dyadic,
            source: raw.text().to_string(),
        };
        if !(cfg.classify_tol > 0.0) {
            return Err(raw.err("classify.tol", "must be positive".into()));
        }
        if !(cfg.wrap_band > 0.0 && cfg.wrap_band < 0.5) {
            return Err(raw.err("wrap.band", "must lie in (0, 0.5)".into()));
        }
        if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
            return Err(raw.err("stats.eps", "must lie in (0, 1)".into()));
        }
        Ok(cfg)
    }

    /// Geometric samples t_min·ratio^k (k ≥ 1) up to t_max, t_max itself and the extra times,
    /// snapped to multiples of dt, sorted and deduplicated.
    pub fn sample_times(&self) -> Vec<f64> {
        let tc = &self.time;
        let mut raw = Vec::new();
        let mut t = tc.t_min * tc.ratio;
        while t <= tc.t_max * (1.0 + 1e-12) {
            raw.push(t);
            t *= tc.ratio;
        }
        raw.extend_from_slice(&tc.extra);
        raw.push(tc.t_max);
        let mut out: Vec<f64> = raw
            .into_iter()
            .map(|t| ((t / tc.dt).round() * tc.dt).max(tc.dt))
            .filter(|&t| t > 2.0)
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup_by(|a, b| (*a - *b).abs() < 0.5 * tc.dt);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "pipeline = free-decay\nmass = 1.0\n\n[grid]\nn = 64\nL = 16\n\n[data]\ncenters = 0,0; 2.5,-1\nspinor = 1,0\n\n[time]\ndt = 0.1\nt_max = 40\nextra = 10, 25.05\n";

    #[test]
    fn parses_sections_and_lists() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.pipeline, Some(Pipeline::FreeDecay));
        assert_eq!(c.grid.n(), 64);
        assert_eq!(c.data.centers, vec![[0.0, 0.0], [2.5, -1.0]]);
        assert_eq!(c.time.extra, vec![10.0, 25.05]);
    }

    #[test]
    fn flat_and_sectioned_keys_agree() {
        let a = ExperimentConfig::parse("grid.n = 32\ngrid.L = 8\n").unwrap();
        let b = ExperimentConfig::parse("[grid]\nn = 32\nL = 8\n").unwrap();
        assert_eq!(a.grid, b.grid);
    }

    #[test]
    fn sample_times_are_snapped_and_sorted() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let t = c.sample_times();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(t.iter().all(|&x| x > 2.0 && x <= 40.0 + 1e-9));
        assert!(t.iter().all(|&x| ((x / 0.1).round() * 0.1 - x).abs() < 1e-9));
        assert!(t.iter().any(|&x| (x - 10.0).abs() < 1e-9));
        assert!(t.iter().any(|&x| (x - 25.1).abs() < 1e-9));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match ExperimentConfig::parse("mass = 1\n[grid]\nn = many\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match ExperimentConfig::parse("mass = 1\nbogus = 2\n") {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("unknown key"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_pipeline_is_a_usage_error() {
        let e = ExperimentConfig::parse("pipeline = fly\n").unwrap_err();
        assert!(matches!(e, Error::Usage(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn even_refinement_rejected() {
        assert!(ExperimentConfig::parse("[stone]\nrefine = 2\n").is_err());
    }
}
