//! Oscillatory integrals ∫ e^{−itφ(z)} a(z) dz over the energy variable, integration by parts
//! near the threshold, smooth dyadic partitions and the dyadic kernel probe.

use crate::algebra::Mat2;
use crate::error::{Error, Result};
use crate::freedirac::{free_jump_offset, Branch, DiracParams};
use crate::quadrature::{graded_edges, limit_panel_length, uniform_edges, NestedRule, Rule};
use crate::specfun::Sign;
use num_complex::Complex64 as C64;
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

/// Value and first two derivatives of an amplitude at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: C64,
    pub d1: C64,
    pub d2: C64,
}

impl Jet {
    pub fn new(value: C64, d1: C64, d2: C64) -> Self {
        Jet { value, d1, d2 }
    }

    pub fn real(value: f64, d1: f64, d2: f64) -> Self {
        Jet::new(value.into(), d1.into(), d2.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
    Missing,
}

/// Amplitude a(z) supported in (0, support].
#[derive(Clone)]
pub struct Amplitude {
    eval: Arc<dyn Fn(f64) -> Jet + Send + Sync>,
    support: f64,
    source: DerivativeSource,
}

impl std::fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Amplitude")
            .field("support", &self.support)
            .field("source", &self.source)
            .finish()
    }
}

impl Amplitude {
    /// Amplitude with analytic derivatives.
    pub fn analytic<F>(support: f64, f: F) -> Self
    where
        F: Fn(f64) -> Jet + Send + Sync + 'static,
    {
        Amplitude {
            eval: Arc::new(f),
            support,
            source: DerivativeSource::Analytic,
        }
    }

    /// Amplitude whose derivatives are taken by central differences.
    pub fn from_values<F>(support: f64, f: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        let f = Arc::new(f);
        Amplitude {
            eval: Arc::new(move |z| {
                let h = 1e-4 * z.max(1e-3);
                let (a, b, c) = (f(z - h), f(z), f(z + h));
                Jet::new(b, (c - a) / (2.0 * h), (c - 2.0 * b + a) / (h * h))
            }),
            support,
            source: DerivativeSource::FiniteDifference,
        }
    }

    /// Amplitude without derivative information.
    pub fn values_only<F>(support: f64, f: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        Amplitude {
            eval: Arc::new(move |z| Jet::new(f(z), C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0))),
            support,
            source: DerivativeSource::Missing,
        }
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn source(&self) -> DerivativeSource {
        self.source
    }

    pub fn jet(&self, z: f64) -> Jet {
        if z >= self.support {
            return Jet::real(0.0, 0.0, 0.0);
        }
        (self.eval)(z)
    }

    pub fn value(&self, z: f64) -> C64 {
        self.jet(z).value
    }

    /// a + b, pointwise.
    pub fn sum(&self, other: &Amplitude) -> Amplitude {
        let (a, b) = (self.clone(), other.clone());
        let source = match (a.source, b.source) {
            (DerivativeSource::Missing, _) | (_, DerivativeSource::Missing) => DerivativeSource::Missing,
            (DerivativeSource::Analytic, DerivativeSource::Analytic) => DerivativeSource::Analytic,
            _ => DerivativeSource::FiniteDifference,
        };
        Amplitude {
            support: a.support.max(b.support),
            eval: Arc::new(move |z| {
                let (x, y) = (a.jet(z), b.jet(z));
                Jet::new(x.value + y.value, x.d1 + y.d1, x.d2 + y.d2)
            }),
            source,
        }
    }

    /// c·a.
    pub fn scaled(&self, c: C64) -> Amplitude {
        let a = self.clone();
        Amplitude {
            support: a.support,
            source: a.source,
            eval: Arc::new(move |z| {
                let x = a.jet(z);
                Jet::new(c * x.value, c * x.d1, c * x.d2)
            }),
        }
    }

    pub fn sample(&self, nodes: &[f64]) -> AmplitudeSample {
        let jets: Vec<Jet> = nodes.iter().map(|&z| self.jet(z)).collect();
        let have = self.source != DerivativeSource::Missing;
        AmplitudeSample {
            nodes: nodes.to_vec(),
            values: jets.iter().map(|j| j.value).collect(),
            d1: have.then(|| jets.iter().map(|j| j.d1).collect()),
            d2: have.then(|| jets.iter().map(|j| j.d2).collect()),
            source: self.source,
        }
    }
}

/// Tabulated amplitude with optional derivative samples.
#[derive(Clone, Debug)]
pub struct AmplitudeSample {
    pub nodes: Vec<f64>,
    pub values: Vec<C64>,
    pub d1: Option<Vec<C64>>,
    pub d2: Option<Vec<C64>>,
    pub source: DerivativeSource,
}

impl AmplitudeSample {
    /// Checks |a| ≤ env0 and |a'| ≤ env1 at every node.
    pub fn within_envelopes<F, G>(&self, env0: F, env1: G) -> bool
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let ok0 = self
            .nodes
            .iter()
            .zip(&self.values)
            .all(|(&z, a)| a.norm() <= env0(z));
        let ok1 = match &self.d1 {
            Some(d) => self.nodes.iter().zip(d).all(|(&z, a)| a.norm() <= env1(z)),
            None => false,
        };
        ok0 && ok1
    }
}

/// Phase functions of the energy variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phase {
    /// √(z² + m²).
    Mass { m: f64 },
    /// √(z² + m²) + sign·z·speed, with speed = r/t.
    Shifted { m: f64, speed: f64, sign: Sign },
}

impl Phase {
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Phase::Mass { m } => z.hypot(m),
            Phase::Shifted { m, speed, sign } => z.hypot(m) + sign.value() * speed * z,
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Phase::Mass { m } => z / z.hypot(m),
            Phase::Shifted { m, speed, sign } => z / z.hypot(m) + sign.value() * speed,
        }
    }

    fn max_slope(&self) -> f64 {
        match *self {
            Phase::Mass { .. } => 1.0,
            Phase::Shifted { speed, .. } => 1.0 + speed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Geometric panels towards z = 0.
    pub grade_levels: usize,
    pub max_doublings: usize,
}

impl Default for OscOptions {
    fn default() -> Self {
        OscOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            order: 16,
            grade_levels: 48,
            max_doublings: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscResult {
    pub value: C64,
    pub error_estimate: f64,
    pub nodes: usize,
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    Ok(())
}

/// Panel edges on [0, b]: geometric near 0, then uniform, no panel longer than `max_len`.
fn oscillatory_edges(b: f64, max_len: f64, levels: usize) -> Vec<f64> {
    let knee = (0.25 * b).min(max_len);
    let mut e = graded_edges(knee, levels);
    let count = ((b - knee) / max_len).ceil().max(1.0) as usize;
    e.extend_from_slice(&uniform_edges(knee, b, count)[1..]);
    limit_panel_length(&e, max_len)
}

/// ∫₀^∞ e^{−itφ(z)} a(z) dz by panel Gauss–Legendre quadrature with at least ten nodes per
/// period of tφ, doubled until two successive passes agree.
pub fn osc_integral(a: &Amplitude, t: f64, phase: Phase, opts: &OscOptions) -> Result<OscResult> {
    check_t(t)?;
    let b = a.support();
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!("amplitude support must be positive, got {b}")));
    }
    let period = 2.0 * PI / (t * phase.max_slope()).max(1e-300);
    let mut max_len = (period * opts.order as f64 / 10.0).min(b);
    let run = |len: f64| {
        let rule = Rule::on_panels(&oscillatory_edges(b, len, opts.grade_levels), opts.order);
        let mut acc = C64::new(0.0, 0.0);
        for (&z, &w) in rule.nodes.iter().zip(&rule.weights) {
            acc += a.value(z) * C64::from_polar(w, -t * phase.value(z));
        }
        (acc, rule.len())
    };
    let (mut prev, _) = run(max_len);
    for _ in 0..opts.max_doublings {
        max_len *= 0.5;
        let (cur, nodes) = run(max_len);
        let err = (cur - prev).norm();
        if err <= opts.rel_tol * cur.norm() || err <= opts.abs_tol {
            return Ok(OscResult {
                value: cur,
                error_estimate: err,
                nodes,
            });
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!(
        "oscillatory integral at t = {t} did not settle after {} doublings",
        opts.max_doublings
    )))
}

/// Split of ∫₀^∞ e^{−itλ}(z/λ)E(z) dz into the threshold boundary term and the remainder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IbpDecomposition {
    /// −i e^{−imt} E(0)/t.
    pub boundary: C64,
    /// (1/(it)) ∫ E'(z) e^{−itλ} dz, by direct quadrature.
    pub remainder: C64,
    /// ∫ e^{−itλ}(z/λ)E dz, by direct quadrature.
    pub total: C64,
    /// Rigorous bound on |remainder| from a second integration by parts split at t^{−1/2}.
    pub envelope: f64,
    /// t⁻¹∫₀^{t^{−1/2}}|E'| + t⁻²∫_{t^{−1/2}}^∞ |E'/z² + E''/z|, the bound up to constants.
    pub nominal_envelope: f64,
}

/// Integration by parts of ∫₀^∞ e^{−itλ}(z/λ)E(z) dz with λ = √(z²+m²), using
/// (z/λ)e^{−itλ} = −(1/(it)) ∂_z e^{−itλ}.
pub fn ibp_decompose(e: &Amplitude, t: f64, m: f64, opts: &OscOptions) -> Result<IbpDecomposition> {
    if e.source() == DerivativeSource::Missing {
        return Err(Error::Precondition(
            "integration by parts needs derivative samples".into(),
        ));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {m}")));
    }
    let phase = Phase::Mass { m };
    let e0 = e.value(0.0);
    let boundary = C64::new(0.0, -1.0) * C64::from_polar(1.0, -m * t) * e0 / t;

    let b = e.support();
    let weighted = {
        let e = e.clone();
        Amplitude::values_only(b, move |z| e.value(z) * z / z.hypot(m))
    };
    let total = osc_integral(&weighted, t, phase, opts)?.value;
    let deriv = {
        let e = e.clone();
        Amplitude::values_only(b, move |z| e.jet(z).d1)
    };
    let remainder = osc_integral(&deriv, t, phase, opts)?.value / C64::new(0.0, t);

    let split = t.powf(-0.5).min(b);
    let near = Rule::on_panels(&graded_edges(split, opts.grade_levels), opts.order);
    let inner: f64 = near
        .nodes
        .iter()
        .zip(&near.weights)
        .map(|(&z, &w)| w * e.jet(z).d1.norm())
        .sum();
    let mut far_edges = vec![split];
    while *far_edges.last().unwrap() < b {
        let next = (far_edges.last().unwrap() * 1.25).min(b);
        far_edges.push(next);
    }
    let far_edges = limit_panel_length(&far_edges, 0.02 * b);
    let far = Rule::on_panels(&far_edges, opts.order);
    let (mut tail, mut tail_nominal) = (0.0, 0.0);
    for (&z, &w) in far.nodes.iter().zip(&far.weights) {
        let j = e.jet(z);
        let l = z.hypot(m);
        tail += w * (j.d2 * (l / z) - j.d1 * (m * m / (z * z * l))).norm();
        tail_nominal += w * (j.d1 / (z * z) + j.d2 / z).norm();
    }
    let edge = if split < b {
        e.jet(split).d1.norm() * split.hypot(m) / split
    } else {
        0.0
    };
    Ok(IbpDecomposition {
        boundary,
        remainder,
        total,
        envelope: inner / t + (edge + tail) / (t * t),
        nominal_envelope: inner / t + tail_nominal / (t * t),
    })
}

/// Smooth step: 1 on z ≤ 1, 0 on z ≥ 2.
pub fn smooth_step(z: f64) -> f64 {
    if z <= 1.0 {
        1.0
    } else if z >= 2.0 {
        0.0
    } else {
        let (a, b) = (bump_tail(2.0 - z), bump_tail(z - 1.0));
        a / (a + b)
    }
}

/// d/dz of `smooth_step`.
pub fn smooth_step_derivative(z: f64) -> f64 {
    if z <= 1.0 || z >= 2.0 {
        return 0.0;
    }
    let (u, v) = (2.0 - z, z - 1.0);
    let (a, b) = (bump_tail(u), bump_tail(v));
    let (da, db) = (-a / (u * u), b / (v * v));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

fn bump_tail(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Smooth partition χ + Σ_{j=1}^{J} χ_j with χ = ψ(z/b) and χ_j = ψ(z/(b2^j)) − ψ(z/(b2^{j−1})).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicPartition {
    pub base: f64,
    pub j_max: usize,
}

impl DyadicPartition {
    pub fn new(base: f64, j_max: usize) -> Result<Self> {
        if !(base.is_finite() && base > 0.0) {
            return Err(Error::Validation(format!("partition base must be positive, got {base}")));
        }
        if j_max < 1 {
            return Err(Error::Validation("j_max must be at least 1".into()));
        }
        Ok(DyadicPartition { base, j_max })
    }

    fn scale(&self, j: usize) -> f64 {
        self.base * 2f64.powi(j as i32)
    }

    /// Low-energy piece χ, supported in z < 2·base.
    pub fn low(&self, z: f64) -> f64 {
        smooth_step(z.abs() / self.base)
    }

    /// χ_j, supported in base·2^{j−1} < z < base·2^{j+1}.
    pub fn piece(&self, j: usize, z: f64) -> f64 {
        if j == 0 {
            return self.low(z);
        }
        let z = z.abs();
        smooth_step(z / self.scale(j)) - smooth_step(z / self.scale(j - 1))
    }

    pub fn piece_derivative(&self, j: usize, z: f64) -> f64 {
        let z = z.abs();
        let d = |k: usize| smooth_step_derivative(z / self.scale(k)) / self.scale(k);
        if j == 0 {
            d(0)
        } else {
            d(j) - d(j - 1)
        }
    }

    /// Sum of all pieces; 1 on [0, base·2^{j_max}], 0 beyond twice that.
    pub fn total(&self, z: f64) -> f64 {
        smooth_step(z.abs() / self.scale(self.j_max))
    }

    /// Upper end of the support.
    pub fn support(&self) -> f64 {
        2.0 * self.scale(self.j_max)
    }
}

/// Partition whose pieces sum to 1 on [0, z_max].
pub fn dyadic_cutoffs(z_max: f64, j_max: usize) -> Result<DyadicPartition> {
    if !(z_max.is_finite() && z_max > 0.0) {
        return Err(Error::Validation(format!("z_max must be positive, got {z_max}")));
    }
    DyadicPartition::new(z_max / 2f64.powi(j_max as i32), j_max)
}

/// Constant C with min(1, a/b) ≤ C·log²a/log²b for all a, b > 2.
///
/// x/log²x decreases on (2, e²) and increases after, so C = (2/log²2)/(e²/4).
pub fn interpolation_constant() -> f64 {
    (2.0 / (LN_2 * LN_2)) / (std::f64::consts::E.powi(2) / 4.0)
}

/// min(1, a/b) and its logarithmic majorant C·log²a/log²b.
pub fn interpolation_pair(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a > 2.0 && b > 2.0) {
        return Err(Error::Domain(format!("interpolation needs a, b > 2, got {a}, {b}")));
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok(((a / b).min(1.0), interpolation_constant() * la * la / (lb * lb)))
}

/// Merges a t⁻¹ bound with a weighted t^{−1−ε} bound into a bound of the form
/// C·log²(⟨x⟩^{3/2}⟨y⟩^{3/2})/(ε² t log²t). Returns (min of the two inputs, merged bound).
pub fn merged_envelope(t: f64, x: [f64; 2], y: [f64; 2], eps: f64) -> Result<(f64, f64)> {
    let a = (crate::potential::weight_poly(x, 1.5) * crate::potential::weight_poly(y, 1.5)).max(2.0 + 1e-12);
    let b = t.powf(eps);
    let (lhs, rhs) = interpolation_pair(a, b)?;
    Ok((lhs / t, rhs / t))
}

/// One row of the dyadic probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub j: usize,
    pub t: f64,
    pub measured: f64,
    pub envelope: f64,
    pub error_estimate: f64,
}

/// Energy-space kernel Γ(z)(x, y) sampled on a family of point pairs.
pub trait JumpKernel {
    fn pairs(&self) -> usize;
    /// [R⁺ − R⁻](λ(z)) for every pair, above the gap.
    fn eval(&self, z: f64) -> Result<Vec<Mat2>>;
    /// Largest |x − y| over the pairs.
    fn max_distance(&self) -> f64;
}

/// Free jump at a list of offsets x − y.
pub struct FreeJump {
    pub mass: f64,
    pub offsets: Vec<[f64; 2]>,
}

impl JumpKernel for FreeJump {
    fn pairs(&self) -> usize {
        self.offsets.len()
    }

    fn eval(&self, z: f64) -> Result<Vec<Mat2>> {
        let p = DiracParams::with_branch(self.mass, z, Sign::Plus, Branch::Positive)?;
        Ok(self.offsets.iter().map(|&d| free_jump_offset(&p, d)).collect())
    }

    fn max_distance(&self) -> f64 {
        self.offsets.iter().map(|d| d[0].hypot(d[1])).fold(0.0, f64::max)
    }
}

/// min(2^{2j}, 2^{7j/2}/t).
pub fn dyadic_envelope(j: usize, t: f64) -> f64 {
    let j = j as f64;
    (2f64.powf(2.0 * j)).min(2f64.powf(3.5 * j) / t)
}

/// sup over pairs of |∫ e^{−itλ}(z/λ)χ_j(z)Γ(z) dz| for each t, with χ_j centred at 2^j.
pub fn dyadic_decay_probe<K: JumpKernel>(
    kernel: &K,
    mass: f64,
    j: usize,
    times: &[f64],
    order: usize,
) -> Result<Vec<ProbeRow>> {
    if j < 1 {
        return Err(Error::Validation("dyadic index must be ≥ 1".into()));
    }
    let part = DyadicPartition::new(1.0, j.max(1))?;
    let (lo, hi) = (2f64.powi(j as i32 - 1), 2f64.powi(j as i32 + 1));
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let omega = t_max + kernel.max_distance() + 1.0;
    let edges = limit_panel_length(&[lo, hi], PI / omega);
    let rule = NestedRule::on_panels(&edges, order);
    let mut acc = vec![vec![(Mat2::zero(), Mat2::zero()); kernel.pairs()]; times.len()];
    for k in 0..rule.len() {
        let z = rule.nodes[k];
        let l = z.hypot(mass);
        let g = kernel.eval(z)?;
        let amp = z * part.piece(j, z) / l;
        for (it, &t) in times.iter().enumerate() {
            let ph = C64::from_polar(amp, -t * l);
            for (p, gp) in g.iter().enumerate() {
                let v = gp.scale(ph);
                acc[it][p].0 += v.scale_re(rule.weights[k]);
                acc[it][p].1 += v.scale_re(rule.coarse[k]);
            }
        }
    }
    let mut rows = Vec::with_capacity(times.len());
    for (it, &t) in times.iter().enumerate() {
        let mut measured: f64 = 0.0;
        let mut err: f64 = 0.0;
        for (fine, coarse) in &acc[it] {
            measured = measured.max(fine.max_abs());
            err = err.max((*fine - *coarse).max_abs());
        }
        rows.push(ProbeRow {
            j,
            t,
            measured,
            envelope: dyadic_envelope(j, t),
            error_estimate: err,
        });
    }
    Ok(rows)
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_sums_to_one() {
        let p = dyadic_cutoffs(3.0, 5).unwrap();
        for k in 0..=3000 {
            let z = 3.0 * k as f64 / 3000.0;
            let s: f64 = (0..=5).map(|j| p.piece(j, z)).sum();
            assert!((s - 1.0).abs() < 1e-12, "z={z} s={s}");
        }
        assert_eq!(p.total(6.0), 0.0);
    }

    #[test]
    fn smooth_step_derivative_matches_difference() {
        for &z in &[1.1, 1.3, 1.5, 1.77, 1.95] {
            let h = 1e-6;
            let fd = (smooth_step(z + h) - smooth_step(z - h)) / (2.0 * h);
            assert!((fd - smooth_step_derivative(z)).abs() < 1e-6);
        }
    }

    #[test]
    fn plain_quadrature_at_t_zero() {
        let a = Amplitude::values_only(1.0, |z| C64::new(z * z, 0.0));
        let r = osc_integral(&a, 0.0, Phase::Mass { m: 1.0 }, &OscOptions::default()).unwrap();
        assert!((r.value - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn missing_derivatives_rejected() {
        let a = Amplitude::values_only(1.0, |_| C64::new(1.0, 0.0));
        assert!(matches!(
            ibp_decompose(&a, 10.0, 1.0, &OscOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn interpolation_constant_value() {
        let c = interpolation_constant();
        assert!((c - 2.253_461_3).abs() < 1e-6);
        let (l, r) = interpolation_pair(2.0 + 1e-9, std::f64::consts::E.powi(2)).unwrap();
        assert!((l - r).abs() < 1e-6);
    }
}
