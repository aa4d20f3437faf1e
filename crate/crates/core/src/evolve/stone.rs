//! Evolution through Stone's formula: e^{−itH}P_ac applied as an energy integral of the jump
//! R_V⁺ − R_V⁻ across the continuous spectrum, with R_V from the symmetric resolvent identity.

use super::field::SpinorField;
use crate::algebra::{alpha_dot, Spinor, I};
use crate::error::{Error, Result};
use crate::freedirac::{free_jump_offset, Branch, DiracParams};
use crate::grid::Grid;
use crate::operator::{set_block, CMatrix, CVector, DiscreteOperator};
use crate::oscquad::{dyadic_cutoffs, DyadicPartition};
use crate::potential::{factorize, HermitianField};
use crate::quadrature::{gauss_legendre, graded_edges, limit_panel_length, uniform_edges, NestedRule};
use crate::specfun::{bessel_quad, Sign};
use crate::threshold::{build_dirac_resolvent_corrected_on, LocalFactorization, ThresholdKind, MAX_DENSE_SIDE};
use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Factorize, Inverse, Solve};
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Energy quadrature parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoneQuadrature {
    /// Low-energy cutoff; [0, z0] is covered by geometrically graded panels.
    pub z0: f64,
    /// The dyadic partition sums to 1 on [0, z_max] and vanishes beyond 2·z_max.
    pub z_max: f64,
    /// Fejér intervals per panel (even); the embedded half rule gives the error estimate.
    pub order: usize,
    pub low_levels: usize,
    /// Power s of the ⟨H⟩^{−s} multiplier.
    pub smoothing: f64,
}

impl Default for StoneQuadrature {
    fn default() -> Self {
        StoneQuadrature {
            z0: 0.1,
            z_max: 2.0,
            order: 12,
            low_levels: 14,
            smoothing: 0.0,
        }
    }
}

impl StoneQuadrature {
    fn validate(&self) -> Result<()> {
        if !(self.z0 > 0.0 && self.z_max > self.z0 && self.z_max.is_finite()) {
            return Err(Error::Validation(format!(
                "need 0 < z0 < z_max, got z0 = {}, z_max = {}",
                self.z0, self.z_max
            )));
        }
        if self.order < 4 || self.order % 2 != 0 {
            return Err(Error::Validation(format!(
                "quadrature order must be even and ≥ 4, got {}",
                self.order
            )));
        }
        if !(self.smoothing >= 0.0) {
            return Err(Error::Validation("smoothing power must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn partition(&self) -> Result<DyadicPartition> {
        let j_max = (self.z_max / self.z0).log2().ceil().max(1.0) as usize;
        dyadic_cutoffs(self.z_max, j_max)
    }

    /// Nodes resolving e^{−itλ} up to |t| = t_max against spatial oscillation up to r_max.
    pub fn rule(&self, t_max: f64, r_max: f64) -> Result<NestedRule> {
        self.validate()?;
        let top = self.partition()?.support();
        let omega = t_max.abs() + r_max + 1.0;
        let mut edges = graded_edges(self.z0, self.low_levels);
        let count = ((top - self.z0) * omega / (2.0 * PI)).ceil().max(1.0) as usize;
        edges.extend_from_slice(&uniform_edges(self.z0, top, count)[1..]);
        let edges = limit_panel_length(&edges, 2.0 * PI / omega);
        Ok(NestedRule::on_panels(&edges, self.order))
    }

    /// (z/|λ|)·Σχ_j(z)·(1 + λ²)^{−s/2}.
    fn energy_weight(&self, part: &DyadicPartition, z: f64, m: f64) -> f64 {
        let l = z.hypot(m);
        z / l * part.total(z) * (1.0 + l * l).powf(-0.5 * self.smoothing)
    }
}

/// A·exp(−|x − c|²/(2w²)) times a constant spinor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPacket {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
    pub spinor: Spinor,
}

impl GaussianPacket {
    pub fn field(&self, grid: Grid) -> SpinorField {
        let s = [self.spinor[0] * self.amplitude, self.spinor[1] * self.amplitude];
        SpinorField::gaussian(grid, self.center, self.width, s)
    }

    fn profile(&self, s: f64) -> f64 {
        self.amplitude * (-0.5 * s * s / (self.width * self.width)).exp()
    }

    fn polar(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r = d[0].hypot(d[1]);
        if r < 1e-14 {
            (0.0, [0.0, 0.0])
        } else {
            (r, [d[0] / r, d[1] / r])
        }
    }

    /// [R₀⁺ − R₀⁻](λ) ψ₀ at x, in closed form.
    pub fn free_jump_at(&self, p: &DiracParams, x: [f64; 2]) -> Spinor {
        let (r, e) = self.polar(x);
        let s = match p.branch {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        };
        let w2 = self.width * self.width;
        let c = 0.5 * s * 2.0 * PI * self.amplitude * w2 * (-0.5 * w2 * p.z * p.z).exp();
        let [j0, _, j1, _] = bessel_quad(p.z * r);
        let m = p.mass_term().scale_re(j0) + alpha_dot(e).scale(I * (p.z * j1));
        let out = m.apply(self.spinor);
        [out[0] * I * c, out[1] * I * c]
    }

    /// (D_m + λ)R₀^±(λ)ψ₀ at the given points.
    pub fn resolvent_at(&self, p: &DiracParams, points: &[[f64; 2]]) -> Vec<Spinor> {
        packet_resolvent(self, p, points)
    }

    /// The radial Schrödinger resolvent applied to the profile, and its ρ-derivative.
    ///
    /// Graf's addition theorem reduces ∫ H₀(z|x−y|)g(|y|)dy to
    /// 2π[H₀(zρ)∫₀^ρ J₀(zs)g(s)s ds + J₀(zρ)∫_ρ^∞ H₀(zs)g(s)s ds].
    fn radial_resolvent(&self, z: f64, sign: Sign, rho: f64, gl: &(Vec<f64>, Vec<f64>)) -> (C64, C64) {
        let sg = sign.value();
        let cap = 9.0 * self.width;
        let len = (0.5 * self.width).min(2.0 / z);
        let integrate = |a: f64, b: f64, f: &dyn Fn(f64) -> C64| -> C64 {
            if b <= a {
                return C64::new(0.0, 0.0);
            }
            let k = ((b - a) / len).ceil().max(1.0) as usize;
            let h = (b - a) / k as f64;
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..k {
                let c = a + h * (p as f64 + 0.5);
                for (x, w) in gl.0.iter().zip(&gl.1) {
                    acc += f(c + 0.5 * h * x) * (0.5 * h * w);
                }
            }
            acc
        };
        let a = integrate(0.0, rho.min(cap), &|s| C64::new(libm::j0(z * s) * self.profile(s) * s, 0.0));
        let b = integrate(rho, cap, &|s| {
            let [j0, y0, _, _] = bessel_quad(z * s);
            C64::new(j0, sg * y0) * (self.profile(s) * s)
        });
        let pref = I * (0.5 * PI * sg);
        if rho == 0.0 {
            return (pref * b, C64::new(0.0, 0.0));
        }
        let [j0, y0, j1, y1] = bessel_quad(z * rho);
        let h0 = C64::new(j0, sg * y0);
        let h1 = C64::new(j1, sg * y1);
        (pref * (h0 * a + b * j0), pref * (-z) * (h1 * a + b * j1))
    }
}

/// (D_m + λ)R₀^±ψ₀ at many points, sharing the radial integrals between equal radii.
pub(crate) fn packet_resolvent(packet: &GaussianPacket, p: &DiracParams, points: &[[f64; 2]]) -> Vec<Spinor> {
    let gl = gauss_legendre(16);
    let sign = p.schrodinger_sign();
    let mut cache: HashMap<i64, (C64, C64)> = HashMap::new();
    let mt = p.mass_term();
    points
        .iter()
        .map(|&x| {
            let (r, e) = packet.polar(x);
            let key = (r * 1e9).round() as i64;
            let (f, df) = *cache
                .entry(key)
                .or_insert_with(|| packet.radial_resolvent(p.z, sign, r, &gl));
            let m = mt.scale(f) - alpha_dot(e).scale(I * df);
            m.apply(packet.spinor)
        })
        .collect()
}

/// Factorised potential and threshold data needed by the Stone route.
pub struct StoneProblem {
    pub grid: Grid,
    pub mass: f64,
    pub factorization: LocalFactorization,
    all_cells: Vec<usize>,
}

impl StoneProblem {
    pub fn new(
        grid: Grid,
        mass: f64,
        potential: &HermitianField,
        kind: Option<ThresholdKind>,
    ) -> Result<Self> {
        match kind {
            None => {
                return Err(Error::Precondition(
                    "threshold must be classified before the Stone route".into(),
                ))
            }
            Some(ThresholdKind::HigherDegeneracy) => {
                return Err(Error::Precondition(
                    "Stone route not available at a degenerate threshold".into(),
                ))
            }
            _ => {}
        }
        if grid.n() > MAX_DENSE_SIDE {
            return Err(Error::Resource(format!(
                "Stone route limited to {MAX_DENSE_SIDE}² grids, got {}²",
                grid.n()
            )));
        }
        if potential.grid != grid {
            return Err(Error::Validation("potential and grid differ".into()));
        }
        let f = factorize(potential)?;
        Ok(StoneProblem {
            grid,
            mass,
            factorization: LocalFactorization::from_support(&f),
            all_cells: grid.all_cells(),
        })
    }

    fn support_rows(&self) -> Vec<usize> {
        self.factorization
            .cells
            .iter()
            .flat_map(|&c| [2 * c, 2 * c + 1])
            .collect()
    }

    fn m_matrix(&self, r: &CMatrix, rows: &[usize]) -> CMatrix {
        let sub = r.select(Axis(0), rows).select(Axis(1), rows);
        let mut m = crate::operator::sandwich(&self.factorization.v, &sub);
        for (k, u) in self.factorization.u.iter().enumerate() {
            m[[2 * k, 2 * k]] += u[0];
            m[[2 * k + 1, 2 * k + 1]] += u[1];
        }
        m
    }

    fn max_distance(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * self.grid.half_width()
    }

    /// [R_V⁺ − R_V⁻](λ)ψ₀ at every cell centre for one energy node.
    fn packet_jump(&self, packet: &GaussianPacket, z: f64, branch: Branch) -> Result<CVector> {
        let n = self.grid.cells();
        let points: Vec<[f64; 2]> = (0..n).map(|k| self.grid.point(k)).collect();
        let pp = DiracParams::with_branch(self.mass, z, Sign::Plus, branch)?;
        let mut out = Array1::zeros(2 * n);
        for (k, x) in points.iter().enumerate() {
            let j = packet.free_jump_at(&pp, *x);
            out[2 * k] = j[0];
            out[2 * k + 1] = j[1];
        }
        if self.factorization.cells.is_empty() {
            return Ok(out);
        }
        let pm = DiracParams::with_branch(self.mass, z, Sign::Minus, branch)?;
        let r = build_dirac_resolvent_corrected_on(&pp, &self.grid, &self.all_cells)?;
        let rows = self.support_rows();
        let lu = self.m_matrix(&r, &rows).factorize()?;
        let cells = &self.factorization.cells;
        let sup_points: Vec<[f64; 2]> = cells.iter().map(|&c| self.grid.point(c)).collect();
        let apply_v = |vals: &[Spinor]| -> CVector {
            let mut b = Array1::zeros(2 * cells.len());
            for (k, s) in vals.iter().enumerate() {
                let y = self.factorization.v[k].apply(*s);
                b[2 * k] = y[0];
                b[2 * k + 1] = y[1];
            }
            b
        };
        let lift = |y: &CVector| -> CVector {
            let mut x = Array1::zeros(2 * n);
            for (k, &c) in cells.iter().enumerate() {
                let s = self.factorization.v[k].adjoint().apply([y[2 * k], y[2 * k + 1]]);
                x[2 * c] = s[0];
                x[2 * c + 1] = s[1];
            }
            x
        };
        let yp = lu.solve(&apply_v(&packet_resolvent(packet, &pp, &sup_points)))?;
        // M⁻ = (M⁺)ᴴ and R⁻ = (R⁺)ᴴ on the sample space
        let ym = lu.solve_h(&apply_v(&packet_resolvent(packet, &pm, &sup_points)))?;
        let plus = r.dot(&lift(&yp));
        let minus = r.t().dot(&lift(&ym).mapv(|z| z.conj())).mapv(|z| z.conj());
        out -= &(plus - minus);
        Ok(out)
    }

    /// e^{−itH}P_ac⟨H⟩^{−s}χ(H)ψ₀ at every cell centre for a Gaussian packet ψ₀.
    pub fn evolve_packet(
        &self,
        packet: &GaussianPacket,
        times: &[f64],
        quad: &StoneQuadrature,
    ) -> Result<StoneOutput> {
        let t_max = times.iter().fold(0.0f64, |a, t| a.max(t.abs()));
        let rule = quad.rule(t_max, self.max_distance() + 3.0 * packet.width)?;
        let part = quad.partition()?;
        let dim = 2 * self.grid.cells();
        let mut fine = vec![Array1::<C64>::zeros(dim); times.len()];
        let mut coarse = fine.clone();
        for branch in [Branch::Positive, Branch::Negative] {
            for k in 0..rule.len() {
                let z = rule.nodes[k];
                let weight = quad.energy_weight(&part, z, self.mass);
                if weight == 0.0 {
                    continue;
                }
                let jump = self.packet_jump(packet, z, branch)?;
                let lambda = DiracParams::with_branch(self.mass, z, Sign::Plus, branch)?.lambda();
                for (it, &t) in times.iter().enumerate() {
                    let ph = C64::from_polar(weight, -t * lambda) / (2.0 * PI * I);
                    fine[it].scaled_add(ph * rule.weights[k], &jump);
                    if rule.coarse[k] != 0.0 {
                        coarse[it].scaled_add(ph * rule.coarse[k], &jump);
                    }
                }
            }
        }
        let mut fields = Vec::with_capacity(times.len());
        let mut errors = Vec::with_capacity(times.len());
        for (f, c) in fine.iter().zip(&coarse) {
            let nf = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nd = (f - c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            errors.push(if nf > 0.0 { nd / nf } else { nd });
            fields.push(SpinorField::from_vector(self.grid, f)?);
        }
        Ok(StoneOutput {
            times: times.to_vec(),
            fields,
            error_estimates: errors,
            nodes: 2 * rule.len(),
        })
    }

    /// Sample map of e^{−itH}P_ac⟨H⟩^{−s}χ(H) on the grid, for each t.
    pub fn kernel(&self, times: &[f64], quad: &StoneQuadrature) -> Result<Vec<DiscreteOperator>> {
        let rule = quad.rule(
            times.iter().fold(0.0f64, |a, t| a.max(t.abs())),
            self.max_distance(),
        )?;
        let part = quad.partition()?;
        let n = self.grid.cells();
        let w = self.grid.cell_area();
        let rows = self.support_rows();
        let mut acc = vec![Array2::<C64>::zeros((2 * n, 2 * n)); times.len()];
        for branch in [Branch::Positive, Branch::Negative] {
            for k in 0..rule.len() {
                let z = rule.nodes[k];
                let weight = quad.energy_weight(&part, z, self.mass);
                if weight == 0.0 {
                    continue;
                }
                let p = DiracParams::with_branch(self.mass, z, Sign::Plus, branch)?;
                let mut jump = Array2::<C64>::zeros((2 * n, 2 * n));
                for a in 0..n {
                    let xa = self.grid.point(a);
                    for b in 0..n {
                        let xb = self.grid.point(b);
                        let j = free_jump_offset(&p, [xa[0] - xb[0], xa[1] - xb[1]]).scale_re(w);
                        set_block(&mut jump, a, b, &j);
                    }
                }
                if !rows.is_empty() {
                    let r = build_dirac_resolvent_corrected_on(&p, &self.grid, &self.all_cells)?;
                    let minv = self.m_matrix(&r, &rows).inv()?;
                    let vblk = crate::operator::block_diagonal(&self.factorization.v);
                    let left = r.select(Axis(1), &rows).dot(&vblk.t().mapv(|z| z.conj()));
                    let right = vblk.dot(&r.select(Axis(0), &rows));
                    let plus = left.dot(&minv).dot(&right);
                    jump = jump - &plus + &plus.t().mapv(|z| z.conj());
                }
                let lambda = p.lambda();
                for (it, &t) in times.iter().enumerate() {
                    let ph = C64::from_polar(weight * rule.weights[k], -t * lambda) / (2.0 * PI * I);
                    acc[it].scaled_add(ph, &jump);
                }
            }
        }
        acc.into_iter()
            .map(|m| DiscreteOperator::new(m, self.grid, self.all_cells.clone()))
            .collect()
    }
}

/// Fields produced by the Stone route, with the embedded-rule error estimates.
#[derive(Clone, Debug)]
pub struct StoneOutput {
    pub times: Vec<f64>,
    pub fields: Vec<SpinorField>,
    /// Relative ℓ² difference between the full and the embedded energy rule.
    pub error_estimates: Vec<f64>,
    pub nodes: usize,
}

impl StoneOutput {
    /// Fails if any refinement disagreement exceeds `tol`.
    pub fn require(&self, tol: f64) -> Result<()> {
        for (t, e) in self.times.iter().zip(&self.error_estimates) {
            if !(*e <= tol) {
                return Err(Error::NonConvergence(format!(
                    "Stone quadrature at t = {t}: refinement disagreement {e:.3e} > {tol:.1e}"
                )));
            }
        }
        Ok(())
    }
}

/// Samples of `field` on the cell centres of a coarser grid whose centres are fine centres.
pub fn restrict_to(field: &SpinorField, coarse: &Grid) -> Result<SpinorField> {
    let fine = field.grid;
    let mut out = SpinorField::zeros(*coarse);
    for k in 0..coarse.cells() {
        let x = coarse.point(k);
        let ix = ((x[0] + fine.half_width()) / fine.spacing() - 0.5).round();
        let iy = ((x[1] + fine.half_width()) / fine.spacing() - 0.5).round();
        let ok = ix >= 0.0 && iy >= 0.0 && (ix as usize) < fine.n() && (iy as usize) < fine.n();
        let idx = iy as usize * fine.n() + ix as usize;
        if !ok || {
            let p = fine.point(idx);
            (p[0] - x[0]).abs() + (p[1] - x[1]).abs() > 1e-9 * fine.spacing()
        } {
            return Err(Error::Validation(format!(
                "coarse centre ({}, {}) is not a fine-grid centre",
                x[0], x[1]
            )));
        }
        out.set(k, field.at(idx));
    }
    Ok(out)
}

/// Relative ℓ² distance ‖a − b‖/‖b‖.
pub fn relative_error(a: &SpinorField, b: &SpinorField) -> f64 {
    a.sub(b).norm_l2() / b.norm_l2()
}
