//! Discrete threshold algebra: G₀, 𝒢₀, P, Q, T, M^±(z), classification of the threshold λ = m
//! and the low-energy inversion of M^±(z).

use crate::algebra::{m11, Mat2};
use crate::error::{Error, Result};
use crate::freedirac::{
    calg0_offset, dirac_cell_average, dirac_lattice_diagonal, odd_part_correction, dirac_kernel_offset, g0_cell_average, g0_kernel, g_pm,
    Branch, DiracParams,
};
use crate::grid::Grid;
use crate::operator::{
    assemble_translation_invariant, block_diagonal, eigh_hermitian, frobenius, sandwich, CMatrix, CVector,
    DiscreteOperator,
};
use crate::potential::SpectralFactorization;
use crate::specfun::Sign;
use ndarray::{s, Array1, Array2};
use ndarray_linalg::{EigValsh, Inverse, UPLO};
use num_complex::Complex64 as C64;
use std::fmt;

/// Relative cut below which a cell's v block is treated as zero.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Largest grid side accepted by the dense threshold machinery.
pub const MAX_DENSE_SIDE: usize = 48;

fn check_grid(grid: &Grid) -> Result<()> {
    if grid.n() > MAX_DENSE_SIDE {
        return Err(Error::Resource(format!(
            "dense threshold analysis capped at {MAX_DENSE_SIDE}², got {}²",
            grid.n()
        )));
    }
    Ok(())
}

/// −(1/2π) log|x − y| with cell-averaged diagonal, promoted to ℂ².
pub fn build_g0(grid: &Grid) -> Result<DiscreteOperator> {
    build_g0_on(grid, grid.all_cells())
}

pub fn build_g0_on(grid: &Grid, cells: Vec<usize>) -> Result<DiscreteOperator> {
    check_grid(grid)?;
    let diag = Mat2::identity().scale_re(g0_cell_average(grid.spacing()));
    let m = assemble_translation_invariant(grid, &cells, diag, |d| {
        Mat2::identity().scale_re(g0_kernel(d[0].hypot(d[1])))
    });
    DiscreteOperator::new(m, *grid, cells)
}

/// Matrix-free G₀ applied to a scalar grid function (used at resolutions beyond dense limits).
pub fn apply_g0_scalar(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.spacing();
    let w = grid.cell_area();
    let span = 2 * n - 1;
    let mut table = vec![0.0; span * span];
    for dy in 0..span {
        for dx in 0..span {
            let (ox, oy) = (dx as f64 - (n - 1) as f64, dy as f64 - (n - 1) as f64);
            table[dy * span + dx] = if ox == 0.0 && oy == 0.0 {
                g0_cell_average(h)
            } else {
                g0_kernel(h * ox.hypot(oy))
            } * w;
        }
    }
    let nz: Vec<usize> = (0..f.len()).filter(|&k| f[k] != 0.0).collect();
    let mut out = vec![0.0; n * n];
    for (i, o) in out.iter_mut().enumerate() {
        let (xi, yi) = (i % n, i / n);
        let mut acc = 0.0;
        for &j in &nz {
            let (xj, yj) = (j % n, j / n);
            acc += table[(yi + n - 1 - yj) * span + (xi + n - 1 - xj)] * f[j];
        }
        *o = acc;
    }
    out
}

/// 𝒢₀ with cell-averaged log diagonal and principal-value (zero) gradient diagonal.
pub fn build_calg0(grid: &Grid, m: f64) -> Result<DiscreteOperator> {
    build_calg0_on(grid, m, grid.all_cells())
}

pub fn build_calg0_on(grid: &Grid, m: f64, cells: Vec<usize>) -> Result<DiscreteOperator> {
    check_grid(grid)?;
    check_mass(m)?;
    let diag = m11().scale_re(2.0 * m * g0_cell_average(grid.spacing()));
    let mat = assemble_translation_invariant(grid, &cells, diag, |d| calg0_offset(d, m));
    DiscreteOperator::new(mat, *grid, cells)
}

fn check_mass(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {m}")));
    }
    Ok(())
}

/// Sample map of the free Dirac resolvent boundary value on `cells`.
pub fn build_dirac_resolvent_on(
    p: &DiracParams,
    grid: &Grid,
    cells: &[usize],
) -> Result<CMatrix> {
    let diag = dirac_cell_average(p, grid.spacing())?;
    Ok(assemble_translation_invariant(grid, cells, diag, |d| {
        dirac_kernel_offset(p, d)
    }))
}

/// Sample map of the free Dirac resolvent with corrected-trapezoid weights: lattice self weight
/// for the logarithm and a central-difference stencil for the odd 1/r part. Accurate to O(h⁴)
/// on smooth densities instead of O(h²).
pub fn build_dirac_resolvent_corrected_on(
    p: &DiracParams,
    grid: &Grid,
    cells: &[usize],
) -> Result<CMatrix> {
    let h = grid.spacing();
    let diag = dirac_lattice_diagonal(p, h)?;
    let mut m = assemble_translation_invariant(grid, cells, diag, |d| dirac_kernel_offset(p, d));
    let mut pos = vec![usize::MAX; grid.cells()];
    for (k, &c) in cells.iter().enumerate() {
        pos[c] = k;
    }
    let corr = odd_part_correction(h);
    let n = grid.n() as i64;
    for (i, &c) in cells.iter().enumerate() {
        let (ix, iy) = grid.unravel(c);
        for (k, step) in [(1i64, 0i64), (0, 1)].iter().enumerate() {
            for sgn in [1i64, -1] {
                let (jx, jy) = (ix as i64 + sgn * step.0, iy as i64 + sgn * step.1);
                if jx < 0 || jy < 0 || jx >= n || jy >= n {
                    continue;
                }
                let j = pos[(jy * n + jx) as usize];
                if j == usize::MAX {
                    continue;
                }
                let b = corr[k].scale_re(sgn as f64);
                for r in 0..2 {
                    for col in 0..2 {
                        m[[2 * i + r, 2 * j + col]] += b.0[r][col];
                    }
                }
            }
        }
    }
    Ok(m)
}

/// The factorization restricted to a cell subset.
#[derive(Clone, Debug)]
pub struct LocalFactorization {
    pub grid: Grid,
    pub cells: Vec<usize>,
    pub u: Vec<[f64; 2]>,
    pub v: Vec<Mat2>,
}

impl LocalFactorization {
    /// Restrict to cells where v is not negligible.
    pub fn from_support(f: &SpectralFactorization) -> Self {
        Self::on_cells(f, f.support(SUPPORT_TOL))
    }

    pub fn on_cells(f: &SpectralFactorization, cells: Vec<usize>) -> Self {
        LocalFactorization {
            grid: f.grid,
            u: cells.iter().map(|&k| f.u[k]).collect(),
            v: cells.iter().map(|&k| f.v[k]).collect(),
            cells,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.cells.len()
    }

    pub fn u_operator(&self) -> DiscreteOperator {
        let blocks: Vec<Mat2> = self.u.iter().map(|u| Mat2::real_diag(u[0], u[1])).collect();
        DiscreteOperator {
            matrix: block_diagonal(&blocks),
            grid: self.grid,
            cells: self.cells.clone(),
        }
    }

    /// The grid function (a, c)ᵀ, i.e. the first column of v.
    pub fn phi(&self) -> CVector {
        let mut out = Array1::zeros(self.dim());
        for (k, v) in self.v.iter().enumerate() {
            out[2 * k] = v.0[0][0];
            out[2 * k + 1] = v.0[1][0];
        }
        out
    }

    /// ‖(a, c)‖² in L².
    pub fn phi_norm_sqr(&self) -> f64 {
        self.phi().iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }
}

/// P, Q and the data defining them.
#[derive(Clone, Debug)]
pub struct Projections {
    pub p: DiscreteOperator,
    pub q: DiscreteOperator,
    /// Unit vector (ℓ² normalised samples) spanning range(P); zero when degenerate.
    pub unit: CVector,
    /// ‖(a, c)‖² in L².
    pub phi_norm_sqr: f64,
    /// (a, c) vanishes identically, so P is undefined.
    pub degenerate: bool,
}

pub fn build_p_q(f: &LocalFactorization) -> Projections {
    let phi = f.phi();
    let nsq: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    let dim = f.dim();
    if nsq == 0.0 {
        return Projections {
            p: DiscreteOperator::zeros(f.grid, f.cells.clone()),
            q: DiscreteOperator::identity(f.grid, f.cells.clone()),
            unit: Array1::zeros(dim),
            phi_norm_sqr: 0.0,
            degenerate: true,
        };
    }
    let unit = phi.mapv(|z| z / nsq.sqrt());
    let mut p = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            p[[i, j]] = unit[i] * unit[j].conj();
        }
    }
    let q = Array2::eye(dim) - &p;
    Projections {
        p: DiscreteOperator::new(p, f.grid, f.cells.clone()).expect("shape"),
        q: DiscreteOperator::new(q, f.grid, f.cells.clone()).expect("shape"),
        unit,
        phi_norm_sqr: nsq * f.grid.cell_area(),
        degenerate: false,
    }
}

/// v M₁₁ v* assembled directly from the factorization.
pub fn build_v_m11_v(f: &LocalFactorization) -> DiscreteOperator {
    let dim = f.dim();
    let w = f.grid.cell_area();
    let mut k = Array2::zeros((dim, dim));
    for i in 0..f.cells.len() {
        for j in 0..f.cells.len() {
            k[[2 * i, 2 * j]] = C64::new(w, 0.0);
        }
    }
    DiscreteOperator {
        matrix: sandwich(&f.v, &k),
        grid: f.grid,
        cells: f.cells.clone(),
    }
}

/// T = U + v𝒢₀v*.
pub fn build_t(f: &LocalFactorization, calg0: &DiscreteOperator) -> Result<DiscreteOperator> {
    if calg0.grid != f.grid || calg0.cells != f.cells {
        return Err(Error::Validation(
            "factorization and 𝒢₀ live on different grids".into(),
        ));
    }
    let mut t = sandwich(&f.v, &calg0.matrix);
    for (k, u) in f.u.iter().enumerate() {
        t[[2 * k, 2 * k]] += u[0];
        t[[2 * k + 1, 2 * k + 1]] += u[1];
    }
    DiscreteOperator::new(t, f.grid, f.cells.clone())
}

/// M^±(z) = U + v R^±(λ) v*, for either spectral branch.
pub fn build_m_branch(
    p: &DiracParams,
    f: &LocalFactorization,
) -> Result<DiscreteOperator> {
    check_grid(&f.grid)?;
    let r = build_dirac_resolvent_on(p, &f.grid, &f.cells)?;
    let mut m = sandwich(&f.v, &r);
    for (k, u) in f.u.iter().enumerate() {
        m[[2 * k, 2 * k]] += u[0];
        m[[2 * k + 1, 2 * k + 1]] += u[1];
    }
    DiscreteOperator::new(m, f.grid, f.cells.clone())
}

/// M^±(z) above the gap.
pub fn build_m(z: f64, sign: Sign, f: &LocalFactorization, m: f64) -> Result<DiscreteOperator> {
    let p = DiracParams::with_branch(m, z, sign, Branch::Positive)?;
    build_m_branch(&p, f)
}

/// 𝕘^±(z) = 2m‖(a, c)‖² g^±(z).
pub fn gg(z: f64, sign: Sign, m: f64, phi_norm_sqr: f64) -> Result<C64> {
    Ok(g_pm(z, sign)? * (2.0 * m * phi_norm_sqr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdKind {
    Regular,
    SWaveResonance,
    HigherDegeneracy,
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdKind::Regular => "Regular",
            ThresholdKind::SWaveResonance => "SWaveResonance",
            ThresholdKind::HigherDegeneracy => "HigherDegeneracy",
        })
    }
}

/// Basis of the near-null space S₁.
#[derive(Clone, Debug)]
pub enum S1Basis {
    /// Constant spinors, reported when V ≡ 0.
    Constant(Vec<[C64; 2]>),
    /// Samples on the operator's cells.
    Grid(Vec<CVector>),
}

impl S1Basis {
    pub fn len(&self) -> usize {
        match self {
            S1Basis::Constant(v) => v.len(),
            S1Basis::Grid(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct ThresholdReport {
    pub kind: ThresholdKind,
    pub sigma_min: f64,
    pub s1_basis: S1Basis,
    pub t1_sigma_min: Option<f64>,
    pub gap_eigenvalue_count: Option<usize>,
    pub tol: f64,
    pub dimension: usize,
    pub flags: Vec<String>,
}

impl ThresholdReport {
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("kind={}\n", self.kind));
        s.push_str(&format!("sigma_min={:.12e}\n", self.sigma_min));
        s.push_str(&format!("tol={:.6e}\n", self.tol));
        s.push_str(&format!("s1_dimension={}\n", self.s1_basis.len()));
        match self.t1_sigma_min {
            Some(v) => s.push_str(&format!("t1_sigma_min={v:.12e}\n")),
            None => s.push_str("t1_sigma_min=NA\n"),
        }
        match self.gap_eigenvalue_count {
            Some(v) => s.push_str(&format!("gap_eigenvalue_count={v}\n")),
            None => s.push_str("gap_eigenvalue_count=NA\n"),
        }
        s.push_str(&format!("dimension={}\n", self.dimension));
        s.push_str(&format!("flags={}\n", self.flags.join(",")));
        s
    }
}

/// Everything needed after classification: T, P, the Householder compression of range(Q) and,
/// for regular thresholds, QD₀Q.
#[derive(Clone, Debug)]
pub struct ThresholdAnalysis {
    pub mass: f64,
    pub factorization: LocalFactorization,
    pub projections: Projections,
    pub t: DiscreteOperator,
    pub report: ThresholdReport,
    householder: CVector,
    compressed: CMatrix,
    qd0q: Option<CMatrix>,
}

/// H = I − 2wwᴴ with column 0 of H parallel to `unit`.
fn householder_vector(unit: &CVector) -> CVector {
    let u0 = unit[0];
    let phase = if u0.norm() > 0.0 {
        u0 / u0.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let mut w = unit.clone();
    w[0] += phase;
    let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    w.mapv(|z| z / n)
}

/// H A H for Hermitian A.
fn householder_conjugate(a: &CMatrix, w: &CVector) -> CMatrix {
    let y = a.dot(w);
    let alpha: C64 = w.iter().zip(&y).map(|(wi, yi)| wi.conj() * yi).sum();
    let n = a.nrows();
    let mut out = a.clone();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] += -2.0 * w[i] * y[j].conj() - 2.0 * y[i] * w[j].conj()
                + 4.0 * alpha * w[i] * w[j].conj();
        }
    }
    out
}

/// H·[0; x].
fn householder_lift(x: &CVector, w: &CVector) -> CVector {
    let mut full = Array1::zeros(x.len() + 1);
    full.slice_mut(s![1..]).assign(x);
    let c: C64 = w.iter().zip(&full).map(|(wi, fi)| wi.conj() * fi).sum();
    &full - &w.mapv(|wi| 2.0 * c * wi)
}

fn eigvals_hermitian(a: &CMatrix) -> Result<Array1<f64>> {
    Ok(a.eigvalsh(UPLO::Lower)?)
}

/// Spectral norm of a Hermitian operator.
pub fn hermitian_norm(a: &DiscreteOperator) -> Result<f64> {
    if a.dim() == 0 {
        return Ok(0.0);
    }
    let e = eigvals_hermitian(&a.matrix)?;
    Ok(e.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Classify the threshold from T, the projections and the factorization.
pub fn classify(
    t: &DiscreteOperator,
    proj: &Projections,
    f: &LocalFactorization,
    tol: f64,
    mass: f64,
) -> Result<ThresholdAnalysis> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Validation(format!("tol must be positive, got {tol}")));
    }
    if !t.same_space(&proj.p) || t.cells != f.cells || t.grid != f.grid {
        return Err(Error::Validation("operators live on different grids".into()));
    }
    let dim = t.dim();
    if proj.degenerate {
        let mut flags = vec!["DegenerateFactorization".to_string()];
        if f.cells.is_empty() {
            flags.push("ZeroPotential".to_string());
        }
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let report = ThresholdReport {
            kind: ThresholdKind::SWaveResonance,
            sigma_min: 0.0,
            s1_basis: S1Basis::Constant(vec![[one, zero], [zero, one]]),
            t1_sigma_min: None,
            gap_eigenvalue_count: None,
            tol,
            dimension: dim,
            flags,
        };
        return Ok(ThresholdAnalysis {
            mass,
            factorization: f.clone(),
            projections: proj.clone(),
            t: t.clone(),
            report,
            householder: Array1::zeros(dim),
            compressed: Array2::zeros((0, 0)),
            qd0q: None,
        });
    }
    let w = householder_vector(&proj.unit);
    let full = householder_conjugate(&t.matrix, &w);
    let compressed = full.slice(s![1.., 1..]).to_owned();
    let mut flags = Vec::new();
    if f.cells.len() < f.grid.cells() {
        // cells outside the support contribute U = ±1 blocks, singular values 1
        flags.push(format!("support_cells={}", f.cells.len()));
    }
    let (sigma_min, near_null) = if compressed.nrows() == 0 {
        (f64::INFINITY, Vec::new())
    } else {
        let ev = eigvals_hermitian(&compressed)?;
        let smin = ev.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        if smin > tol {
            (smin, Vec::new())
        } else {
            let (vals, vecs) = eigh_hermitian(&compressed)?;
            let mut basis = Vec::new();
            for (k, val) in vals.iter().enumerate() {
                if val.abs() <= tol {
                    basis.push(householder_lift(&vecs.column(k).to_owned(), &w));
                }
            }
            (smin, basis)
        }
    };
    let sigma_min = if f.cells.len() < f.grid.cells() {
        sigma_min.min(1.0)
    } else {
        sigma_min
    };
    let mut report = ThresholdReport {
        kind: ThresholdKind::Regular,
        sigma_min,
        s1_basis: S1Basis::Grid(Vec::new()),
        t1_sigma_min: None,
        gap_eigenvalue_count: None,
        tol,
        dimension: dim,
        flags,
    };
    if sigma_min <= tol {
        // T₁ = S₁TPTS₁ is rank one because P is
        let tu = t.matrix.dot(&proj.unit);
        let k = near_null.len();
        let a: Vec<C64> = near_null
            .iter()
            .map(|s| s.iter().zip(&tu).map(|(si, ti)| si.conj() * ti).sum())
            .collect();
        let mut t1 = Array2::zeros((k, k));
        for i in 0..k {
            for j in 0..k {
                t1[[i, j]] = a[i] * a[j].conj();
            }
        }
        let t1_min = eigvals_hermitian(&t1)?
            .iter()
            .fold(f64::INFINITY, |m, x| m.min(x.abs()));
        report.t1_sigma_min = Some(t1_min);
        report.kind = if t1_min > tol {
            ThresholdKind::SWaveResonance
        } else {
            ThresholdKind::HigherDegeneracy
        };
        report.s1_basis = S1Basis::Grid(near_null);
        report
            .flags
            .push("s1_from_singular_subspace".to_string());
    }
    Ok(ThresholdAnalysis {
        mass,
        factorization: f.clone(),
        projections: proj.clone(),
        t: t.clone(),
        report,
        householder: w,
        compressed,
        qd0q: None,
    })
}

/// Convenience: factorization → T, P, Q → classification, with tol = rel_tol·‖T‖.
pub fn analyze(
    fact: &SpectralFactorization,
    mass: f64,
    rel_tol: f64,
) -> Result<ThresholdAnalysis> {
    check_grid(&fact.grid)?;
    if !(rel_tol.is_finite() && rel_tol > 0.0) {
        return Err(Error::Validation(format!("tol must be positive, got {rel_tol}")));
    }
    let local = LocalFactorization::from_support(fact);
    let calg0 = build_calg0_on(&fact.grid, mass, local.cells.clone())?;
    let t = build_t(&local, &calg0)?;
    let proj = build_p_q(&local);
    let norm = hermitian_norm(&t)?.max(1.0);
    classify(&t, &proj, &local, rel_tol * norm, mass)
}

/// Output of the low-energy inversion of M^±(z).
#[derive(Clone, Debug)]
pub struct MInversion {
    pub h: C64,
    pub s: CMatrix,
    pub qd0q: CMatrix,
    pub residual: f64,
}

impl ThresholdAnalysis {
    pub fn kind(&self) -> ThresholdKind {
        self.report.kind
    }

    /// QD₀Q with D₀ = (QTQ)⁻¹ on range(Q); computed once.
    pub fn qd0q(&mut self) -> Result<&CMatrix> {
        if self.report.kind != ThresholdKind::Regular {
            return Err(Error::Precondition(format!(
                "QD₀Q needs a regular threshold, got {}",
                self.report.kind
            )));
        }
        if self.qd0q.is_none() {
            let inv = self.compressed.inv()?;
            let n = inv.nrows() + 1;
            let mut z = Array2::zeros((n, n));
            z.slice_mut(s![1.., 1..]).assign(&inv);
            self.qd0q = Some(householder_conjugate(&z, &self.householder));
        }
        Ok(self.qd0q.as_ref().expect("just set"))
    }

    /// 𝕘^±(z)P + T, the leading part of M^±(z).
    pub fn leading_m(&self, z: f64, sign: Sign) -> Result<CMatrix> {
        let g = gg(z, sign, self.mass, self.projections.phi_norm_sqr)?;
        Ok(&self.t.matrix + &self.projections.p.matrix.mapv(|p| p * g))
    }

    pub fn build_m(&self, z: f64, sign: Sign) -> Result<DiscreteOperator> {
        build_m(z, sign, &self.factorization, self.mass)
    }

    /// h^±(z) = 𝕘^±(z) + trace(PTP − PTQD₀QTP).
    pub fn h(&mut self, z: f64, sign: Sign) -> Result<C64> {
        let g = gg(z, sign, self.mass, self.projections.phi_norm_sqr)?;
        let u = self.projections.unit.clone();
        let tu = self.t.matrix.dot(&u);
        let ptp: C64 = u.iter().zip(&tu).map(|(a, b)| a.conj() * b).sum();
        let qd0q = self.qd0q()?;
        let x = qd0q.dot(&tu);
        let corr: C64 = tu.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        Ok(g + ptp - corr)
    }

    /// S = P − PTQD₀Q − QD₀QTP + QD₀QTPTQD₀Q.
    pub fn s_matrix(&mut self) -> Result<CMatrix> {
        let p = self.projections.p.matrix.clone();
        let t = self.t.matrix.clone();
        let qd = self.qd0q()?.clone();
        let ptq = p.dot(&t).dot(&qd);
        let qtp = qd.dot(&t).dot(&p);
        let last = qtp.dot(&t).dot(&qd);
        Ok(&p - &ptq - &qtp + &last)
    }

    /// Compare M^±(z)⁻¹ with h⁻¹S + QD₀Q.
    pub fn invert_m_expansion(&mut self, z: f64, sign: Sign) -> Result<MInversion> {
        if self.report.kind != ThresholdKind::Regular {
            return Err(Error::Precondition(format!(
                "inversion expansion needs a regular threshold, got {}",
                self.report.kind
            )));
        }
        let m = self.build_m(z, sign)?;
        let minv = m.matrix.inv().map_err(|e| {
            Error::InversionFailure(format!("M(z = {z:e}) not invertible: {e}"))
        })?;
        if !minv.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::InversionFailure(format!("M(z = {z:e}) inverse not finite")));
        }
        let h = self.h(z, sign)?;
        let s = self.s_matrix()?;
        let qd0q = self.qd0q()?.clone();
        let approx = &s.mapv(|x| x / h) + &qd0q;
        let residual = frobenius(&(&minv - &approx));
        Ok(MInversion {
            h,
            s,
            qd0q,
            residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{factorize, sample, PotentialSpec};

    fn regular_setup(n: usize) -> ThresholdAnalysis {
        let g = Grid::new(n, 6.0).unwrap();
        let spec = PotentialSpec::gaussian(0.5, 1.0, Mat2::identity());
        let f = factorize(&sample(&spec, &g).unwrap()).unwrap();
        analyze(&f, 1.0, 1e-6).unwrap()
    }

    #[test]
    fn zero_potential_short_circuits() {
        let g = Grid::new(8, 4.0).unwrap();
        let f = factorize(&sample(&PotentialSpec::zero(), &g).unwrap()).unwrap();
        let a = analyze(&f, 1.0, 1e-6).unwrap();
        assert_eq!(a.kind(), ThresholdKind::SWaveResonance);
        assert_eq!(a.report.s1_basis.len(), 2);
        assert!(a.report.flags.iter().any(|s| s == "DegenerateFactorization"));
    }

    #[test]
    fn classify_rejects_bad_tol() {
        let a = regular_setup(8);
        let r = classify(&a.t, &a.projections, &a.factorization, 0.0, 1.0);
        assert!(matches!(r, Err(Error::Validation(_))));
    }

    #[test]
    fn qd0q_inverts_qtq_on_range_q() {
        let mut a = regular_setup(8);
        let p = a.projections.p.matrix.clone();
        let q = &Array2::<C64>::eye(p.nrows()) - &p;
        let qtq = q.dot(&a.t.matrix).dot(&q);
        let d = a.qd0q().unwrap().clone();
        assert!(frobenius(&(&qtq.dot(&d) - &q)) < 1e-10);
    }

    #[test]
    fn feshbach_inverse_matches_leading_part() {
        let mut a = regular_setup(8);
        let z = 1e-3;
        let inv = a.leading_m(z, Sign::Plus).unwrap().inv().unwrap();
        let h = a.h(z, Sign::Plus).unwrap();
        let approx = &a.s_matrix().unwrap().mapv(|x| x / h) + a.qd0q().unwrap();
        assert!(frobenius(&(&inv - &approx)) < 1e-10 * frobenius(&inv));
    }

    #[test]
    fn householder_compression_spans_complement() {
        let a = regular_setup(6);
        let w = &a.householder;
        let x = CVector::from_elem(a.t.dim() - 1, C64::new(0.3, -0.1));
        let lifted = householder_lift(&x, w);
        let overlap: C64 = a
            .projections
            .unit
            .iter()
            .zip(&lifted)
            .map(|(u, l)| u.conj() * l)
            .sum();
        assert!(overlap.norm() < 1e-13);
        let nx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let nl: f64 = lifted.iter().map(|z| z.norm_sqr()).sum();
        assert!((nx - nl).abs() < 1e-12);
    }

    #[test]
    fn rejects_large_grids() {
        let g = Grid::new(64, 6.0).unwrap();
        assert!(matches!(build_g0(&g), Err(Error::Resource(_))));
    }
}
