//! Dense realisation of H = D_m + V with spectral derivatives, for small grids.

use super::field::{apply_scalar_multiplier, frequency_lattice, Fft2, SpinorField};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operator::{eigh_hermitian, frobenius, CMatrix, CVector};
use crate::potential::{factorize, HermitianField};
use crate::threshold::{LocalFactorization, MAX_DENSE_SIDE};
use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

/// Dense H on samples indexed 2·cell + component.
pub fn discrete_hamiltonian(grid: &Grid, potential: &HermitianField, mass: f64) -> Result<CMatrix> {
    let n = grid.n();
    if n > MAX_DENSE_SIDE {
        return Err(Error::Resource(format!(
            "dense Hamiltonian limited to {MAX_DENSE_SIDE}² grids, got {n}²"
        )));
    }
    if potential.grid != *grid {
        return Err(Error::Validation("potential and grid differ".into()));
    }
    // circulant stencil of −i∂ with symbol ξ
    let mut d: Vec<C64> = grid.frequencies().iter().map(|&x| C64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut d);
    for z in d.iter_mut() {
        *z /= n as f64;
    }
    let cells = grid.cells();
    let mut h = Array2::zeros((2 * cells, 2 * cells));
    let i = C64::new(0.0, 1.0);
    for a in 0..cells {
        let (ax, ay) = grid.unravel(a);
        for j in 0..n {
            // x-derivative: same row
            let b = ay * n + j;
            let cx = d[(ax + n - j) % n];
            // y-derivative: same column
            let b2 = j * n + ax;
            let cy = d[(ay + n - j) % n];
            h[[2 * a, 2 * b + 1]] += cx;
            h[[2 * a + 1, 2 * b]] += cx;
            h[[2 * a, 2 * b2 + 1]] -= i * cy;
            h[[2 * a + 1, 2 * b2]] += i * cy;
        }
        let v = potential.values[a];
        h[[2 * a, 2 * a]] += v.0[0][0] + mass;
        h[[2 * a, 2 * a + 1]] += v.0[0][1];
        h[[2 * a + 1, 2 * a]] += v.0[1][0];
        h[[2 * a + 1, 2 * a + 1]] += v.0[1][1] - mass;
    }
    Ok(h)
}

/// Relative defect ‖(H − λ)⁻¹ − R₀ + R₀v*M⁻¹vR₀‖/‖(H − λ)⁻¹‖ of the symmetric resolvent identity,
/// with R₀ = (H₀ − λ)⁻¹ and M = U + vR₀v* built from the pointwise factorization of V.
pub fn symmetric_resolvent_defect(
    grid: &Grid,
    potential: &HermitianField,
    mass: f64,
    lambda: C64,
) -> Result<f64> {
    let zero = HermitianField::zero(*grid);
    let shift = |mut h: CMatrix| {
        for k in 0..h.nrows() {
            h[[k, k]] -= lambda;
        }
        h
    };
    let r0 = shift(discrete_hamiltonian(grid, &zero, mass)?).inv()?;
    let direct = shift(discrete_hamiltonian(grid, potential, mass)?).inv()?;
    let f = LocalFactorization::from_support(&factorize(potential)?);
    let s = f.cells.len();
    let mut v = Array2::<C64>::zeros((2 * s, 2 * grid.cells()));
    for (k, &c) in f.cells.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                v[[2 * k + i, 2 * c + j]] = f.v[k].0[i][j];
            }
        }
    }
    let vh = v.t().mapv(|z| z.conj());
    let mut m = v.dot(&r0).dot(&vh);
    for (k, u) in f.u.iter().enumerate() {
        m[[2 * k, 2 * k]] += u[0];
        m[[2 * k + 1, 2 * k + 1]] += u[1];
    }
    let corr = r0.dot(&vh).dot(&m.inv()?).dot(&v).dot(&r0);
    let routed = &r0 - &corr;
    Ok(frobenius(&(&direct - &routed)) / frobenius(&direct))
}

/// Eigendecomposition of a dense Hamiltonian.
#[derive(Clone, Debug)]
pub struct DenseSpectral {
    pub grid: Grid,
    pub mass: f64,
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: CMatrix,
}

impl DenseSpectral {
    pub fn new(grid: Grid, potential: &HermitianField, mass: f64) -> Result<Self> {
        let h = discrete_hamiltonian(&grid, potential, mass)?;
        Self::from_matrix(grid, mass, &h)
    }

    pub fn from_matrix(grid: Grid, mass: f64, h: &CMatrix) -> Result<Self> {
        let (e, u) = eigh_hermitian(h)?;
        Ok(DenseSpectral {
            grid,
            mass,
            eigenvalues: e,
            eigenvectors: u,
        })
    }

    /// f(H) applied to a sample vector.
    pub fn apply_function<F: Fn(f64) -> C64>(&self, f: F, x: &CVector) -> CVector {
        let u = &self.eigenvectors;
        let mut c = u.t().mapv(|z| z.conj()).dot(x);
        for (ck, e) in c.iter_mut().zip(self.eigenvalues.iter()) {
            *ck *= f(*e);
        }
        u.dot(&c)
    }

    /// Dense f(H).
    pub fn function_matrix<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, e) in self.eigenvalues.iter().enumerate() {
            let s = f(*e);
            scaled.column_mut(k).mapv_inplace(|z| z * s);
        }
        scaled.dot(&u.t().mapv(|z| z.conj()))
    }

    pub fn evolve(&self, psi: &SpinorField, t: f64) -> Result<SpinorField> {
        let x = psi.to_vector();
        let y = self.apply_function(|e| C64::from_polar(1.0, -t * e), &x);
        SpinorField::from_vector(self.grid, &y)
    }

    /// Eigenvalues strictly inside the gap, |E| < m − gap_tol.
    pub fn gap_eigenvalue_count(&self, gap_tol: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|e| e.abs() < self.mass - gap_tol)
            .count()
    }
}

/// Result of removing gap eigenvectors.
#[derive(Clone, Debug)]
pub struct Projected {
    pub field: SpinorField,
    pub removed: usize,
}

/// Removes the components along eigenvectors with |E| < m − gap_tol.
///
/// Discrete free operators have eigenvalues exactly at ±m, so the margin is taken inward.
pub fn pac_project(spec: &DenseSpectral, psi: &SpinorField, gap_tol: f64) -> Result<Projected> {
    if !(gap_tol.is_finite() && gap_tol >= 0.0) {
        return Err(Error::Validation(format!("gap_tol must be ≥ 0, got {gap_tol}")));
    }
    if psi.grid != spec.grid {
        return Err(Error::Validation("field and Hamiltonian grids differ".into()));
    }
    let cut = spec.mass - gap_tol;
    let removed = spec.gap_eigenvalue_count(gap_tol);
    let y = spec.apply_function(
        |e| C64::new(if e.abs() < cut { 0.0 } else { 1.0 }, 0.0),
        &psi.to_vector(),
    );
    Ok(Projected {
        field: SpinorField::from_vector(spec.grid, &y)?,
        removed,
    })
}

/// How ⟨H⟩^{−s} is realised.
pub enum Smoothing<'a> {
    Dense(&'a DenseSpectral),
    /// Fourier multiplier of the free operator.
    Free { mass: f64 },
}

/// (1 + H²)^{−s/2} ψ.
pub fn smooth_power(route: Smoothing<'_>, s: f64, psi: &SpinorField) -> Result<SpinorField> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Validation(format!("smoothing power must be ≥ 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(psi.clone());
    }
    match route {
        Smoothing::Dense(spec) => {
            if psi.grid != spec.grid {
                return Err(Error::Validation("field and Hamiltonian grids differ".into()));
            }
            let y = spec.apply_function(
                |e| C64::new((1.0 + e * e).powf(-0.5 * s), 0.0),
                &psi.to_vector(),
            );
            SpinorField::from_vector(spec.grid, &y)
        }
        Smoothing::Free { mass } => {
            let sym: Vec<f64> = frequency_lattice(&psi.grid)
                .iter()
                .map(|x| (1.0 + x[0] * x[0] + x[1] * x[1] + mass * mass).powf(-0.5 * s))
                .collect();
            let mut out = psi.clone();
            apply_scalar_multiplier(&mut Fft2::new(psi.grid.n()), &mut out, &sym);
            Ok(out)
        }
    }
}
