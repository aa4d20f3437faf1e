//! Potential families, the pointwise factorization V = v*Uv, and weight functions.

use crate::algebra::{beta, m11, Mat2, ONE, ZERO};
use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialKind {
    GaussianBump,
    PolyDecay,
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub amplitude: f64,
    /// Gaussian standard deviation, or the length scale of the polynomial profile.
    pub width: f64,
    /// Decay exponent δ of the polynomial profile.
    pub decay: f64,
    /// Hermitian matrix structure, normalised to max |entry| = 1.
    pub profile: Mat2,
    pub center: [f64; 2],
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec {
            kind: PotentialKind::Zero,
            amplitude: 0.0,
            width: 1.0,
            decay: 1.0,
            profile: Mat2::identity(),
            center: [0.0, 0.0],
        }
    }

    pub fn gaussian(amplitude: f64, width: f64, profile: Mat2) -> Self {
        PotentialSpec {
            kind: PotentialKind::GaussianBump,
            amplitude,
            width,
            decay: f64::INFINITY,
            profile,
            center: [0.0, 0.0],
        }
    }

    pub fn poly(amplitude: f64, decay: f64, profile: Mat2) -> Self {
        PotentialSpec {
            kind: PotentialKind::PolyDecay,
            amplitude,
            width: 1.0,
            decay,
            profile,
            center: [0.0, 0.0],
        }
    }

    pub fn with_center(mut self, c: [f64; 2]) -> Self {
        self.center = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == PotentialKind::Zero {
            return Ok(());
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Validation("potential amplitude not finite".into()));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::Validation(format!(
                "potential width must be positive, got {}",
                self.width
            )));
        }
        if self.kind == PotentialKind::PolyDecay && !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::Validation(format!(
                "decay exponent must be positive, got {}",
                self.decay
            )));
        }
        if self.profile.hermitian_defect() > 1e-12 {
            return Err(Error::Validation("potential profile is not Hermitian".into()));
        }
        let mx = self.profile.max_abs();
        if (mx - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "potential profile must have max |entry| = 1, got {mx}"
            )));
        }
        Ok(())
    }

    /// Scalar envelope at x.
    pub fn envelope(&self, x: [f64; 2]) -> f64 {
        let d2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::GaussianBump => {
                self.amplitude * (-0.5 * d2 / (self.width * self.width)).exp()
            }
            PotentialKind::PolyDecay => {
                self.amplitude * (1.0 + d2 / (self.width * self.width)).powf(-0.5 * self.decay)
            }
        }
    }

    pub fn value(&self, x: [f64; 2]) -> Mat2 {
        self.profile.scale_re(self.envelope(x))
    }

    pub fn is_zero(&self) -> bool {
        self.kind == PotentialKind::Zero || self.amplitude == 0.0
    }
}

/// Named matrix structures accepted in configuration files.
pub fn named_profile(name: &str) -> Option<Mat2> {
    match name {
        "identity" | "scalar" => Some(Mat2::identity()),
        "beta" | "mass" => Some(beta()),
        "m11" | "upper" => Some(m11()),
        "lower" => Some(Mat2::real_diag(0.0, 1.0)),
        "sigma1" | "alpha1" => Some(Mat2::new(ZERO, ONE, ONE, ZERO)),
        _ => None,
    }
}

/// Hermitian matrix field sampled on a grid (row-major cell order).
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianField {
    pub grid: Grid,
    pub values: Vec<Mat2>,
}

impl HermitianField {
    pub fn zero(grid: Grid) -> Self {
        HermitianField {
            grid,
            values: vec![Mat2::zero(); grid.cells()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.max_abs() == 0.0)
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().map(|v| v.max_abs()).fold(0.0, f64::max)
    }
}

pub fn sample(spec: &PotentialSpec, grid: &Grid) -> Result<HermitianField> {
    spec.validate()?;
    if spec.is_zero() {
        return Ok(HermitianField::zero(*grid));
    }
    let values = (0..grid.cells()).map(|k| spec.value(grid.point(k))).collect();
    Ok(HermitianField {
        grid: *grid,
        values,
    })
}

/// Pointwise factorization V(x) = v(x)* U(x) v(x).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFactorization {
    pub grid: Grid,
    /// Diagonal of U, each entry ±1.
    pub u: Vec<[f64; 2]>,
    pub v: Vec<Mat2>,
}

impl SpectralFactorization {
    pub fn a(&self, k: usize) -> C64 {
        self.v[k].0[0][0]
    }
    pub fn b(&self, k: usize) -> C64 {
        self.v[k].0[0][1]
    }
    pub fn c(&self, k: usize) -> C64 {
        self.v[k].0[1][0]
    }
    pub fn d(&self, k: usize) -> C64 {
        self.v[k].0[1][1]
    }

    pub fn u_matrix(&self, k: usize) -> Mat2 {
        Mat2::real_diag(self.u[k][0], self.u[k][1])
    }

    pub fn reconstruct(&self, k: usize) -> Mat2 {
        self.v[k].adjoint() * self.u_matrix(k) * self.v[k]
    }

    /// Cells whose v block exceeds `rel_tol` times the largest block.
    pub fn support(&self, rel_tol: f64) -> Vec<usize> {
        let mx = self.v.iter().map(|v| v.max_abs()).fold(0.0, f64::max);
        if mx == 0.0 {
            return Vec::new();
        }
        (0..self.v.len())
            .filter(|&k| self.v[k].max_abs() > rel_tol * mx)
            .collect()
    }
}

pub fn factorize(field: &HermitianField) -> Result<SpectralFactorization> {
    let mut u = Vec::with_capacity(field.values.len());
    let mut v = Vec::with_capacity(field.values.len());
    for m in &field.values {
        let (uk, vk) = decompose(*m)?;
        u.push(uk);
        v.push(vk);
    }
    Ok(SpectralFactorization {
        grid: field.grid,
        u,
        v,
    })
}

fn hermitian_tolerance(m: &Mat2) -> f64 {
    1e-12 * m.max_abs().max(1e-300)
}

/// Factor a Hermitian V as v*Uv with U = diag(sign λ₁, sign λ₂) and v = diag(√|λ₁|, √|λ₂|)·B.
///
/// Eigenvectors are ordered so that the k-th has its largest component at index k (ties go to the
/// larger eigenvalue first) and are phased so that their largest component is real positive.
pub fn decompose(m: Mat2) -> Result<([f64; 2], Mat2)> {
    if !m.is_finite() {
        return Err(Error::Validation("potential value not finite".into()));
    }
    if m.hermitian_defect() > hermitian_tolerance(&m) {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (defect {:.3e})",
            m.hermitian_defect()
        )));
    }
    let a = m.0[0][0].re;
    let d = m.0[1][1].re;
    let b = 0.5 * (m.0[0][1] + m.0[1][0].conj());
    let (vals, vecs): ([f64; 2], [[C64; 2]; 2]) = if b == ZERO {
        ([a, d], [[ONE, ZERO], [ZERO, ONE]])
    } else {
        let mean = 0.5 * (a + d);
        let half = 0.5 * (a - d);
        let rad = half.hypot(b.norm());
        let (hi, lo) = (mean + rad, mean - rad);
        // eigenvector for hi: (b, hi − a) or (hi − d, b*), whichever is better conditioned
        let e_hi = if half >= 0.0 {
            [C64::new(hi - d, 0.0), b.conj()]
        } else {
            [b, C64::new(hi - a, 0.0)]
        };
        let n = (e_hi[0].norm_sqr() + e_hi[1].norm_sqr()).sqrt();
        let e_hi = [e_hi[0] / n, e_hi[1] / n];
        let e_lo = [-e_hi[1].conj(), e_hi[0].conj()];
        if e_hi[0].norm() >= e_hi[1].norm() {
            ([hi, lo], [e_hi, e_lo])
        } else {
            ([lo, hi], [e_lo, e_hi])
        }
    };
    let mut u = [1.0; 2];
    let mut v = Mat2::zero();
    for k in 0..2 {
        let mut e = vecs[k];
        let big = if e[0].norm() >= e[1].norm() { 0 } else { 1 };
        let phase = e[big].conj() / e[big].norm();
        e = [e[0] * phase, e[1] * phase];
        e[big] = C64::new(e[big].re, 0.0);
        u[k] = if vals[k] < 0.0 { -1.0 } else { 1.0 };
        let s = vals[k].abs().sqrt();
        // row k of v is √|λ_k| times the conjugated eigenvector
        v.0[k] = [e[0].conj() * s, e[1].conj() * s];
    }
    Ok((u, v))
}

/// w(x) = 1 + log⁺|x|.
pub fn weight_log(x: [f64; 2]) -> f64 {
    1.0 + x[0].hypot(x[1]).ln().max(0.0)
}

/// ⟨x⟩^p = (1 + |x|²)^{p/2}.
pub fn weight_poly(x: [f64; 2], p: f64) -> f64 {
    (1.0 + x[0] * x[0] + x[1] * x[1]).powf(0.5 * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::I;

    #[test]
    fn diagonal_inputs_keep_natural_order() {
        let (u, v) = decompose(Mat2::real_diag(1.0, -1.0)).unwrap();
        assert_eq!(u, [1.0, -1.0]);
        assert_eq!(v, Mat2::identity());
        let (u, v) = decompose(Mat2::identity().scale_re(2.5)).unwrap();
        assert_eq!(u, [1.0, 1.0]);
        assert!((v - Mat2::identity().scale_re(2.5f64.sqrt())).max_abs() < 1e-15);
    }

    #[test]
    fn zero_eigenvalue_maps_to_plus_one() {
        let (u, v) = decompose(Mat2::real_diag(0.0, -3.0)).unwrap();
        assert_eq!(u, [1.0, -1.0]);
        assert_eq!(v.0[0], [ZERO, ZERO]);
        let (u, _) = decompose(Mat2::zero()).unwrap();
        assert_eq!(u, [1.0, 1.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = Mat2::new(ONE, I, I, ONE);
        assert!(matches!(decompose(m), Err(Error::Validation(_))));
    }

    #[test]
    fn phase_convention() {
        let m = Mat2::new(
            C64::new(0.3, 0.0),
            C64::new(0.5, 0.4),
            C64::new(0.5, -0.4),
            C64::new(-0.9, 0.0),
        );
        let (u, v) = decompose(m).unwrap();
        assert_eq!(u, [1.0, -1.0]);
        for row in v.0 {
            let big = if row[0].norm() >= row[1].norm() { 0 } else { 1 };
            assert_eq!(row[big].im, 0.0);
            assert!(row[big].re > 0.0);
        }
    }

    #[test]
    fn weights() {
        assert_eq!(weight_log([0.0, 0.0]), 1.0);
        assert_eq!(weight_log([0.6, 0.8]), 1.0);
        assert!((weight_log([std::f64::consts::E, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(weight_poly([3.0, 4.0], 2.0), 26.0);
        assert_eq!(weight_poly([3.0, 4.0], 0.0), 1.0);
    }

    #[test]
    fn sampling_rules() {
        let g = Grid::new(21, 10.5).unwrap();
        let z = sample(&PotentialSpec::zero(), &g).unwrap();
        assert!(z.is_zero());
        let gb = sample(&PotentialSpec::gaussian(1.0, 1.5, Mat2::identity()), &g).unwrap();
        assert_eq!(gb.max_entry(), 1.0);
        assert_eq!(gb.values[10 * 21 + 10].max_abs(), 1.0);
        let mut bad = PotentialSpec::poly(1.0, 0.0, Mat2::identity());
        assert!(matches!(sample(&bad, &g), Err(Error::Validation(_))));
        bad.decay = -1.0;
        assert!(sample(&bad, &g).is_err());
    }
}
