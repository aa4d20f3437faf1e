//! 2×2 complex matrices, spinors and the Dirac matrices.

use num_complex::Complex64 as C64;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub type Spinor = [C64; 2];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    pub fn real_diag(a: f64, d: f64) -> Self {
        Self::diag(C64::new(a, 0.0), C64::new(d, 0.0))
    }

    pub fn scale(self, s: C64) -> Self {
        let m = self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(self) -> Self {
        let m = self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(self, s: Spinor) -> Spinor {
        let m = self.0;
        [m[0][0] * s[0] + m[0][1] * s[1], m[1][0] * s[0] + m[1][1] * s[1]]
    }

    /// Frobenius norm.
    pub fn norm(self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn hermitian_defect(self) -> f64 {
        (self - self.adjoint()).max_abs()
    }

    /// exp(−i·t·H) for Hermitian H, in closed form.
    pub fn exp_i_hermitian(self, t: f64) -> Self {
        let h = self.0;
        let a0 = 0.5 * (h[0][0].re + h[1][1].re);
        let traceless = self - Mat2::identity().scale_re(a0);
        // traceless Hermitian part squares to r²·I
        let r = (traceless.0[0][0].norm_sqr() + traceless.0[0][1].norm_sqr()).sqrt();
        let sinc = if r * t.abs() < 1e-8 {
            t * (1.0 - (r * t).powi(2) / 6.0)
        } else {
            (r * t).sin() / r
        };
        let core = Mat2::identity().scale_re((r * t).cos()) - traceless.scale(I * sinc);
        core.scale(C64::from_polar(1.0, -a0 * t))
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

/// β = diag(1, −1).
pub fn beta() -> Mat2 {
    Mat2::real_diag(1.0, -1.0)
}

/// α₁ = σ₁.
pub fn alpha1() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

/// α₂ = σ₂.
pub fn alpha2() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

/// α₀ = β, α₁, α₂.
pub fn alpha(k: usize) -> Mat2 {
    match k {
        0 => beta(),
        1 => alpha1(),
        2 => alpha2(),
        _ => panic!("alpha index {k} out of range"),
    }
}

/// M₁₁ = I₁ = diag(1, 0).
pub fn m11() -> Mat2 {
    Mat2::real_diag(1.0, 0.0)
}

/// α·v = v₁α₁ + v₂α₂.
pub fn alpha_dot(v: [f64; 2]) -> Mat2 {
    Mat2::new(ZERO, C64::new(v[0], -v[1]), C64::new(v[0], v[1]), ZERO)
}

pub fn spinor_norm_sqr(s: &Spinor) -> f64 {
    s[0].norm_sqr() + s[1].norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anticommutation_exact() {
        for j in 0..3 {
            for k in 0..3 {
                let ac = alpha(j) * alpha(k) + alpha(k) * alpha(j);
                let want = if j == k {
                    Mat2::identity().scale_re(2.0)
                } else {
                    Mat2::zero()
                };
                assert_eq!(ac, want, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn alpha_dot_matches_components() {
        let v = [0.3, -1.7];
        let d = alpha_dot(v) - (alpha1().scale_re(v[0]) + alpha2().scale_re(v[1]));
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn hermitian_exponential_is_unitary_and_matches_diagonal_case() {
        let h = Mat2::new(
            C64::new(0.4, 0.0),
            C64::new(0.2, -0.7),
            C64::new(0.2, 0.7),
            C64::new(-1.3, 0.0),
        );
        let e = h.exp_i_hermitian(2.3);
        assert!((e * e.adjoint() - Mat2::identity()).max_abs() < 1e-14);
        let d = Mat2::real_diag(0.5, -2.0).exp_i_hermitian(1.5);
        assert!((d.0[0][0] - C64::from_polar(1.0, -0.75)).norm() < 1e-15);
        assert!((d.0[1][1] - C64::from_polar(1.0, 3.0)).norm() < 1e-15);
        assert_eq!(Mat2::zero().exp_i_hermitian(4.0), Mat2::identity());
    }
}
