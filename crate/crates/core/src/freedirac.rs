//! Free Schrödinger and Dirac resolvent kernels and the free propagator symbol.

use crate::algebra::{alpha_dot, beta, m11, Mat2, I};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::specfun::{bessel_quad, Sign, EULER_GAMMA};
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_4, LN_2, PI};

/// Spectral branch: λ = +√(z²+m²) above the gap or λ = −√(z²+m²) below it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracParams {
    pub m: f64,
    pub z: f64,
    pub sign: Sign,
    pub branch: Branch,
}

impl DiracParams {
    pub fn new(m: f64, z: f64, sign: Sign) -> Result<Self> {
        Self::with_branch(m, z, sign, Branch::Positive)
    }

    pub fn with_branch(m: f64, z: f64, sign: Sign, branch: Branch) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::Domain(format!("mass must be positive, got {m}")));
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Domain(format!("z must be positive, got {z}")));
        }
        Ok(DiracParams { m, z, sign, branch })
    }

    pub fn lambda(&self) -> f64 {
        let l = self.z.hypot(self.m);
        match self.branch {
            Branch::Positive => l,
            Branch::Negative => -l,
        }
    }

    /// Sign of the Schrödinger resolvent R₀^±(z²) behind this Dirac boundary value.
    /// Below the gap the boundary values of (D_m − λ)⁻¹ swap.
    pub fn schrodinger_sign(&self) -> Sign {
        match self.branch {
            Branch::Positive => self.sign,
            Branch::Negative => self.sign.flip(),
        }
    }

    /// mβ + λ.
    pub fn mass_term(&self) -> Mat2 {
        let l = self.lambda();
        Mat2::real_diag(self.m + l, -self.m + l)
    }
}

/// −(1/2π) log r.
pub fn g0_kernel(r: f64) -> f64 {
    -r.ln() / (2.0 * PI)
}

/// ±(i/4) H₀^±(zr).
pub fn schrodinger_kernel(z: f64, sign: Sign, r: f64) -> Result<C64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Domain(format!("z must be positive, got {z}")));
    }
    if r == 0.0 {
        return Err(Error::Singularity("schrodinger_kernel at r = 0".into()));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("r must be positive, got {r}")));
    }
    Ok(r0_unchecked(z, sign, r))
}

#[inline]
fn r0_unchecked(z: f64, sign: Sign, r: f64) -> C64 {
    let u = z * r;
    C64::new(-libm::y0(u), sign.value() * libm::j0(u)) * 0.25
}

/// g^±(z) = −(1/2π)(log(z/2) + γ) ± i/4.
pub fn g_pm(z: f64, sign: Sign) -> Result<C64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Domain(format!("g_pm needs z > 0, got {z}")));
    }
    Ok(C64::new(
        -((0.5 * z).ln() + EULER_GAMMA) / (2.0 * PI),
        0.25 * sign.value(),
    ))
}

/// [−iα·∇ₓ + mβ + λ] R₀^±(z²)(x, y).
pub fn dirac_kernel(p: &DiracParams, x: [f64; 2], y: [f64; 2]) -> Result<Mat2> {
    let d = [x[0] - y[0], x[1] - y[1]];
    if d == [0.0, 0.0] {
        return Err(Error::Singularity("dirac_kernel at x = y".into()));
    }
    Ok(dirac_kernel_offset(p, d))
}

/// Dirac kernel as a function of the offset d = x − y ≠ 0.
#[inline]
pub(crate) fn dirac_kernel_offset(p: &DiracParams, d: [f64; 2]) -> Mat2 {
    let r = d[0].hypot(d[1]);
    let s = p.schrodinger_sign().value();
    let [j0, y0, j1, y1] = bessel_quad(p.z * r);
    let h0 = C64::new(j0, s * y0);
    let h1 = C64::new(j1, s * y1);
    let grad = alpha_dot([d[0] / r, d[1] / r]).scale(h1 * (-0.25 * s * p.z));
    grad + p.mass_term().scale(I * h0 * (0.25 * s))
}

/// 𝒢₀(x, y) = (i/2π) α·(x−y)/|x−y|² + 2m G₀(x, y) I₁.
pub fn calg0_kernel(x: [f64; 2], y: [f64; 2], m: f64) -> Result<Mat2> {
    let d = [x[0] - y[0], x[1] - y[1]];
    if d == [0.0, 0.0] {
        return Err(Error::Singularity("calg0_kernel at x = y".into()));
    }
    Ok(calg0_offset(d, m))
}

#[inline]
pub(crate) fn calg0_offset(d: [f64; 2], m: f64) -> Mat2 {
    let r2 = d[0] * d[0] + d[1] * d[1];
    let grad = alpha_dot([d[0] / r2, d[1] / r2]).scale(I / (2.0 * PI));
    grad + m11().scale_re(2.0 * m * g0_kernel(r2.sqrt()))
}

/// exp(−it(α·ξ + mβ)) = cos(t⟨ξ⟩) I − i sin(t⟨ξ⟩)(α·ξ + mβ)/⟨ξ⟩.
pub fn free_symbol(xi: [f64; 2], t: f64, m: f64) -> Mat2 {
    let e = (xi[0] * xi[0] + xi[1] * xi[1] + m * m).sqrt();
    let h = alpha_dot(xi) + beta().scale_re(m);
    let (s, c) = (t * e).sin_cos();
    let sinc = if e == 0.0 { t } else { s / e };
    Mat2::identity().scale_re(c) - h.scale(I * sinc)
}

/// Jump [R⁺ − R⁻](λ)(x, y) of the free Dirac resolvent across the spectrum, offset form.
/// Equals (D_m + λ)(±i/2)J₀(z|x−y|) with + above the gap and − below it; finite at d = 0.
pub fn free_jump_offset(p: &DiracParams, d: [f64; 2]) -> Mat2 {
    let r = d[0].hypot(d[1]);
    let s = match p.branch {
        Branch::Positive => 1.0,
        Branch::Negative => -1.0,
    };
    let u = p.z * r;
    let scalar = p.mass_term().scale(C64::new(0.0, 0.5 * s * libm::j0(u)));
    if r == 0.0 {
        return scalar;
    }
    // −iα·∇ₓ J₀(zr) = i z J₁(zr) α·e
    let grad = alpha_dot([d[0] / r, d[1] / r]).scale_re(-0.5 * s * p.z * libm::j1(u));
    grad + scalar
}

/// Cell average of −(1/2π) log|y| over a square cell of side h centred at 0.
pub fn g0_cell_average(h: f64) -> f64 {
    let mean_log = (0.5 * h).ln() + 0.5 * LN_2 - 1.5 + FRAC_PI_4;
    -mean_log / (2.0 * PI)
}

/// Cell average of R₀^±(z²)(|y|) over a square cell of side h centred at 0.
///
/// Split as g^± + (cell average of G₀) + (cell average of the smooth remainder), the last by
/// polar Gauss–Legendre quadrature over one octant.
pub fn r0_cell_average(z: f64, sign: Sign, h: f64) -> Result<C64> {
    let g = g_pm(z, sign)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Validation(format!("cell side must be positive, got {h}")));
    }
    let (x, w) = gauss_legendre(24);
    let a = 0.5 * h;
    let mut acc = C64::new(0.0, 0.0);
    for (xt, wt) in x.iter().zip(&w) {
        let theta = FRAC_PI_4 * 0.5 * (1.0 + xt);
        let rmax = a / theta.cos();
        for (xr, wr) in x.iter().zip(&w) {
            let r = 0.5 * rmax * (1.0 + xr);
            let f = r0_unchecked(z, sign, r) - g - g0_kernel(r);
            acc += f * (r * wr * 0.5 * rmax * wt * 0.5 * FRAC_PI_4);
        }
    }
    Ok(g + g0_cell_average(h) + acc * (8.0 / (h * h)))
}

/// Cell-averaged diagonal of the Dirac kernel: (mβ + λ) times the averaged R₀; the odd gradient
/// part averages to zero.
pub fn dirac_cell_average(p: &DiracParams, h: f64) -> Result<Mat2> {
    let r0 = r0_cell_average(p.z, p.schrodinger_sign(), h)?;
    Ok(p.mass_term().scale(r0))
}

/// Self weight of the punctured lattice sum for log|y| on hℤ²: the sum
/// h²Σ'_{y≠0} log|y| f(y) + h²(log h + c)f(0), with c = ½log(4π) − 2logΓ(¼), is exact up to
/// O(h⁴) for smooth f. The constant is half the derivative at 0 of the Epstein zeta function of ℤ².
pub fn lattice_log_constant() -> f64 {
    0.5 * (4.0 * PI).ln() - 2.0 * libm::lgamma(0.25)
}

/// Lattice self weight of the Dirac kernel, divided by h²: (mβ + λ)(g^± − (log h + c)/(2π)).
/// Pair with [`odd_part_correction`] for the 1/r gradient singularity.
pub fn dirac_lattice_diagonal(p: &DiracParams, h: f64) -> Result<Mat2> {
    let g = g_pm(p.z, p.schrodinger_sign())?;
    let c = g - (h.ln() + lattice_log_constant()) / (2.0 * PI);
    Ok(p.mass_term().scale(c))
}

/// Neighbour weights that restore the missing self term of the odd kernel (i/2π)α·d/|d|².
///
/// On hℤ² that term equals −(h²/2)(i/2π)Σ_k α_k ∂_k f(x); returned is the block multiplying
/// f(x + h e_k), for k = 0, 1. The block for f(x − h e_k) is its negative.
pub fn odd_part_correction(h: f64) -> [Mat2; 2] {
    let c = -(h * h) / 2.0 / (2.0 * h) / (2.0 * PI);
    [
        crate::algebra::alpha(1).scale(I * c),
        crate::algebra::alpha(2).scale(I * c),
    ]
}
