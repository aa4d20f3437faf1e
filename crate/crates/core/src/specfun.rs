//! Bessel functions J₀, Y₀, J₁, Y₁ and the Hankel combinations H^± = J ± iY.
//!
//! Values come from the fdlibm rational/asymptotic approximations shipped in `libm`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

/// Branch of a boundary value: + for λ + i0, − for λ − i0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselEval {
    pub value: C64,
    pub argument: f64,
    pub derivative: Option<C64>,
}

fn check_nonneg(u: f64, what: &str) -> Result<()> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::Domain(format!("{what} needs u >= 0, got {u}")));
    }
    Ok(())
}

fn check_pos(u: f64, what: &str) -> Result<()> {
    if u.is_nan() || u <= 0.0 {
        return Err(Error::Domain(format!("{what} needs u > 0, got {u}")));
    }
    Ok(())
}

pub fn j0(u: f64) -> Result<f64> {
    check_nonneg(u, "j0")?;
    Ok(libm::j0(u))
}

pub fn j1(u: f64) -> Result<f64> {
    check_nonneg(u, "j1")?;
    Ok(libm::j1(u))
}

pub fn y0(u: f64) -> Result<f64> {
    check_pos(u, "y0")?;
    Ok(libm::y0(u))
}

pub fn y1(u: f64) -> Result<f64> {
    check_pos(u, "y1")?;
    Ok(libm::y1(u))
}

/// H₀^±(u) = J₀(u) ± iY₀(u).
pub fn h0(u: f64, sign: Sign) -> Result<C64> {
    let y = y0(u)?;
    Ok(C64::new(libm::j0(u), sign.value() * y))
}

/// H₁^±(u) = J₁(u) ± iY₁(u) = −d/du H₀^±(u).
pub fn h1(u: f64, sign: Sign) -> Result<C64> {
    let y = y1(u)?;
    Ok(C64::new(libm::j1(u), sign.value() * y))
}

/// H₀^± together with its derivative −H₁^±.
pub fn h0_eval(u: f64, sign: Sign) -> Result<BesselEval> {
    Ok(BesselEval {
        value: h0(u, sign)?,
        argument: u,
        derivative: Some(-h1(u, sign)?),
    })
}

/// (J₀, Y₀, J₁, Y₁) at u > 0 without argument checks.
#[inline]
pub(crate) fn bessel_quad(u: f64) -> [f64; 4] {
    [libm::j0(u), libm::y0(u), libm::j1(u), libm::y1(u)]
}

/// Leading terms of the small-argument series of J₀: 1 − u²/4 + u⁴/64.
pub fn j0_series3(u: f64) -> f64 {
    let q = u * u;
    1.0 - q / 4.0 + q * q / 64.0
}

/// Leading small-argument behaviour of Y₀: (2/π)(log(u/2) + γ).
pub fn y0_leading(u: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * ((0.5 * u).ln() + EULER_GAMMA)
}
