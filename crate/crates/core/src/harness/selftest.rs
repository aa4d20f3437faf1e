//! Fast internal checks run by the `selftest` pipeline.

use super::stats::{fit_exponent, DecaySeries, SeriesField};
use crate::algebra::{alpha, alpha_dot, beta, Mat2};
use crate::evolve::{split_step, SpinorField};
use crate::freedirac::free_symbol;
use crate::grid::Grid;
use crate::oscquad::{dyadic_cutoffs, ibp_decompose, Amplitude, Jet, OscOptions};
use crate::potential::{decompose, factorize, sample, HermitianField, PotentialSpec};
use crate::specfun;
use crate::threshold::{analyze, ThresholdKind};
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, f: impl FnOnce() -> crate::Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult {
            name: name.into(),
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run_all() -> Vec<CheckResult> {
    vec![
        check("anticommutation", || {
            let mats = [alpha(1), alpha(2), beta()];
            let mut worst: f64 = 0.0;
            for (i, a) in mats.iter().enumerate() {
                for (j, b) in mats.iter().enumerate() {
                    let expect = if i == j { Mat2::identity().scale_re(2.0) } else { Mat2::zero() };
                    worst = worst.max((*a * *b + *b * *a - expect).max_abs());
                }
            }
            Ok((worst < 1e-14, format!("defect={worst:.1e}")))
        }),
        check("symbol_unitarity", || {
            let mut worst: f64 = 0.0;
            for &(x, y, t) in &[(0.3, -1.2, 0.7), (5.0, 2.0, 13.0), (0.0, 0.0, 100.0)] {
                let u = free_symbol([x, y], t, 1.0);
                worst = worst.max((u * u.adjoint() - Mat2::identity()).max_abs());
                let a = alpha_dot([x, y]) + beta();
                let sq = a * a - Mat2::identity().scale_re(x * x + y * y + 1.0);
                worst = worst.max(sq.max_abs());
            }
            Ok((worst < 1e-13, format!("defect={worst:.1e}")))
        }),
        check("bessel_values", || {
            // J₀(1), Y₀(1), J₁(2.5)
            let d = (specfun::j0(1.0)? - 0.765_197_686_557_966_6).abs()
                + (specfun::y0(1.0)? - 0.088_256_964_215_676_96).abs()
                + (specfun::j1(2.5)? - 0.497_094_102_464_274_4).abs();
            Ok((d < 1e-14, format!("defect={d:.1e}")))
        }),
        check("decompose_roundtrip", || {
            let m = Mat2::new(
                C64::new(0.3, 0.0),
                C64::new(0.1, -0.4),
                C64::new(0.1, 0.4),
                C64::new(-0.7, 0.0),
            );
            let (u, v) = decompose(m)?;
            let back = v.adjoint() * Mat2::real_diag(u[0], u[1]) * v;
            let d = (back - m).max_abs();
            Ok((d < 1e-13, format!("defect={d:.1e}")))
        }),
        check("free_threshold_resonant", || {
            let g = Grid::new(8, 4.0)?;
            let f = factorize(&HermitianField::zero(g))?;
            let kind = analyze(&f, 1.0, 1e-8)?.report.kind;
            Ok((kind == ThresholdKind::SWaveResonance, format!("kind={kind}")))
        }),
        check("split_step_unitary", || {
            let g = Grid::new(32, 8.0)?;
            let v = sample(&PotentialSpec::gaussian(0.5, 1.0, beta()), &g)?;
            let one = C64::new(1.0, 0.0);
            let psi = SpinorField::gaussian(g, [0.5, 0.0], 1.0, [one, C64::new(0.0, 0.0)]);
            let out = split_step(&psi, &v, 1.0, 2.0, 0.05)?;
            let d = (out.norm_l2() / psi.norm_l2() - 1.0).abs();
            Ok((d < 1e-12, format!("norm_drift={d:.1e}")))
        }),
        check("partition_of_unity", || {
            let p = dyadic_cutoffs(2.0, 4)?;
            let worst = (0..=400)
                .map(|k| {
                    let z = 2.0 * k as f64 / 400.0;
                    ((0..=4).map(|j| p.piece(j, z)).sum::<f64>() - 1.0).abs()
                })
                .fold(0.0, f64::max);
            Ok((worst < 1e-12, format!("defect={worst:.1e}")))
        }),
        check("ibp_boundary", || {
            let amp = Amplitude::analytic(8.0, |z| {
                if z < 4.0 {
                    Jet::real(1.0, 0.0, 0.0)
                } else {
                    let s = crate::oscquad::smooth_step(z / 4.0);
                    let d = crate::oscquad::smooth_step_derivative(z / 4.0) / 4.0;
                    Jet::real(s, d, 0.0)
                }
            });
            let d = ibp_decompose(&amp, 50.0, 1.0, &OscOptions::default())?;
            let expect = C64::new(0.0, -1.0) * C64::from_polar(1.0, -50.0) / 50.0;
            let rel = (d.boundary - expect).norm() / expect.norm();
            Ok((rel < 1e-12, format!("rel={rel:.1e}")))
        }),
        check("power_law_fit", || {
            let mut s = DecaySeries::default();
            let mut t = 2.3;
            while t < 200.0 {
                s.push(t, 7.0 / t, 7.0 / t, 1.0);
                t *= 1.15;
            }
            let f = fit_exponent(&s, SeriesField::SupNorm, [5.0, 100.0])?;
            Ok(((f.exponent + 1.0).abs() < 1e-10, format!("exponent={:.6}", f.exponent)))
        }),
    ]
}
