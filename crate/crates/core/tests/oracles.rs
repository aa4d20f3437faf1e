use approx::assert_relative_eq;
use dirac2d_core::algebra::{alpha_dot, beta, m11, Mat2};
use dirac2d_core::freedirac::{
    calg0_kernel, dirac_kernel, g0_kernel, g_pm, schrodinger_kernel, DiracParams,
};
use dirac2d_core::oscquad::{
    dyadic_decay_probe, interpolation_constant, log_log_slope, FreeJump,
};
use dirac2d_core::potential::{factorize, sample, PotentialSpec};
use dirac2d_core::specfun::{self, j0_series3, y0_leading};
use dirac2d_core::threshold::analyze;
use dirac2d_core::{Grid, Sign, ThresholdKind};

// (u, J0, Y0, J1, Y1), independent reference values
const BESSEL_TABLE: [[f64; 5]; 6] = [
    [0.05, 0.9993750976494685, -1.9793110008172097, 0.024992188313759704, -12.789855171174972],
    [0.5, 0.938469807240813, -0.4445187335067066, 0.24226845767487387, -1.4714723926702433],
    [1.0, 0.7651976865579665, 0.08825696421567697, 0.44005058574493355, -0.7812128213002888],
    [5.0, -0.1775967713143383, -0.30851762524903303, -0.3275791375914653, 0.14786314339122691],
    [12.5, 0.14688405470042093, -0.17121430684466937, -0.16548380461475956, -0.15383825653750133],
    [40.0, 0.007366890584236951, 0.12593641705826097, 0.126038318037585, -0.005793505821549509],
];

#[test]
fn bessel_table() {
    for row in BESSEL_TABLE {
        let u = row[0];
        let got = [
            specfun::j0(u).unwrap(),
            specfun::y0(u).unwrap(),
            specfun::j1(u).unwrap(),
            specfun::y1(u).unwrap(),
        ];
        for (g, e) in got.iter().zip(&row[1..]) {
            assert!((g - e).abs() <= 1e-14 * e.abs().max(1.0), "u={u}: {g} vs {e}");
        }
    }
}

#[test]
fn small_argument_expansions() {
    let us: Vec<f64> = (0..8).map(|k| 1e-2 * 2f64.powi(k)).collect();
    let dj: Vec<f64> = us.iter().map(|&u| (specfun::j0(u).unwrap() - j0_series3(u)).abs()).collect();
    let dy: Vec<f64> = us.iter().map(|&u| (specfun::y0(u).unwrap() - y0_leading(u)).abs()).collect();
    // remainders u⁶ and u² log u
    assert!((log_log_slope(&us[3..], &dj[3..]) - 6.0).abs() < 0.1);
    let s = log_log_slope(&us, &dy);
    assert!(s > 1.6 && s < 2.0, "slope {s}");
}

#[test]
fn schrodinger_kernel_splits_into_g_and_log() {
    // R0^± = g^± + G0 + O(z² r² log)
    for sign in [Sign::Plus, Sign::Minus] {
        let (z, r) = (1e-3, 0.7);
        let k = schrodinger_kernel(z, sign, r).unwrap();
        let lead = g_pm(z, sign).unwrap() + g0_kernel(r);
        assert!((k - lead).norm() < 1e-5);
    }
}

#[test]
fn resolvent_jumps_conjugate() {
    let p = DiracParams::new(1.0, 0.8, Sign::Plus).unwrap();
    let q = DiracParams::new(1.0, 0.8, Sign::Minus).unwrap();
    let (x, y) = ([0.3, -0.2], [-1.1, 0.5]);
    let a = dirac_kernel(&p, x, y).unwrap();
    let b = dirac_kernel(&q, y, x).unwrap();
    // R⁻(y, x) = R⁺(x, y)*
    assert!((a - b.adjoint()).max_abs() < 1e-14);
}

#[test]
fn threshold_kernel_is_limit_of_dirac_kernel() {
    let m = 1.0;
    let (x, y) = ([0.4, 0.1], [-0.3, 0.9]);
    let g0 = calg0_kernel(x, y, m).unwrap();
    let mut prev = f64::INFINITY;
    for &z in &[1e-2, 1e-3, 1e-4] {
        let p = DiracParams::new(m, z, Sign::Plus).unwrap();
        let g = (2.0 * m) * g_pm(z, Sign::Plus).unwrap();
        let d = dirac_kernel(&p, x, y).unwrap() - m11().scale(g);
        let err = (d - g0).max_abs();
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 1e-6);
}

#[test]
fn dirac_symbol_squares_to_energy() {
    let xi = [0.3, -2.1];
    let a = alpha_dot(xi) + beta();
    let e = xi[0] * xi[0] + xi[1] * xi[1] + 1.0;
    assert!((a * a - Mat2::identity().scale_re(e)).max_abs() < 1e-14);
}

#[test]
fn zero_potential_is_s_wave_resonant() {
    let g = Grid::new(10, 4.0).unwrap();
    let f = factorize(&sample(&PotentialSpec::zero(), &g).unwrap()).unwrap();
    assert_eq!(analyze(&f, 1.0, 1e-6).unwrap().kind(), ThresholdKind::SWaveResonance);
}

#[test]
fn small_bump_is_regular_with_feshbach_inverse() {
    let g = Grid::new(10, 6.0).unwrap();
    let spec = PotentialSpec::gaussian(0.5, 1.0, Mat2::identity());
    let f = factorize(&sample(&spec, &g).unwrap()).unwrap();
    let mut a = analyze(&f, 1.0, 1e-6).unwrap();
    assert_eq!(a.kind(), ThresholdKind::Regular);
    let zs = [1e-4, 1e-3, 1e-2];
    let res: Vec<f64> = zs
        .iter()
        .map(|&z| a.invert_m_expansion(z, Sign::Plus).unwrap().residual)
        .collect();
    assert!(log_log_slope(&zs, &res) >= 0.4);
}

#[test]
fn interpolation_constant_is_the_supremum() {
    // sup over a, b > 2 of min(1, a/b)·log²b/log²a, attained at a → 2, b = e²
    let mut best: f64 = 0.0;
    for i in 0..200 {
        let a = 2.0 + 1e-9 + 0.05 * i as f64;
        for k in 0..400 {
            let b = 2.0 + 0.05 * k as f64;
            best = best.max((a / b).min(1.0) * (b.ln() / a.ln()).powi(2));
        }
    }
    let c = interpolation_constant();
    assert_relative_eq!(c, 2.2534613, epsilon = 1e-6);
    assert!(best <= c && best > c - 1e-3);
}

#[test]
fn dyadic_pieces_decay_at_large_time() {
    let k = FreeJump {
        mass: 1.0,
        offsets: vec![[0.0, 0.0], [1.0, 0.0]],
    };
    let times = [10.0, 20.0, 40.0, 80.0];
    for j in 1..=3 {
        let rows = dyadic_decay_probe(&k, 1.0, j, &times, 8).unwrap();
        let m: Vec<f64> = rows.iter().map(|r| r.measured).collect();
        assert!(log_log_slope(&times, &m) < -0.5, "j={j}: {m:?}");
        for r in &rows {
            assert!(r.measured <= 10.0 * r.envelope);
        }
    }
}

#[test]
fn free_kernel_is_finite_off_diagonal() {
    let p = DiracParams::new(2.0, 0.1, Sign::Minus).unwrap();
    let k = dirac_kernel(&p, [1.0, 1.0], [1.0, 1.0 + 1e-9]).unwrap();
    assert!(k.is_finite());
    assert!(dirac_kernel(&p, [1.0, 1.0], [1.0, 1.0]).is_err());
}
