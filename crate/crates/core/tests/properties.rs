use dirac2d_core::algebra::Mat2;
use dirac2d_core::evolve::{
    pac_project, smooth_power, split_step, CheckpointHeader, DenseSpectral, FreePropagator,
    Smoothing, SpinorField,
};
use dirac2d_core::freedirac::free_symbol;
use dirac2d_core::oscquad::{dyadic_cutoffs, osc_integral, Amplitude, Jet, OscOptions, Phase};
use dirac2d_core::potential::{decompose, sample, HermitianField, PotentialSpec};
use dirac2d_core::{Grid, C64};
use proptest::prelude::*;

fn hermitian(a: f64, d: f64, re: f64, im: f64) -> Mat2 {
    Mat2::new(
        C64::new(a, 0.0),
        C64::new(re, im),
        C64::new(re, -im),
        C64::new(d, 0.0),
    )
}

fn packet(g: Grid, c: [f64; 2], w: f64, phase: f64) -> SpinorField {
    SpinorField::gaussian(
        g,
        c,
        w,
        [C64::new(1.0, 0.0), C64::from_polar(0.5, phase)],
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_symbol_is_unitary(x in -50.0..50.0f64, y in -50.0..50.0f64, t in -100.0..100.0f64, m in 0.1..5.0f64) {
        let u = free_symbol([x, y], t, m);
        prop_assert!((u * u.adjoint() - Mat2::identity()).max_abs() < 1e-12);
    }

    #[test]
    fn free_symbol_is_a_group(x in -5.0..5.0f64, y in -5.0..5.0f64, s in -10.0..10.0f64, t in -10.0..10.0f64) {
        let lhs = free_symbol([x, y], s, 1.0) * free_symbol([x, y], t, 1.0);
        prop_assert!((lhs - free_symbol([x, y], s + t, 1.0)).max_abs() < 1e-12);
    }

    #[test]
    fn decompose_roundtrip(a in -3.0..3.0f64, d in -3.0..3.0f64, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let m = hermitian(a, d, re, im);
        prop_assume!(m.max_abs() > 1e-6);
        let (u, v) = decompose(m).unwrap();
        prop_assert!(u.iter().all(|s| s.abs() == 1.0 || *s == 0.0));
        let back = v.adjoint() * Mat2::real_diag(u[0], u[1]) * v;
        prop_assert!((back - m).max_abs() < 1e-12 * (1.0 + m.max_abs()));
    }

    #[test]
    fn partition_sums_to_one(z in 0.0..8.0f64, j_max in 1usize..6) {
        let p = dyadic_cutoffs(8.0, j_max).unwrap();
        let s: f64 = (0..=j_max).map(|j| p.piece(j, z)).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!((0..=j_max).all(|j| p.piece(j, z) >= -1e-15));
    }

    #[test]
    fn osc_integral_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, t in 1.0..40.0f64) {
        let opts = OscOptions::default();
        let f = Amplitude::analytic(3.0, |z| Jet::real((-z * z).exp() * (3.0 - z).powi(3), 0.0, 0.0));
        let g = Amplitude::analytic(3.0, |z| Jet::real(z * (3.0 - z).powi(4), 0.0, 0.0));
        let ph = Phase::Mass { m: 1.0 };
        let fg = f.scaled(C64::new(a, 0.0)).sum(&g.scaled(C64::new(0.0, b)));
        let lhs = osc_integral(&fg, t, ph, &opts).unwrap().value;
        let rhs = osc_integral(&f, t, ph, &opts).unwrap().value * a
            + osc_integral(&g, t, ph, &opts).unwrap().value * C64::new(0.0, b);
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn split_step_conserves_norm(q in -1.5..1.5f64, w in 0.5..2.0f64, cx in -2.0..2.0f64, dt in 0.01..0.1f64, steps in 1usize..40) {
        let t = steps as f64 * dt;
        let g = Grid::new(32, 8.0).unwrap();
        let v = sample(&PotentialSpec::gaussian(q, w, Mat2::identity()), &g).unwrap();
        let psi = packet(g, [cx, 0.0], 1.0, 0.3);
        let out = split_step(&psi, &v, 1.0, t, dt).unwrap();
        prop_assert!((out.norm_l2() / psi.norm_l2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_propagation_is_unitary_and_reversible(t in -20.0..20.0f64, phase in 0.0..6.0f64) {
        let g = Grid::new(32, 8.0).unwrap();
        let psi = packet(g, [0.5, -0.5], 1.0, phase);
        let mut fp = FreePropagator::new(g, 1.3);
        let fwd = fp.evolve(&psi, t).unwrap();
        prop_assert!((fwd.norm_l2() / psi.norm_l2() - 1.0).abs() < 1e-12);
        let back = fp.evolve(&fwd, -t).unwrap();
        prop_assert!(back.sub(&psi).norm_l2() < 1e-11 * psi.norm_l2());
    }
}

#[test]
fn free_split_step_matches_exact_propagator() {
    let g = Grid::new(32, 8.0).unwrap();
    let psi = packet(g, [0.0, 0.0], 1.0, 1.0);
    let out = split_step(&psi, &HermitianField::zero(g), 1.0, 3.0, 0.1).unwrap();
    let exact = FreePropagator::new(g, 1.0).evolve(&psi, 3.0).unwrap();
    assert!(out.sub(&exact).norm_l2() < 1e-10 * psi.norm_l2());
}

#[test]
fn checkpoint_roundtrip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.bin");
    let g = Grid::new(16, 5.0).unwrap();
    let psi = packet(g, [0.3, 0.1], 0.7, 2.0);
    let head = CheckpointHeader {
        mass: 1.5,
        t: 12.25,
        dt: 0.05,
    };
    psi.write_checkpoint(&path, &head).unwrap();
    let (back, h) = SpinorField::read_checkpoint(&path).unwrap();
    assert_eq!(h, head);
    assert_eq!(back.grid, g);
    assert_eq!(back.to_vector(), psi.to_vector());

    let mut bytes = std::fs::read(&path).unwrap();
    bytes.push(0);
    std::fs::write(&path, bytes).unwrap();
    assert!(SpinorField::read_checkpoint(&path).is_err());
}

#[test]
fn dense_free_spectrum_is_symmetric_and_gapped() {
    let g = Grid::new(8, 4.0).unwrap();
    let s = DenseSpectral::new(g, &HermitianField::zero(g), 1.0).unwrap();
    let e = &s.eigenvalues;
    let n = e.len();
    for k in 0..n {
        assert!((e[k] + e[n - 1 - k]).abs() < 1e-10);
        assert!(e[k].abs() >= 1.0 - 1e-10);
    }
    assert_eq!(s.gap_eigenvalue_count(1e-6), 0);
}

#[test]
fn dense_evolution_matches_split_step() {
    let g = Grid::new(16, 6.0).unwrap();
    let v = sample(&PotentialSpec::gaussian(0.4, 1.0, Mat2::identity()), &g).unwrap();
    let psi = packet(g, [0.5, 0.0], 1.2, 0.0);
    let dense = DenseSpectral::new(g, &v, 1.0).unwrap().evolve(&psi, 2.0).unwrap();
    let coarse = split_step(&psi, &v, 1.0, 2.0, 0.02).unwrap();
    let fine = split_step(&psi, &v, 1.0, 2.0, 0.01).unwrap();
    let e1 = dense.sub(&coarse).norm_l2();
    let e2 = dense.sub(&fine).norm_l2();
    // second order in dt
    assert!(e2 < 1e-3 * psi.norm_l2());
    assert!((e1 / e2 - 4.0).abs() < 0.5, "ratio {}", e1 / e2);
}

#[test]
fn pac_projection_is_idempotent_and_removes_bound_states() {
    let g = Grid::new(12, 5.0).unwrap();
    // deep attractive well binds states inside the gap
    let v = sample(&PotentialSpec::gaussian(-3.0, 1.0, Mat2::identity()), &g).unwrap();
    let spec = DenseSpectral::new(g, &v, 1.0).unwrap();
    assert!(spec.gap_eigenvalue_count(1e-6) > 0);
    let psi = packet(g, [0.0, 0.0], 1.0, 0.0);
    let once = pac_project(&spec, &psi, 1e-6).unwrap();
    assert_eq!(once.removed, spec.gap_eigenvalue_count(1e-6));
    assert!(once.field.norm_l2() < psi.norm_l2());
    let twice = pac_project(&spec, &once.field, 1e-6).unwrap();
    assert!(twice.field.sub(&once.field).norm_l2() < 1e-12 * psi.norm_l2());
}

#[test]
fn dense_and_fourier_smoothing_agree_for_free_operator() {
    let g = Grid::new(12, 5.0).unwrap();
    let spec = DenseSpectral::new(g, &HermitianField::zero(g), 1.0).unwrap();
    let psi = packet(g, [0.4, -0.2], 0.9, 1.0);
    let a = smooth_power(Smoothing::Dense(&spec), 2.5, &psi).unwrap();
    let b = smooth_power(Smoothing::Free { mass: 1.0 }, 2.5, &psi).unwrap();
    assert!(a.sub(&b).norm_l2() < 1e-12 * psi.norm_l2());
}
