use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use dirac2d_core::algebra::{beta, Mat2};
use dirac2d_core::evolve::{SpinorField, SplitStepper};
use dirac2d_core::freedirac::{dirac_kernel, DiracParams};
use dirac2d_core::oscquad::{osc_integral, smooth_step, Amplitude, OscOptions, Phase};
use dirac2d_core::potential::{factorize, sample, PotentialSpec};
use dirac2d_core::threshold::{build_m, LocalFactorization};
use dirac2d_core::{specfun, Grid, Sign, C64};

fn bessel(c: &mut Criterion) {
    let us: Vec<f64> = (1..=1000).map(|k| 0.037 * k as f64).collect();
    c.bench_function("bessel_j0_y0_1000", |b| {
        b.iter(|| {
            us.iter()
                .map(|&u| specfun::j0(u).unwrap() + specfun::y0(u).unwrap())
                .sum::<f64>()
        })
    });
    let p = DiracParams::new(1.0, 0.5, Sign::Plus).unwrap();
    c.bench_function("dirac_kernel", |b| {
        b.iter(|| dirac_kernel(&p, black_box([0.7, -1.3]), [0.0, 0.0]).unwrap())
    });
}

fn split_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("split_step");
    for n in [128usize, 256] {
        let g = Grid::new(n, n as f64 / 4.0).unwrap();
        let v = sample(&PotentialSpec::gaussian(1.0, 1.0, beta()), &g).unwrap();
        let mut st = SplitStepper::new(g, 1.0, &v, 0.1).unwrap();
        let mut psi = SpinorField::gaussian(g, [0.0, 0.0], 1.5, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        group.bench_function(format!("{n}x{n}"), |b| b.iter(|| st.advance(&mut psi, 1).unwrap()));
    }
    group.finish();
}

fn m_assembly(c: &mut Criterion) {
    let g = Grid::new(16, 6.0).unwrap();
    let f = factorize(&sample(&PotentialSpec::gaussian(0.5, 1.0, Mat2::identity()), &g).unwrap()).unwrap();
    let f = LocalFactorization::from_support(&f);
    c.bench_function("build_m_16x16", |b| {
        b.iter(|| build_m(black_box(1e-3), Sign::Plus, &f, 1.0).unwrap())
    });
}

fn oscillatory(c: &mut Criterion) {
    let a = Amplitude::values_only(0.2, |z| C64::new(z / z.hypot(1.0) * smooth_step(z / 0.1), 0.0));
    let opts = OscOptions::default();
    c.bench_function("osc_integral_t1e3", |b| {
        b.iter(|| osc_integral(&a, black_box(1e3), Phase::Mass { m: 1.0 }, &opts).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bessel, split_step, m_assembly, oscillatory
}
criterion_main!(benches);
