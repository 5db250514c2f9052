//! Serial vs rayon-parallel execution of the sampling estimators. Both
//! policies produce identical numbers; only wall time differs.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use susy_gci::covariance::CovarianceInterpolation;
use susy_gci::ensemble::ensemble_member;
use susy_gci::par::Execution;
use susy_gci::probability::{
    boundary_integral_estimates, cube_probability, Budget, Method, MethodChoice, SliceOptions,
};

const POLICIES: [(&str, Execution); 2] = [("serial", Execution::Serial), ("parallel", Execution::Parallel)];

fn correlation(n: usize, n1: usize) -> CovarianceInterpolation<f64> {
    CovarianceInterpolation::new(ensemble_member(n, 42, 0), n1).unwrap()
}

fn monte_carlo(c: &mut Criterion) {
    let ci = correlation(6, 3);
    let mut group = c.benchmark_group("cube_mc_n6_200k");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let budget = Budget { mc_samples: 200_000, execution: exec, ..Budget::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &budget, |b, budget| {
            b.iter(|| cube_probability(&ci, black_box(0.5), MethodChoice::Fixed(Method::MonteCarlo), budget).unwrap())
        });
    }
    group.finish();
}

fn quasi_monte_carlo(c: &mut Criterion) {
    let ci = correlation(8, 4);
    let mut group = c.benchmark_group("cube_qmc_n8_1024x32");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let budget = Budget { execution: exec, ..Budget::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &budget, |b, budget| {
            b.iter(|| cube_probability(&ci, black_box(0.5), MethodChoice::Fixed(Method::QuasiMonteCarlo), budget).unwrap())
        });
    }
    group.finish();
}

fn boundary_slices(c: &mut Criterion) {
    let ci = correlation(3, 1);
    let mut group = c.benchmark_group("boundary_slices_n3_200k");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let opts = SliceOptions { samples: 200_000, execution: exec, ..SliceOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| boundary_integral_estimates(&ci, black_box(0.5), opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, quasi_monte_carlo, boundary_slices);
criterion_main!(benches);
