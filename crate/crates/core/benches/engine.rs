#![allow(clippy::type_complexity)]

//! Parallel kernels against one worker thread on the same workloads.
//! Built with `--no-default-features` only the sequential fallback is timed.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qtheta::corpus::verify_named_at;
use qtheta::multiplier::{jacobi, power, theta_dim_basis};
use qtheta::qtorus::series::Region;

fn workloads() -> Vec<(&'static str, Box<dyn Fn() + Send + Sync>)> {
    let l = power(&jacobi(), 6).unwrap();
    let basis = theta_dim_basis(&l).unwrap();
    vec![
        ("E025", Box::new(|| assert!(verify_named_at("E025", 5, 25, false).unwrap().passed()))),
        ("E332", Box::new(|| assert!(verify_named_at("E332", 4, 16, false).unwrap().passed()))),
        ("E313", Box::new(|| assert!(verify_named_at("E313", 3, 20, false).unwrap().passed()))),
        (
            "theta_level6",
            Box::new(move || {
                for th in &basis.basis {
                    th.coeffs_on(&Region::cube(1, 40), 400).unwrap();
                }
            }),
        ),
    ]
}

fn engine(c: &mut Criterion) {
    let mut g = c.benchmark_group("engine");
    g.sample_size(10);
    for (name, work) in workloads() {
        #[cfg(feature = "parallel")]
        {
            g.bench_function(BenchmarkId::new("parallel", name), |b| b.iter(&work));
            let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            g.bench_function(BenchmarkId::new("sequential", name), |b| b.iter(|| one.install(&work)));
        }
        #[cfg(not(feature = "parallel"))]
        g.bench_function(BenchmarkId::new("sequential", name), |b| b.iter(&work));
    }
    g.finish();
}

criterion_group!(benches, engine);
criterion_main!(benches);
