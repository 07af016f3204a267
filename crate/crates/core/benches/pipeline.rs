//! Parallel against sequential execution for the heavy stages of a fit.
//! Without the `parallel` feature both variants run the sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pada::forecast::{credible_bands, BandSpec, Horizon};
use pada::pipeline::{estimate_preliminary, fit};
use pada::sim::{generate, SimSpec};
use pada::{FtsDataset, ModelConfig, Parallelism};

const MODES: [(&str, Parallelism); 2] = [("parallel", Parallelism::Parallel), ("sequential", Parallelism::Sequential)];

fn data() -> FtsDataset {
    generate(&SimSpec { curves: 200, seed: 1, ..SimSpec::default() }).unwrap().training()
}

fn cfg(par: Parallelism) -> ModelConfig {
    ModelConfig { components: Some(1), bandwidth_mu: Some(0.05), parallelism: par, ..ModelConfig::default() }
}

fn smoothing(c: &mut Criterion) {
    let d = data();
    let mut g = c.benchmark_group("spectral_density");
    g.sample_size(10);
    for (name, par) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &par, |b, &par| {
            b.iter(|| estimate_preliminary(black_box(&d), &cfg(par)).unwrap())
        });
    }
    g.finish();
}

fn full_fit(c: &mut Criterion) {
    let d = data();
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    for (name, par) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &par, |b, &par| b.iter(|| fit(black_box(&d), &cfg(par)).unwrap()));
    }
    g.finish();
}

fn bands(c: &mut Criterion) {
    let m = fit(&data(), &cfg(Parallelism::Parallel)).unwrap();
    let mut g = c.benchmark_group("credible_bands");
    g.sample_size(10);
    for (name, par) in MODES {
        let spec = BandSpec { draws: 500, parallelism: par, ..BandSpec::new(0.95, 3) };
        g.bench_with_input(BenchmarkId::from_parameter(name), &spec, |b, spec| {
            b.iter(|| credible_bands(&m.scores, &m.bank, &m.mean, m.sigma2, spec, Horizon::Reconstruction).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, smoothing, full_fit, bands);
criterion_main!(benches);
