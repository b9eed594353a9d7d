use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use entsum::coupling::{solve_three_marginal, DEFAULT_LP_CAP};
use entsum::decompose::decompose;
use entsum::dist::convolve;
use entsum::dstar::d_star;
use entsum::fuzz::run_fuzz;
use entsum::metrics::{d_ent, energy};
use entsum::structure::extract_structured_set;
use entsum::{AlgoConfig, Algorithm, CouplingProblem, DStarConfig, FuzzConfig, GroupContext, Sign, Suite};
use entsum_bench::{lattice_sets, law_pair};

fn distances(c: &mut Criterion) {
    let mut g = c.benchmark_group("distance");
    for n in [4, 16, 64] {
        let (p, q) = law_pair(&GroupContext::z(2), n, n as u64);
        g.bench_with_input(BenchmarkId::new("convolve", n), &n, |b, _| {
            b.iter(|| convolve(black_box(&p), black_box(&q), Sign::Minus).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("d_ent", n), &n, |b, _| b.iter(|| d_ent(&p, &q).unwrap()));
    }
    for n in [8, 32] {
        let a = &lattice_sets(2, n, 1)[0];
        g.bench_with_input(BenchmarkId::new("energy", n), &n, |b, _| b.iter(|| energy(black_box(a)).unwrap()));
    }
    g.finish();
}

fn optimizers(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimizer");
    g.sample_size(20);
    for n in [3, 6, 10] {
        let (p, q) = law_pair(&GroupContext::z(1), n, 100 + n as u64);
        g.bench_with_input(BenchmarkId::new("d_star", n), &n, |b, _| {
            b.iter(|| d_star(&p, &q, &DStarConfig::default()).unwrap())
        });
        let ctx = GroupContext::zmod(&[7]).unwrap();
        let (p1, p2) = law_pair(&ctx, n.min(7), 200 + n as u64);
        let p3 = law_pair(&ctx, n.min(7), 300 + n as u64).0;
        let prob = CouplingProblem::new(p1, p2, p3).unwrap();
        g.bench_with_input(BenchmarkId::new("three_marginal_lp", n), &n, |b, _| {
            b.iter(|| solve_three_marginal(&prob, DEFAULT_LP_CAP).unwrap())
        });
        let (x, y) = law_pair(&GroupContext::z(2), n, 400 + n as u64);
        g.bench_with_input(BenchmarkId::new("extraction", n), &n, |b, _| {
            b.iter(|| extract_structured_set(&x, &y, 4.0, None).unwrap())
        });
    }
    g.finish();
}

fn decompositions(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose");
    g.sample_size(10);
    let cfg = AlgoConfig::default();
    for n in [8, 16] {
        let sets = lattice_sets(3, n, 2);
        for algo in [Algorithm::Skew, Algorithm::Dim, Algorithm::Pfr] {
            g.bench_with_input(BenchmarkId::new(format!("{algo:?}").to_lowercase(), n), &n, |b, _| {
                b.iter(|| decompose(algo, &sets[0], &sets[1], &cfg).unwrap())
            });
        }
    }
    g.finish();
}

fn fuzz(c: &mut Criterion) {
    let mut g = c.benchmark_group("fuzz");
    g.sample_size(10);
    let cfg = FuzzConfig {
        trials: 50,
        suites: vec![Suite::Sandwich, Suite::Triangle, Suite::Projection],
        ..FuzzConfig::default()
    };
    g.bench_function("three_suites_50_trials", |b| b.iter(|| run_fuzz(&cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, distances, optimizers, decompositions, fuzz);
criterion_main!(benches);
