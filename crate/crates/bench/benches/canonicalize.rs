use std::hint::black_box;

use arctext::testgen::{braid, random_dag, spec_pool};
use arctext::{parse_description, render_description};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn render(c: &mut Criterion) {
    let mut group = c.benchmark_group("render");
    let mut rng = StdRng::seed_from_u64(1);
    let pool = spec_pool(&mut rng, 12);
    for n in [10, 50, 200] {
        let g = random_dag(&mut rng, n, n / 4, &pool);
        group.bench_with_input(BenchmarkId::new("random_dag", n), &g, |b, g| {
            b.iter(|| render_description(black_box(g)).unwrap())
        });
    }
    for k in [4, 8, 12] {
        let g = braid(k);
        group.bench_with_input(BenchmarkId::new("braid", k), &g, |b, g| {
            b.iter(|| render_description(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn parse(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(2);
    let pool = spec_pool(&mut rng, 12);
    let text = render_description(&random_dag(&mut rng, 200, 50, &pool))
        .unwrap()
        .to_string();
    c.bench_function("parse/random_dag/200", |b| {
        b.iter(|| parse_description(black_box(&text)).unwrap())
    });
}

criterion_group!(benches, render, parse);
criterion_main!(benches);
