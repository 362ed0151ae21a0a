use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use rnrr_bench::{grid_matrix, tube_pair};
use rnrr_core::graph::build_graph;
use rnrr_core::solver::register;
use rnrr_core::sparse::{Ordering, SymbolicCholesky};
use rnrr_core::spatial::KdTree;
use rnrr_core::{Sampler, SolverParams};

fn cholesky(c: &mut Criterion) {
    let a = grid_matrix(60);
    let mut g = c.benchmark_group("cholesky_3600");
    for (name, ordering) in [("natural", Ordering::Natural), ("rcm", Ordering::ReverseCuthillMcKee)] {
        g.bench_function(format!("analyze_{name}"), |b| b.iter(|| SymbolicCholesky::analyze(&a, ordering)));
        let sym = Arc::new(SymbolicCholesky::analyze(&a, ordering));
        g.bench_function(format!("numeric_{name}"), |b| b.iter(|| sym.factor(&a).unwrap()));
    }
    g.finish();
}

fn graph_and_search(c: &mut Criterion) {
    let (s, t) = tube_pair(36, 40);
    let radius = 5.0 * s.mean_edge_length();
    c.bench_function("graph_pca_1440", |b| b.iter(|| build_graph(&s, radius, Sampler::Pca).unwrap()));
    c.bench_function("graph_farthest_1440", |b| b.iter(|| build_graph(&s, radius, Sampler::Farthest).unwrap()));
    let tree = KdTree::new(t.vertices.clone());
    c.bench_function("nearest_1440x1440", |b| {
        b.iter(|| s.vertices.iter().map(|p| tree.nearest(p).unwrap().0).sum::<usize>())
    });
}

fn registration(c: &mut Criterion) {
    let (s, t) = tube_pair(36, 40);
    let mut g = c.benchmark_group("register_tube_1440");
    g.sample_size(10);
    for (name, fixed_nu) in [("annealed", false), ("fixed_nu", true)] {
        let p = SolverParams {
            fixed_nu,
            ..Default::default()
        };
        g.bench_function(name, |b| b.iter(|| register(&s, &t, &p).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, cholesky, graph_and_search, registration);
criterion_main!(benches);
