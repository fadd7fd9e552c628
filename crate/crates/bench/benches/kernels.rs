//! Microbenchmarks for the hot kernels: alias tables, biased walks,
//! skip-gram training, and the randomized truncated SVD.

use std::io::Write;

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use netemb::graph::{build_alias_table, load_edge_list, Graph};
use netemb::node2vec::{generate_walks, train_sgns, Node2vecParams};
use netemb::numerics::{truncated_svd, SparseMatrix};
use netemb::TrainMode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Erdos-Renyi-ish graph written to a temp edge list and loaded back,
/// so the benchmark exercises the same CSR layout the library builds.
fn random_graph(n: usize, avg_degree: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = std::env::temp_dir();
    path.push(format!("netemb_bench_{n}_{seed}.edges"));
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path).expect("temp edge list"));
    // a ring keeps the graph connected; extra random edges set the density
    for u in 0..n {
        writeln!(file, "{} {}", u, (u + 1) % n).unwrap();
    }
    for _ in 0..(n * avg_degree / 2) {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            writeln!(file, "{u} {v}").unwrap();
        }
    }
    drop(file);
    let (graph, _) = load_edge_list(&path, false, false).expect("load");
    let _ = std::fs::remove_file(&path);
    graph
}

fn bench_alias(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let weights: Vec<f64> = (0..1000).map(|_| rng.gen_range(0.05..5.0)).collect();
    c.bench_function("alias_build_1000", |b| {
        b.iter(|| build_alias_table(black_box(&weights)).unwrap())
    });
    let table = build_alias_table(&weights).unwrap();
    c.bench_function("alias_sample_10000", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut acc = 0usize;
            for _ in 0..10_000 {
                acc += table.sample(&mut rng);
            }
            black_box(acc)
        })
    });
}

fn bench_walks(c: &mut Criterion) {
    let graph = random_graph(500, 10, 3);
    let params = Node2vecParams {
        d: 32,
        num_walks: 2,
        walk_len: 40,
        p: 0.5,
        q: 2.0,
        seed: 7,
        ..Node2vecParams::default()
    };
    c.bench_function("walks_500n_2x40", |b| {
        b.iter(|| generate_walks(black_box(&graph), black_box(&params)).unwrap())
    });
}

fn bench_sgns(c: &mut Criterion) {
    let graph = random_graph(300, 8, 4);
    let params = Node2vecParams {
        d: 32,
        num_walks: 2,
        walk_len: 30,
        window: 5,
        negatives: 3,
        epochs: 1,
        seed: 7,
        ..Node2vecParams::default()
    };
    let corpus = generate_walks(&graph, &params).unwrap();
    c.bench_function("sgns_epoch_300n_d32", |b| {
        b.iter(|| train_sgns(black_box(&corpus), black_box(&params), TrainMode::Deterministic).unwrap())
    });
}

fn bench_svd(c: &mut Criterion) {
    let n = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for row in rows.iter_mut() {
        for _ in 0..20 {
            row.push((rng.gen_range(0..n) as u32, rng.gen_range(-1.0..1.0)));
        }
    }
    let m = SparseMatrix::from_rows(n, n, rows).unwrap();
    c.bench_function("truncated_svd_500x500_k32", |b| {
        b.iter(|| truncated_svd(black_box(&m), 32, 8, 2, 11).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_alias, bench_walks, bench_sgns, bench_svd
}
criterion_main!(kernels);
