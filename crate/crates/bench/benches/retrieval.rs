use std::hint::black_box;

use caserec_bench::bench_corpus;
use caserec_core::{
    build_relevance, evaluate, fit_tfidf, matrix_run, score_sum_top_k, top_k, top_k_sparse,
    EmbeddingMatrix,
};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(n: usize, dim: usize, name: &str, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = EmbeddingMatrix::new(name, dim);
    for i in 0..n {
        let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        m.insert(format!("doc{i:04}"), v).unwrap();
    }
    m
}

fn bench_retrieval(c: &mut Criterion) {
    let mut group = c.benchmark_group("retrieval");
    group.sample_size(20);

    let dense = random_matrix(1000, 100, "dense", 5);
    group.bench_function("top_k_dense_1000x100", |b| {
        b.iter(|| top_k(black_box("doc0000"), &dense, 5).unwrap())
    });

    let a = random_matrix(1000, 50, "a", 6);
    let bm = random_matrix(1000, 50, "b", 7);
    group.bench_function("score_sum_1000x2x50", |b| {
        b.iter(|| score_sum_top_k(black_box("doc0000"), &[&a, &bm], 5).unwrap())
    });

    let corpus = bench_corpus(4, 50);
    let sparse = fit_tfidf(&corpus, 50_000).unwrap();
    let seed = corpus.documents.keys().next().unwrap().clone();
    group.bench_function("top_k_sparse_200_docs", |b| {
        b.iter(|| top_k_sparse(black_box(seed.as_str()), &sparse, 5).unwrap())
    });

    let judgments = build_relevance(&corpus);
    let queries: Vec<&str> = judgments.queries().collect();
    let small = random_matrix(200, 32, "small", 8);
    let renamed: Vec<String> = corpus.documents.keys().cloned().collect();
    let mut aligned = EmbeddingMatrix::new("aligned", 32);
    for (i, id) in renamed.iter().enumerate() {
        aligned
            .insert(id.clone(), small.get(&format!("doc{i:04}")).unwrap().to_vec())
            .unwrap();
    }
    let run = matrix_run("aligned", &aligned, &queries, 5).unwrap();
    group.bench_function("evaluate_200_queries", |b| {
        b.iter(|| evaluate(black_box(&run), &judgments, corpus.total_docs).unwrap())
    });

    group.finish();
}

criterion_group!(benches, bench_retrieval);
criterion_main!(benches);
