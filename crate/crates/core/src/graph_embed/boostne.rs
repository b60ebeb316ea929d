use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CitationGraph;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

const NMF_EPS: f64 = 1e-10;

#[derive(Debug, Clone, serde::Serialize)]
pub struct BoostneConfig {
    pub dim: usize,
    pub levels: usize,
    pub nmf_iterations: usize,
    pub seed: u64,
}

impl Default for BoostneConfig {
    fn default() -> Self {
        BoostneConfig {
            dim: 300,
            levels: 6,
            nmf_iterations: 50,
            seed: 1,
        }
    }
}

/// Nonnegative factorization X ≈ W·H by Lee–Seung multiplicative updates.
/// Returns (W, H, per-iteration Frobenius reconstruction errors including the
/// initial one), so callers can observe the monotone descent.
pub fn nmf_multiplicative(
    x: &Array2<f64>,
    rank: usize,
    iterations: usize,
    seed: u64,
) -> (Array2<f64>, Array2<f64>, Vec<f64>) {
    let (n, m) = x.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Uniform init scaled so E[(WH)_ij] matches the mean of X.
    let mean = x.mean().unwrap_or(0.0).max(NMF_EPS);
    let scale = 2.0 * (mean / rank as f64).sqrt();
    let mut w = Array2::from_shape_fn((n, rank), |_| rng.random::<f64>() * scale);
    let mut h = Array2::from_shape_fn((rank, m), |_| rng.random::<f64>() * scale);

    let frob = |w: &Array2<f64>, h: &Array2<f64>| -> f64 {
        (x - &w.dot(h)).mapv(|v| v * v).sum().sqrt()
    };
    let mut errors = Vec::with_capacity(iterations + 1);
    errors.push(frob(&w, &h));
    for _ in 0..iterations {
        let numer = w.t().dot(x);
        let denom = w.t().dot(&w).dot(&h) + NMF_EPS;
        h = h * numer / denom;
        let numer = x.dot(&h.t());
        let denom = w.dot(&h.dot(&h.t())) + NMF_EPS;
        w = w * numer / denom;
        errors.push(frob(&w, &h));
    }
    (w, h, errors)
}

/// Row-normalized adjacency (transition) matrix; rows of isolated nodes
/// stay zero.
pub fn transition_matrix(graph: &CitationGraph) -> Array2<f64> {
    let n = graph.node_count();
    let mut x = Array2::zeros((n, n));
    for i in 0..n as u32 {
        let neighbors = graph.neighbors_of(i);
        if neighbors.is_empty() {
            continue;
        }
        let p = 1.0 / neighbors.len() as f64;
        for &j in neighbors {
            x[(i as usize, j as usize)] = p;
        }
    }
    x
}

/// BoostNE: factorizes the transition matrix, then repeatedly factorizes the
/// clamped residual `max(X − WH, 0)` — a gradient-boosting chain of NMF
/// stages. The per-level W rows (dim/levels each) concatenate into the final
/// node vectors.
pub fn boostne(graph: &CitationGraph, config: &BoostneConfig) -> Result<EmbeddingMatrix> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if config.levels == 0 {
        return Err(Error::InvalidParameter("levels must be >= 1".into()));
    }
    if config.dim % config.levels != 0 {
        return Err(Error::InvalidParameter(format!(
            "dim {} not divisible by levels {}",
            config.dim, config.levels
        )));
    }
    let rank = config.dim / config.levels;
    let n = graph.node_count();
    let mut x = transition_matrix(graph);
    let mut vectors: Vec<Vec<f64>> = vec![Vec::with_capacity(config.dim); n];
    for level in 0..config.levels {
        let (w, h, _) = nmf_multiplicative(&x, rank, config.nmf_iterations, config.seed + level as u64);
        for (i, target) in vectors.iter_mut().enumerate() {
            target.extend(w.row(i).iter());
        }
        x = (&x - &w.dot(&h)).mapv(|v| v.max(0.0));
    }
    let mut matrix = EmbeddingMatrix::new("boostne", config.dim);
    for (id, row) in graph.node_ids().iter().zip(vectors) {
        matrix.insert(id.clone(), row)?;
    }
    Ok(matrix)
}
