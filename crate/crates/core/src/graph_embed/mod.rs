mod boostne;
mod poincare;

pub use boostne::{boostne, nmf_multiplicative, transition_matrix, BoostneConfig};
pub use poincare::{
    poincare_distance, poincare_distance_gradient, poincare_train, riemannian_update,
    PoincareConfig, PoincareEmbedding, PoincareTrainer,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CitationGraph;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::sgns::{self, TrainParams};

/// Truncated random walks over a citation graph, stored as node indices into
/// `nodes` (the graph's lexicographic node order).
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub nodes: Vec<String>,
    pub walks: Vec<Vec<u32>>,
    pub walks_per_node: usize,
    pub walk_length: usize,
}

/// `walks_per_node` uniform random walks from every node, each visiting up
/// to `walk_length` nodes; a walk stops early only at a degree-0 node. Every
/// start node draws from its own RNG stream, so walk generation could be
/// sharded by node without changing the output.
pub fn generate_walks(
    graph: &CitationGraph,
    walks_per_node: usize,
    walk_length: usize,
    seed: u64,
) -> WalkCorpus {
    let n = graph.node_count();
    let mut walks = Vec::with_capacity(n * walks_per_node);
    for node in 0..n as u32 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((1 << 32) | u64::from(node));
        for _ in 0..walks_per_node {
            let mut walk = Vec::with_capacity(walk_length);
            let mut current = node;
            walk.push(current);
            for _ in 1..walk_length {
                let neighbors = graph.neighbors_of(current);
                if neighbors.is_empty() {
                    break;
                }
                current = neighbors[rng.random_range(0..neighbors.len())];
                walk.push(current);
            }
            walks.push(walk);
        }
    }
    WalkCorpus {
        nodes: graph.node_ids().to_vec(),
        walks,
        walks_per_node,
        walk_length,
    }
}

/// Skip-gram hyperparameters for walk-based node embeddings.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DeepwalkConfig {
    pub dim: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub workers: usize,
    pub seed: u64,
}

impl Default for DeepwalkConfig {
    fn default() -> Self {
        DeepwalkConfig {
            dim: 300,
            walks_per_node: 10,
            walk_length: 80,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            workers: 1,
            seed: 1,
        }
    }
}

fn node_counts(walks: &[Vec<u32>], nodes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; nodes];
    for walk in walks {
        for &n in walk {
            counts[n as usize] += 1;
        }
    }
    counts
}

/// Trains skip-gram over walk sentences and keys the rows by node id.
fn embed_walks(
    nodes: &[String],
    walks: &[Vec<u32>],
    params: &TrainParams,
    method: &str,
) -> Result<EmbeddingMatrix> {
    let counts = node_counts(walks, nodes.len());
    let rows = sgns::train_skipgram(walks, &counts, params);
    let mut matrix = EmbeddingMatrix::new(method, params.dim);
    for (id, row) in nodes.iter().zip(rows) {
        matrix.insert(id.clone(), row)?;
    }
    Ok(matrix)
}

/// DeepWalk: skip-gram with negative sampling over truncated random walks.
pub fn deepwalk(graph: &CitationGraph, config: &DeepwalkConfig) -> Result<EmbeddingMatrix> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let walks = generate_walks(graph, config.walks_per_node, config.walk_length, config.seed);
    deepwalk_from_walks(&walks, config)
}

/// DeepWalk over a pre-generated walk corpus.
pub fn deepwalk_from_walks(
    walks: &WalkCorpus,
    config: &DeepwalkConfig,
) -> Result<EmbeddingMatrix> {
    let params = TrainParams {
        dim: config.dim,
        window: config.window,
        negatives: config.negatives,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        subsample: 0.0,
        workers: config.workers,
        seed: config.seed,
    };
    embed_walks(&walks.nodes, &walks.walks, &params, "deepwalk")
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct WalkletsConfig {
    pub dim: usize,
    pub num_scales: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub workers: usize,
    pub seed: u64,
}

impl Default for WalkletsConfig {
    fn default() -> Self {
        WalkletsConfig {
            dim: 300,
            num_scales: 3,
            walks_per_node: 10,
            walk_length: 80,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            workers: 1,
            seed: 1,
        }
    }
}

/// Sub-samples every `scale`-th node of each walk, once per starting offset.
fn stride_walks(walks: &[Vec<u32>], scale: usize) -> Vec<Vec<u32>> {
    let mut derived = Vec::new();
    for walk in walks {
        for offset in 0..scale.min(walk.len()) {
            derived.push(walk[offset..].iter().copied().step_by(scale).collect());
        }
    }
    derived
}

/// Walklets: multi-scale embeddings from strided walk corpora. Scale k skips
/// k-1 nodes between skip-gram neighbors; the per-scale vectors (dim /
/// num_scales each) are concatenated in scale order. With one scale this is
/// exactly DeepWalk.
pub fn walklets(graph: &CitationGraph, config: &WalkletsConfig) -> Result<EmbeddingMatrix> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let walks = generate_walks(graph, config.walks_per_node, config.walk_length, config.seed);
    walklets_from_walks(&walks, config)
}

/// Walklets over a pre-generated walk corpus.
pub fn walklets_from_walks(
    walks: &WalkCorpus,
    config: &WalkletsConfig,
) -> Result<EmbeddingMatrix> {
    if config.num_scales == 0 {
        return Err(Error::InvalidParameter("num_scales must be >= 1".into()));
    }
    if config.dim % config.num_scales != 0 {
        return Err(Error::InvalidParameter(format!(
            "dim {} not divisible by num_scales {}",
            config.dim, config.num_scales
        )));
    }
    let per_scale = config.dim / config.num_scales;
    let mut concatenated: Vec<Vec<f64>> = vec![Vec::with_capacity(config.dim); walks.nodes.len()];
    for scale in 1..=config.num_scales {
        let derived = stride_walks(&walks.walks, scale);
        let params = TrainParams {
            dim: per_scale,
            window: config.window,
            negatives: config.negatives,
            epochs: config.epochs,
            learning_rate: config.learning_rate,
            subsample: 0.0,
            workers: config.workers,
            seed: config.seed + (scale - 1) as u64,
        };
        let counts = node_counts(&derived, walks.nodes.len());
        let rows = sgns::train_skipgram(&derived, &counts, &params);
        for (target, row) in concatenated.iter_mut().zip(rows) {
            target.extend(row);
        }
    }
    let mut matrix = EmbeddingMatrix::new("walklets", config.dim);
    for (id, row) in walks.nodes.iter().zip(concatenated) {
        matrix.insert(id.clone(), row)?;
    }
    Ok(matrix)
}
