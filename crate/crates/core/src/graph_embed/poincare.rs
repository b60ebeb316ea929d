use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CitationGraph;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Node positions inside the open unit ball, kept at norm ≤ 1 − epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareEmbedding {
    pub dim: usize,
    pub epsilon: f64,
    points: BTreeMap<String, Vec<f64>>,
}

impl PoincareEmbedding {
    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.points.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.points.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.points.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The raw ball coordinates as a dense matrix, e.g. for cosine retrieval.
    pub fn to_matrix(&self, method: &str) -> EmbeddingMatrix {
        let mut matrix = EmbeddingMatrix::new(method, self.dim);
        for (id, p) in &self.points {
            matrix
                .insert(id.clone(), p.clone())
                .expect("ball points are finite and uniform-dimensional");
        }
        matrix
    }

    /// Rebuilds an embedding from stored coordinates, rejecting any point on
    /// or outside the unit sphere.
    pub fn from_matrix(matrix: &EmbeddingMatrix, epsilon: f64) -> Result<Self> {
        let mut points = BTreeMap::new();
        for (id, v) in matrix.iter() {
            let norm = norm_sq(v).sqrt();
            if norm >= 1.0 {
                return Err(Error::OutsideBall { norm });
            }
            points.insert(id.to_string(), v.to_vec());
        }
        Ok(PoincareEmbedding {
            dim: matrix.dim,
            epsilon,
            points,
        })
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Hyperbolic distance of the ball model:
/// `arcosh(1 + 2‖u−v‖² / ((1−‖u‖²)(1−‖v‖²)))`.
pub fn poincare_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    for p in [u, v] {
        let norm = norm_sq(p).sqrt();
        if norm >= 1.0 {
            return Err(Error::OutsideBall { norm });
        }
    }
    let diff_sq: f64 = u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
    let alpha = 1.0 - norm_sq(u);
    let beta = 1.0 - norm_sq(v);
    let gamma = 1.0 + 2.0 * diff_sq / (alpha * beta);
    Ok(gamma.acosh())
}

/// Euclidean gradients of [`poincare_distance`] with respect to both
/// arguments. At coincident points the distance is not differentiable and
/// both gradients are returned as zero.
pub fn poincare_distance_gradient(u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    for p in [u, v] {
        let norm = norm_sq(p).sqrt();
        if norm >= 1.0 {
            return Err(Error::OutsideBall { norm });
        }
    }
    let nu = norm_sq(u);
    let nv = norm_sq(v);
    let alpha = 1.0 - nu;
    let beta = 1.0 - nv;
    let diff_sq: f64 = u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
    let gamma = 1.0 + 2.0 * diff_sq / (alpha * beta);
    let denom_sq = gamma * gamma - 1.0;
    if denom_sq <= 0.0 {
        return Ok((vec![0.0; u.len()], vec![0.0; v.len()]));
    }
    let dot: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
    let root = denom_sq.sqrt();

    let cu = 4.0 / (beta * root);
    let au = (nv - 2.0 * dot + 1.0) / (alpha * alpha);
    let grad_u: Vec<f64> = u
        .iter()
        .zip(v)
        .map(|(x, y)| cu * (au * x - y / alpha))
        .collect();

    let cv = 4.0 / (alpha * root);
    let av = (nu - 2.0 * dot + 1.0) / (beta * beta);
    let grad_v: Vec<f64> = v
        .iter()
        .zip(u)
        .map(|(y, x)| cv * (av * y - x / beta))
        .collect();
    Ok((grad_u, grad_v))
}

/// One Riemannian SGD step: rescales the Euclidean gradient by the inverse
/// metric `(1−‖θ‖²)²/4`, steps, and projects back to norm 1 − epsilon if the
/// step left the ball.
pub fn riemannian_update(
    theta: &[f64],
    euclidean_grad: &[f64],
    lr: f64,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if euclidean_grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("poincare gradient".into()));
    }
    let alpha = 1.0 - norm_sq(theta);
    let scale = lr * alpha * alpha / 4.0;
    let mut next: Vec<f64> = theta
        .iter()
        .zip(euclidean_grad)
        .map(|(t, g)| t - scale * g)
        .collect();
    let norm = norm_sq(&next).sqrt();
    let limit = 1.0 - epsilon;
    if norm >= limit {
        for x in &mut next {
            *x *= limit / norm;
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PoincareConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub burn_in_epochs: usize,
    pub burn_in_factor: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        PoincareConfig {
            dim: 300,
            epochs: 50,
            negatives: 10,
            learning_rate: 0.01,
            burn_in_epochs: 10,
            burn_in_factor: 0.1,
            epsilon: 1e-5,
            seed: 1,
        }
    }
}

/// Trains ball embeddings edge by edge: each directed edge (u,v) pulls v
/// towards u against sampled non-neighbor negatives under a softmax over
/// negative distances. Updates are sequential, so the ball invariant holds
/// after every single step and runs are reproducible for a fixed seed.
pub struct PoincareTrainer {
    nodes: Vec<String>,
    adjacency: Vec<Vec<u32>>,
    directed: Vec<(u32, u32)>,
    points: Vec<Vec<f64>>,
    config: PoincareConfig,
    rng: ChaCha8Rng,
    epochs_done: usize,
}

impl PoincareTrainer {
    pub fn new(graph: &CitationGraph, config: PoincareConfig) -> Result<Self> {
        if graph.edge_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        let n = graph.node_count();
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
        init_rng.set_stream(0);
        let points = (0..n)
            .map(|_| {
                (0..config.dim)
                    .map(|_| init_rng.random::<f64>() * 0.002 - 0.001)
                    .collect()
            })
            .collect();
        let mut directed = Vec::with_capacity(graph.edge_count() * 2);
        for (a, b) in graph.edges() {
            directed.push((a, b));
            directed.push((b, a));
        }
        let adjacency = (0..n as u32).map(|i| graph.neighbors_of(i).to_vec()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(PoincareTrainer {
            nodes: graph.node_ids().to_vec(),
            adjacency,
            directed,
            points,
            config,
            rng,
            epochs_done: 0,
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn points(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.nodes
            .iter()
            .zip(&self.points)
            .map(|(id, p)| (id.as_str(), p.as_slice()))
    }

    /// Uniform draw from the non-neighbors of `u` (rejection sampling).
    fn sample_negative(&mut self, u: u32) -> Option<u32> {
        let n = self.points.len() as u32;
        for _ in 0..32 {
            let candidate = self.rng.random_range(0..n);
            if candidate != u && self.adjacency[u as usize].binary_search(&candidate).is_err() {
                return Some(candidate);
            }
        }
        None
    }

    pub fn run_epoch(&mut self) -> Result<()> {
        let lr = if self.epochs_done < self.config.burn_in_epochs {
            self.config.learning_rate * self.config.burn_in_factor
        } else {
            self.config.learning_rate
        };
        let mut order = self.directed.clone();
        order.shuffle(&mut self.rng);
        for (u, v) in order {
            self.train_pair(u, v, lr)?;
        }
        self.epochs_done += 1;
        Ok(())
    }

    /// Softmax loss over the positive target and sampled negatives:
    /// −log(exp(−d(u,v)) / Σ exp(−d(u,v′))), one simultaneous SGD step.
    fn train_pair(&mut self, u: u32, v: u32, lr: f64) -> Result<()> {
        let mut targets = vec![v];
        for _ in 0..self.config.negatives {
            if let Some(neg) = self.sample_negative(u) {
                targets.push(neg);
            }
        }
        let point_u = &self.points[u as usize];
        let mut distances = Vec::with_capacity(targets.len());
        for &t in &targets {
            distances.push(poincare_distance(point_u, &self.points[t as usize])?);
        }
        // Stable softmax of the negated distances.
        let max_score = distances.iter().fold(f64::NEG_INFINITY, |m, &d| m.max(-d));
        let weights: Vec<f64> = distances.iter().map(|&d| (-d - max_score).exp()).collect();
        let z: f64 = weights.iter().sum();

        let mut grad_u = vec![0.0; self.config.dim];
        let mut grad_targets: Vec<Vec<f64>> = Vec::with_capacity(targets.len());
        for (i, &t) in targets.iter().enumerate() {
            // dL/dd is 1−p for the positive (i == 0), −p for each negative.
            let mut coeff = -(weights[i] / z);
            if i == 0 {
                coeff += 1.0;
            }
            let (du, dt) = poincare_distance_gradient(point_u, &self.points[t as usize])?;
            for (acc, g) in grad_u.iter_mut().zip(&du) {
                *acc += coeff * g;
            }
            grad_targets.push(dt.into_iter().map(|g| coeff * g).collect());
        }

        let eps = self.config.epsilon;
        self.points[u as usize] =
            riemannian_update(&self.points[u as usize], &grad_u, lr, eps)?;
        for (&t, grad) in targets.iter().zip(&grad_targets) {
            self.points[t as usize] =
                riemannian_update(&self.points[t as usize], grad, lr, eps)?;
        }
        debug_assert!(self
            .points
            .iter()
            .all(|p| norm_sq(p).sqrt() <= 1.0 - eps + 1e-12));
        Ok(())
    }

    pub fn into_embedding(self) -> PoincareEmbedding {
        PoincareEmbedding {
            dim: self.config.dim,
            epsilon: self.config.epsilon,
            points: self
                .nodes
                .into_iter()
                .zip(self.points)
                .collect(),
        }
    }
}

/// Runs the full schedule: `burn_in_epochs` at the damped rate, then the
/// remaining epochs at full rate.
pub fn poincare_train(graph: &CitationGraph, config: &PoincareConfig) -> Result<PoincareEmbedding> {
    let mut trainer = PoincareTrainer::new(graph, config.clone())?;
    for _ in 0..config.epochs {
        trainer.run_epoch()?;
    }
    Ok(trainer.into_embedding())
}
