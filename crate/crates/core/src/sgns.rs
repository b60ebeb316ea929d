//! Skip-gram with negative sampling over index sentences. Shared by the
//! word-vector, paragraph-vector, DeepWalk, and Walklets trainers.
//!
//! Parameters live in two atomic matrices updated without locks; concurrent
//! workers may race on individual components (asynchronous SGD). With one
//! worker the whole run is deterministic for a fixed seed.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub(crate) struct TrainParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Frequent-token downsampling threshold; 0 disables.
    pub subsample: f64,
    pub workers: usize,
    pub seed: u64,
}

/// Flat rows × dim matrix of f64 bits behind relaxed atomics.
pub(crate) struct SharedMatrix {
    data: Vec<AtomicU64>,
    dim: usize,
}

impl SharedMatrix {
    fn zeros(rows: usize, dim: usize) -> Self {
        let data = (0..rows * dim).map(|_| AtomicU64::new(0)).collect();
        SharedMatrix { data, dim }
    }

    /// Components uniform in [-0.5/dim, 0.5/dim), the word2vec input init.
    fn random(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let m = SharedMatrix::zeros(rows, dim);
        for cell in &m.data {
            let v = (rng.random::<f64>() - 0.5) / dim as f64;
            store(cell, v);
        }
        m
    }

    fn row(&self, r: u32) -> &[AtomicU64] {
        let start = r as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().map(load).collect())
            .collect()
    }
}

fn load(cell: &AtomicU64) -> f64 {
    f64::from_bits(cell.load(Ordering::Relaxed))
}

fn store(cell: &AtomicU64, v: f64) {
    cell.store(v.to_bits(), Ordering::Relaxed);
}

fn dot(a: &[AtomicU64], b: &[AtomicU64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| load(x) * load(y)).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cumulative count^0.75 table for unigram negative sampling.
pub(crate) struct NegativeTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl NegativeTable {
    pub(crate) fn new(counts: &[u64]) -> Self {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut total = 0.0;
        for &c in counts {
            total += (c as f64).powf(0.75);
            cumulative.push(total);
        }
        NegativeTable { cumulative, total }
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        let r = rng.random::<f64>() * self.total;
        let i = self.cumulative.partition_point(|&c| c <= r);
        i.min(self.cumulative.len() - 1) as u32
    }
}

/// One negative-sampling step for the pair (input row, positive target):
/// pushes input towards the target's output row and away from sampled
/// negatives, then applies the accumulated input gradient.
#[allow(clippy::too_many_arguments)]
fn sgd_pair(
    syn0: &SharedMatrix,
    syn1: &SharedMatrix,
    input: u32,
    target: u32,
    negatives: usize,
    table: &NegativeTable,
    alpha: f64,
    rng: &mut ChaCha8Rng,
    input_grad: &mut [f64],
) {
    input_grad.fill(0.0);
    let input_row = syn0.row(input);
    for d in 0..=negatives {
        let (tgt, label) = if d == 0 {
            (target, 1.0)
        } else {
            let neg = table.sample(rng);
            if neg == target {
                continue;
            }
            (neg, 0.0)
        };
        let out_row = syn1.row(tgt);
        let g = (label - sigmoid(dot(input_row, out_row))) * alpha;
        for (acc, out) in input_grad.iter_mut().zip(out_row) {
            *acc += g * load(out);
        }
        for (out, inp) in out_row.iter().zip(input_row) {
            store(out, load(out) + g * load(inp));
        }
    }
    for (inp, acc) in input_row.iter().zip(input_grad.iter()) {
        store(inp, load(inp) + acc);
    }
}

/// Linearly decayed learning rate with the usual 1e-4 floor factor.
fn decayed_alpha(lr: f64, processed: u64, total: u64) -> f64 {
    lr * (1.0 - processed as f64 / (total as f64 + 1.0)).max(1e-4)
}

/// Keep-probability of the word2vec frequent-token downsampler.
fn keep_probability(count: u64, corpus_tokens: u64, threshold: f64) -> f64 {
    let f = count as f64 / corpus_tokens as f64;
    ((f / threshold).sqrt() + 1.0) * threshold / f
}

/// Trains skip-gram embeddings over sentences of vocabulary indices and
/// returns the input-side vectors, one row per vocabulary entry. `counts[i]`
/// is the corpus frequency of index i (negative table and downsampling).
pub(crate) fn train_skipgram(
    sentences: &[Vec<u32>],
    counts: &[u64],
    params: &TrainParams,
) -> Vec<Vec<f64>> {
    let vocab = counts.len();
    let mut init_rng = seeded(params.seed, 0);
    let syn0 = SharedMatrix::random(vocab, params.dim, &mut init_rng);
    if params.epochs == 0 || vocab == 0 {
        return syn0.to_rows();
    }
    let syn1 = SharedMatrix::zeros(vocab, params.dim);
    let table = NegativeTable::new(counts);
    let corpus_tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let total = corpus_tokens * params.epochs as u64;
    let processed = AtomicU64::new(0);

    let workers = params.workers.max(1);
    std::thread::scope(|scope| {
        for w in 0..workers {
            let lo = w * sentences.len() / workers;
            let hi = (w + 1) * sentences.len() / workers;
            let chunk = &sentences[lo..hi];
            let (syn0, syn1, table, processed) = (&syn0, &syn1, &table, &processed);
            scope.spawn(move || {
                let mut rng = seeded(params.seed, 1 + w as u64);
                let mut kept: Vec<u32> = Vec::new();
                let mut grad = vec![0.0; params.dim];
                for _ in 0..params.epochs {
                    for sentence in chunk {
                        let n = processed.fetch_add(sentence.len() as u64, Ordering::Relaxed)
                            + sentence.len() as u64;
                        let alpha = decayed_alpha(params.learning_rate, n, total);
                        kept.clear();
                        for &w in sentence {
                            if params.subsample > 0.0 {
                                let keep = keep_probability(
                                    counts[w as usize],
                                    corpus_tokens,
                                    params.subsample,
                                );
                                if rng.random::<f64>() > keep {
                                    continue;
                                }
                            }
                            kept.push(w);
                        }
                        for i in 0..kept.len() {
                            let center = kept[i];
                            let span = params.window - rng.random_range(0..params.window);
                            let lo = i.saturating_sub(span);
                            let hi = (i + span).min(kept.len() - 1);
                            for j in lo..=hi {
                                if j == i {
                                    continue;
                                }
                                sgd_pair(
                                    syn0,
                                    syn1,
                                    kept[j],
                                    center,
                                    params.negatives,
                                    table,
                                    alpha,
                                    &mut rng,
                                    &mut grad,
                                );
                            }
                        }
                    }
                }
            });
        }
    });
    syn0.to_rows()
}

/// Distributed bag-of-words paragraph vectors: one input row per document,
/// trained to predict the document's (optionally downsampled) tokens against
/// the word unigram table. Returns the document rows.
pub(crate) fn train_doc_bow(
    doc_tokens: &[Vec<u32>],
    word_counts: &[u64],
    params: &TrainParams,
) -> Vec<Vec<f64>> {
    let mut init_rng = seeded(params.seed, 0);
    let docs = SharedMatrix::random(doc_tokens.len(), params.dim, &mut init_rng);
    if params.epochs == 0 || doc_tokens.is_empty() || word_counts.is_empty() {
        return docs.to_rows();
    }
    let words = SharedMatrix::zeros(word_counts.len(), params.dim);
    let table = NegativeTable::new(word_counts);
    let corpus_tokens: u64 = doc_tokens.iter().map(|s| s.len() as u64).sum();
    let total = corpus_tokens * params.epochs as u64;
    let processed = AtomicU64::new(0);

    let workers = params.workers.max(1);
    std::thread::scope(|scope| {
        for w in 0..workers {
            let lo = w * doc_tokens.len() / workers;
            let hi = (w + 1) * doc_tokens.len() / workers;
            let (docs, words, table, processed) = (&docs, &words, &table, &processed);
            scope.spawn(move || {
                let mut rng = seeded(params.seed, 1 + w as u64);
                let mut grad = vec![0.0; params.dim];
                for _ in 0..params.epochs {
                    for (d, tokens) in doc_tokens[lo..hi].iter().enumerate() {
                        let n = processed.fetch_add(tokens.len() as u64, Ordering::Relaxed)
                            + tokens.len() as u64;
                        let alpha = decayed_alpha(params.learning_rate, n, total);
                        let doc_row = (lo + d) as u32;
                        for &token in tokens {
                            if params.subsample > 0.0 {
                                let keep = keep_probability(
                                    word_counts[token as usize],
                                    corpus_tokens,
                                    params.subsample,
                                );
                                if rng.random::<f64>() > keep {
                                    continue;
                                }
                            }
                            sgd_pair(
                                docs,
                                words,
                                doc_row,
                                token,
                                params.negatives,
                                table,
                                alpha,
                                &mut rng,
                                &mut grad,
                            );
                        }
                    }
                }
            });
        }
    });
    docs.to_rows()
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize, epochs: usize) -> TrainParams {
        TrainParams {
            dim,
            window: 2,
            negatives: 5,
            epochs,
            learning_rate: 0.05,
            subsample: 0.0,
            workers: 1,
            seed: 7,
        }
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn zero_epochs_returns_init_within_bounds() {
        let sentences = vec![vec![0, 1, 2]];
        let counts = [3, 2, 1];
        let rows = train_skipgram(&sentences, &counts, &params(8, 0));
        assert_eq!(rows.len(), 3);
        for row in &rows {
            for &v in row {
                assert!(v.abs() <= 0.5 / 8.0);
            }
        }
    }

    #[test]
    fn single_worker_runs_are_identical() {
        let sentences: Vec<Vec<u32>> = (0..20)
            .map(|i| (0..10).map(|j| ((i + j) % 7) as u32).collect())
            .collect();
        let counts = [30, 30, 30, 28, 28, 28, 26];
        let a = train_skipgram(&sentences, &counts, &params(16, 3));
        let b = train_skipgram(&sentences, &counts, &params(16, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn co_occurring_tokens_align() {
        // Tokens 0/1 share contexts {2,3}; tokens 4/5 share contexts {6,7}.
        let mut sentences = Vec::new();
        for _ in 0..150 {
            sentences.push(vec![2, 0, 1, 3]);
            sentences.push(vec![3, 1, 0, 2]);
            sentences.push(vec![6, 4, 5, 7]);
            sentences.push(vec![7, 5, 4, 6]);
        }
        let counts = [300u64; 8];
        let rows = train_skipgram(&sentences, &counts, &params(24, 8));
        let within = cosine(&rows[0], &rows[1]);
        let across = cosine(&rows[0], &rows[4]);
        assert!(
            within > across,
            "within-context cosine {within} not above cross-context {across}"
        );
    }

    #[test]
    fn doc_bow_separates_disjoint_vocabularies() {
        // Docs 0/1 use words 0..4, docs 2/3 use words 4..8.
        let doc_tokens: Vec<Vec<u32>> = vec![
            (0..40).map(|i| i % 4).collect(),
            (0..40).map(|i| (i + 1) % 4).collect(),
            (0..40).map(|i| 4 + i % 4).collect(),
            (0..40).map(|i| 4 + (i + 3) % 4).collect(),
        ];
        let counts = [20u64; 8];
        let mut p = params(16, 40);
        p.learning_rate = 0.1;
        let rows = train_doc_bow(&doc_tokens, &counts, &p);
        let within = cosine(&rows[0], &rows[1]);
        let across = cosine(&rows[0], &rows[2]);
        assert!(
            within > across,
            "within-topic cosine {within} not above cross-topic {across}"
        );
    }

    #[test]
    fn negative_table_tracks_counts() {
        let table = NegativeTable::new(&[1000, 10, 10]);
        let mut rng = seeded(3, 0);
        let mut hits = [0u32; 3];
        for _ in 0..5000 {
            hits[table.sample(&mut rng) as usize] += 1;
        }
        assert!(hits[0] > hits[1] + hits[2]);
        assert!(hits[1] > 0 && hits[2] > 0);
    }
}
