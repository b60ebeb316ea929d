//! Shared corpus setup for the benchmark targets.

use caserec_core::{synthetic_corpus, Corpus, SyntheticConfig};

/// A small planted-topic corpus sized for benchmark iterations.
pub fn bench_corpus(topics: usize, docs_per_topic: usize) -> Corpus {
    synthetic_corpus(&SyntheticConfig {
        topics,
        docs_per_topic,
        topic_vocab: 120,
        shared_vocab: 300,
        min_len: 40,
        max_len: 80,
        p_intra: 0.08,
        p_inter: 0.005,
        seed: 42,
        ..Default::default()
    })
    .expect("valid benchmark parameters")
}
