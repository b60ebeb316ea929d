use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// Parameters of the planted-topic generator: every document belongs to one
/// topic, draws `topic_token_share` of its tokens from that topic's private
/// vocabulary and the rest from a shared pool, and cites same-topic documents
/// `p_intra / p_inter` times more often than others.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub topics: usize,
    pub docs_per_topic: usize,
    pub topic_vocab: usize,
    pub shared_vocab: usize,
    pub topic_token_share: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            topics: 10,
            docs_per_topic: 100,
            topic_vocab: 200,
            shared_vocab: 500,
            topic_token_share: 0.7,
            min_len: 80,
            max_len: 150,
            p_intra: 0.04,
            p_inter: 0.004,
            seed: 1,
        }
    }
}

fn validate(config: &SyntheticConfig) -> Result<()> {
    let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
    if config.topics == 0 || config.docs_per_topic == 0 {
        return bad("topics and docs_per_topic must be positive");
    }
    if config.topic_vocab == 0 || config.shared_vocab == 0 {
        return bad("topic_vocab and shared_vocab must be positive");
    }
    if config.min_len == 0 || config.min_len > config.max_len {
        return bad("need 0 < min_len <= max_len");
    }
    if !(0.0..=1.0).contains(&config.topic_token_share) {
        return bad("topic_token_share must be in [0, 1]");
    }
    if !(0.0..=1.0).contains(&config.p_intra) || !(0.0..=1.0).contains(&config.p_inter) {
        return bad("citation probabilities must be in [0, 1]");
    }
    Ok(())
}

/// Generates a labelled corpus with planted topical and citation structure.
/// Deterministic in the seed; document ids are `doc0000`, `doc0001`, ... in
/// topic-major order, labels are `topic-00`, `topic-01`, ...
pub fn synthetic_corpus(config: &SyntheticConfig) -> Result<Corpus> {
    validate(config)?;
    let total = config.topics * config.docs_per_topic;
    let width = total.saturating_sub(1).to_string().len().max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let topic_of = |doc: usize| doc / config.docs_per_topic;
    let mut documents = Vec::with_capacity(total);
    for doc in 0..total {
        let topic = topic_of(doc);
        let len = rng.random_range(config.min_len..=config.max_len);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            if rng.random::<f64>() < config.topic_token_share {
                let j = rng.random_range(0..config.topic_vocab);
                tokens.push(format!("t{topic:02}w{j}"));
            } else {
                let j = rng.random_range(0..config.shared_vocab);
                tokens.push(format!("shared{j}"));
            }
        }
        documents.push(Document {
            id: format!("doc{doc:0width$}"),
            tokens,
            out_citations: BTreeSet::new(),
            labels: [format!("topic-{topic:02}")].into_iter().collect(),
        });
    }

    for i in 0..total {
        for j in i + 1..total {
            let p = if topic_of(i) == topic_of(j) {
                config.p_intra
            } else {
                config.p_inter
            };
            if rng.random::<f64>() < p {
                let target = documents[j].id.clone();
                documents[i].out_citations.insert(target);
            }
        }
    }

    Corpus::from_documents(documents)
}
