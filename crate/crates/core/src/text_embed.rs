use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use log::warn;

use crate::corpus::Corpus;
use crate::embedding::{read_vector_rows, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::sgns::{self, TrainParams};

/// Token → vector table shared by trained and externally loaded word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    pub dim: usize,
    table: BTreeMap<String, Vec<f64>>,
}

impl WordVectors {
    pub fn new(dim: usize) -> Self {
        WordVectors {
            dim,
            table: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let token = token.into();
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                id: token,
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.table.insert(token, vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.table.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.table.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// L2-normalized sparse TF-IDF document vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVectorSet {
    pub vocab_size: usize,
    vectors: BTreeMap<String, Vec<(u32, f64)>>,
}

impl SparseVectorSet {
    /// Index/weight pairs sorted by index.
    pub fn get(&self, id: &str) -> Option<&[(u32, f64)]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }
}

/// TF-IDF with raw term counts, smoothed idf `ln((1+N)/(1+df)) + 1`, and
/// L2 normalization. When the vocabulary exceeds `max_features`, the highest
/// document-frequency tokens win, ties broken lexicographically.
pub fn fit_tfidf(corpus: &Corpus, max_features: usize) -> Result<SparseVectorSet> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if max_features == 0 {
        return Err(Error::InvalidParameter("max_features must be >= 1".into()));
    }
    let mut by_df: Vec<(&str, usize)> = corpus
        .vocabulary
        .iter()
        .map(|(tok, e)| (tok.as_str(), e.doc_freq))
        .collect();
    by_df.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    by_df.truncate(max_features);
    let mut selected: Vec<(&str, usize)> = by_df;
    selected.sort_by(|a, b| a.0.cmp(b.0));

    let n = corpus.total_docs as f64;
    let feature: BTreeMap<&str, u32> = selected
        .iter()
        .enumerate()
        .map(|(i, &(tok, _))| (tok, i as u32))
        .collect();
    let idf: Vec<f64> = selected
        .iter()
        .map(|&(_, df)| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
        .collect();

    let mut vectors = BTreeMap::new();
    for doc in corpus.documents.values() {
        let mut tf: BTreeMap<u32, f64> = BTreeMap::new();
        for token in &doc.tokens {
            if let Some(&index) = feature.get(token.as_str()) {
                *tf.entry(index).or_insert(0.0) += 1.0;
            }
        }
        let mut vec: Vec<(u32, f64)> = tf.into_iter().collect();
        for (index, weight) in &mut vec {
            *weight *= idf[*index as usize];
        }
        let norm: f64 = vec.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut vec {
                *w /= norm;
            }
        }
        vectors.insert(doc.id.clone(), vec);
    }
    Ok(SparseVectorSet {
        vocab_size: selected.len(),
        vectors,
    })
}

/// Hyperparameters of the skip-gram trainers (word-level and node-level).
#[derive(Debug, Clone, serde::Serialize)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: usize,
    /// Frequent-token downsampling threshold; 0 disables.
    pub subsample: f64,
    pub workers: usize,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 2,
            subsample: 1e-4,
            workers: 1,
            seed: 1,
        }
    }
}

impl SgnsConfig {
    fn train_params(&self) -> TrainParams {
        TrainParams {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            subsample: self.subsample,
            workers: self.workers,
            seed: self.seed,
        }
    }
}

/// Builds the frequency-sorted index vocabulary (count desc, token asc) of
/// all tokens reaching `min_count`.
fn build_vocab(corpus: &Corpus, min_count: usize) -> (Vec<String>, Vec<u64>) {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in corpus.documents.values() {
        for token in &doc.tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c as usize >= min_count)
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let tokens = entries.iter().map(|(t, _)| t.to_string()).collect();
    let counts = entries.iter().map(|&(_, c)| c).collect();
    (tokens, counts)
}

/// Trains word vectors on the corpus itself (one sentence per document).
pub fn train_word_vectors_sgns(corpus: &Corpus, config: &SgnsConfig) -> Result<WordVectors> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if corpus.documents.values().all(|d| d.tokens.is_empty()) {
        return Err(Error::EmptyInput("all documents are empty".into()));
    }
    let (tokens, counts) = build_vocab(corpus, config.min_count);
    if tokens.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no token reaches min_count {}",
            config.min_count
        )));
    }
    let index: BTreeMap<&str, u32> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();
    let sentences: Vec<Vec<u32>> = corpus
        .documents
        .values()
        .map(|doc| {
            doc.tokens
                .iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect()
        })
        .collect();
    let rows = sgns::train_skipgram(&sentences, &counts, &config.train_params());
    let mut wv = WordVectors::new(config.dim);
    for (token, row) in tokens.into_iter().zip(rows) {
        wv.insert(token, row)?;
    }
    Ok(wv)
}

/// Count-weighted average of the word vectors of `tokens` (optionally only
/// the first `token_limit` of them): `(Σ c_i·w_i) / (Σ c_i)` over in-table
/// tokens. All-out-of-vocabulary input yields the zero vector, which scores
/// cosine 0 against everything downstream.
pub fn average_embedding(
    tokens: &[String],
    wv: &WordVectors,
    token_limit: Option<usize>,
) -> Vec<f64> {
    let tokens = match token_limit {
        Some(limit) => &tokens[..limit.min(tokens.len())],
        None => tokens,
    };
    let mut sum = vec![0.0; wv.dim];
    let mut matched = 0u64;
    for token in tokens {
        if let Some(vector) = wv.get(token) {
            for (s, v) in sum.iter_mut().zip(vector) {
                *s += v;
            }
            matched += 1;
        }
    }
    if matched > 0 {
        for s in &mut sum {
            *s /= matched as f64;
        }
    }
    sum
}

/// Applies [`average_embedding`] to every document of the corpus.
pub fn averaged_matrix(
    corpus: &Corpus,
    wv: &WordVectors,
    token_limit: Option<usize>,
    method: &str,
) -> Result<EmbeddingMatrix> {
    let mut matrix = EmbeddingMatrix::new(method, wv.dim);
    let mut unmatched = 0usize;
    for doc in corpus.documents.values() {
        let vector = average_embedding(&doc.tokens, wv, token_limit);
        if vector.iter().all(|&v| v == 0.0) {
            unmatched += 1;
        }
        matrix.insert(doc.id.clone(), vector)?;
    }
    if unmatched > 0 {
        warn!("{unmatched} document(s) had no in-vocabulary token; their vectors are zero");
    }
    Ok(matrix)
}

/// Hyperparameters of the distributed bag-of-words paragraph-vector trainer.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PvDbowConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: usize,
    pub subsample: f64,
    pub workers: usize,
    pub seed: u64,
}

impl Default for PvDbowConfig {
    fn default() -> Self {
        PvDbowConfig {
            dim: 300,
            negatives: 5,
            epochs: 10,
            learning_rate: 0.025,
            min_count: 2,
            subsample: 1e-4,
            workers: 1,
            seed: 1,
        }
    }
}

/// Trains one vector per document by predicting its tokens from the document
/// vector with negative sampling.
pub fn train_pv_dbow(corpus: &Corpus, config: &PvDbowConfig) -> Result<EmbeddingMatrix> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (tokens, counts) = build_vocab(corpus, config.min_count);
    if tokens.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no token reaches min_count {}",
            config.min_count
        )));
    }
    let index: BTreeMap<&str, u32> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();
    let ids: Vec<&String> = corpus.documents.keys().collect();
    let doc_tokens: Vec<Vec<u32>> = corpus
        .documents
        .values()
        .map(|doc| {
            doc.tokens
                .iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect()
        })
        .collect();
    let params = TrainParams {
        dim: config.dim,
        window: 0,
        negatives: config.negatives,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        subsample: config.subsample,
        workers: config.workers,
        seed: config.seed,
    };
    let rows = sgns::train_doc_bow(&doc_tokens, &counts, &params);
    let mut matrix = EmbeddingMatrix::new("pv-dbow", config.dim);
    for (id, row) in ids.into_iter().zip(rows) {
        matrix.insert(id.clone(), row)?;
    }
    Ok(matrix)
}

/// Loads externally computed document vectors (e.g. Transformer outputs) in
/// the shared text format, keyed by document id. Warns about ids missing on
/// either side of `expected_ids`.
pub fn import_embeddings(path: &Path, expected_ids: &BTreeSet<String>) -> Result<EmbeddingMatrix> {
    let rows = read_vector_rows(path)?;
    let dim = rows[0].1.len();
    let mut matrix = EmbeddingMatrix::new("import", dim);
    for (id, vector) in rows {
        if vector.len() != dim {
            return Err(Error::DimMismatch {
                id,
                expected: dim,
                found: vector.len(),
            });
        }
        if matrix.contains(&id) {
            warn!("{}: duplicate id {:?}, keeping last", path.display(), id);
        }
        matrix.insert(id, vector)?;
    }
    let missing = expected_ids.iter().filter(|id| !matrix.contains(id)).count();
    if missing > 0 {
        warn!(
            "{}: {missing} expected document(s) have no imported vector",
            path.display()
        );
    }
    let extra = matrix.ids().filter(|id| !expected_ids.contains(*id)).count();
    if extra > 0 {
        warn!(
            "{}: {extra} imported id(s) are not corpus documents",
            path.display()
        );
    }
    Ok(matrix)
}

/// Loads pretrained word vectors in the shared text format, keyed by token.
/// A duplicated token keeps its last row.
pub fn load_word_vectors(path: &Path) -> Result<WordVectors> {
    let rows = read_vector_rows(path)?;
    let dim = rows[0].1.len();
    let mut wv = WordVectors::new(dim);
    for (token, vector) in rows {
        if wv.get(&token).is_some() {
            warn!("{}: duplicate token {:?}, keeping last", path.display(), token);
        }
        wv.insert(token, vector)?;
    }
    Ok(wv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Document};

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.to_string(),
            tokens: tokenize(text),
            out_citations: Default::default(),
            labels: Default::default(),
        }
    }

    fn corpus(texts: &[(&str, &str)]) -> Corpus {
        Corpus::from_documents(texts.iter().map(|&(id, t)| doc(id, t)).collect()).unwrap()
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = crate::embedding::l2_norm(a);
        let nb = crate::embedding::l2_norm(b);
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    #[test]
    fn tfidf_single_doc_components() {
        let c = corpus(&[("d", "a b")]);
        let set = fit_tfidf(&c, 500_000).unwrap();
        let vec = set.get("d").unwrap();
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert_eq!(vec.len(), 2);
        assert!((vec[0].1 - inv_sqrt2).abs() < 1e-12);
        assert!((vec[1].1 - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn tfidf_ubiquitous_token_has_min_idf() {
        // "x" is in all 3 docs: idf = ln(4/4)+1 = 1; "y" in one: ln(4/2)+1.
        let c = corpus(&[("1", "x y"), ("2", "x"), ("3", "x")]);
        let set = fit_tfidf(&c, 500_000).unwrap();
        let v1 = set.get("1").unwrap();
        let idf_x = 1.0;
        let idf_y = (4.0f64 / 2.0).ln() + 1.0;
        let norm = (idf_x * idf_x + idf_y * idf_y).sqrt();
        assert!((v1[0].1 - idf_x / norm).abs() < 1e-12);
        assert!((v1[1].1 - idf_y / norm).abs() < 1e-12);
    }

    #[test]
    fn tfidf_truncates_by_document_frequency() {
        let c = corpus(&[("1", "a b c"), ("2", "a b d"), ("3", "a e")]);
        let set = fit_tfidf(&c, 3).unwrap();
        assert_eq!(set.vocab_size, 3);
        // a(df 3), b(df 2), then the df-1 tie c/d/e resolves to "c".
        let v3 = set.get("3").unwrap();
        assert_eq!(v3.len(), 1, "doc 3 keeps only 'a': {v3:?}");
        let v1 = set.get("1").unwrap();
        assert_eq!(v1.len(), 3);
    }

    #[test]
    fn tfidf_vectors_are_unit_norm() {
        let c = corpus(&[("1", "a a b c"), ("2", "b c d"), ("3", "")]);
        let set = fit_tfidf(&c, 500_000).unwrap();
        for id in ["1", "2"] {
            let norm: f64 = set
                .get(id)
                .unwrap()
                .iter()
                .map(|(_, w)| w * w)
                .sum::<f64>()
                .sqrt();
            assert!((norm - 1.0).abs() < 1e-9, "{id}: norm {norm}");
        }
        assert!(set.get("3").unwrap().is_empty());
    }

    fn two_topic_corpus() -> Corpus {
        let mut docs = Vec::new();
        for i in 0..30 {
            docs.push(doc(&format!("p{i:02}"), "ctxa p q ctxb"));
            docs.push(doc(&format!("q{i:02}"), "ctxb q p ctxa"));
            docs.push(doc(&format!("r{i:02}"), "ctxc r s ctxd"));
            docs.push(doc(&format!("s{i:02}"), "ctxd s r ctxc"));
        }
        Corpus::from_documents(docs).unwrap()
    }

    #[test]
    fn sgns_groups_co_occurring_tokens() {
        let c = two_topic_corpus();
        let cfg = SgnsConfig {
            dim: 24,
            window: 3,
            epochs: 8,
            learning_rate: 0.05,
            subsample: 0.0,
            seed: 11,
            ..Default::default()
        };
        let wv = train_word_vectors_sgns(&c, &cfg).unwrap();
        let p = wv.get("p").unwrap();
        let q = wv.get("q").unwrap();
        let r = wv.get("r").unwrap();
        assert!(cosine(p, q) > cosine(p, r));
    }

    #[test]
    fn sgns_min_count_drops_rare_tokens() {
        let c = corpus(&[("1", "common common rare"), ("2", "common common")]);
        let cfg = SgnsConfig {
            dim: 8,
            epochs: 1,
            ..Default::default()
        };
        let wv = train_word_vectors_sgns(&c, &cfg).unwrap();
        assert!(wv.get("common").is_some());
        assert!(wv.get("rare").is_none());
    }

    #[test]
    fn sgns_zero_epochs_keeps_init() {
        let c = two_topic_corpus();
        let cfg = SgnsConfig {
            dim: 12,
            epochs: 0,
            seed: 5,
            ..Default::default()
        };
        let a = train_word_vectors_sgns(&c, &cfg).unwrap();
        let b = train_word_vectors_sgns(&c, &cfg).unwrap();
        assert_eq!(a, b);
        for (_, v) in a.iter() {
            for &x in v {
                assert!(x.abs() <= 0.5 / 12.0);
            }
        }
    }

    #[test]
    fn sgns_rejects_all_empty_documents() {
        let c = corpus(&[("1", ""), ("2", "")]);
        assert!(matches!(
            train_word_vectors_sgns(&c, &SgnsConfig::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn average_is_count_weighted() {
        let mut wv = WordVectors::new(2);
        wv.insert("a", vec![1.0, 0.0]).unwrap();
        wv.insert("b", vec![0.0, 3.0]).unwrap();
        let tokens: Vec<String> = ["a", "a", "b"].iter().map(|s| s.to_string()).collect();
        let avg = average_embedding(&tokens, &wv, None);
        assert!((avg[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((avg[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn average_of_oov_tokens_is_zero() {
        let mut wv = WordVectors::new(2);
        wv.insert("a", vec![1.0, 0.0]).unwrap();
        let tokens = vec!["zzz".to_string()];
        assert_eq!(average_embedding(&tokens, &wv, None), vec![0.0, 0.0]);
    }

    #[test]
    fn average_limit_beyond_length_is_identity() {
        let mut wv = WordVectors::new(1);
        wv.insert("a", vec![1.0]).unwrap();
        wv.insert("b", vec![3.0]).unwrap();
        let tokens: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            average_embedding(&tokens, &wv, Some(10)),
            average_embedding(&tokens, &wv, None)
        );
        assert_eq!(average_embedding(&tokens, &wv, Some(1)), vec![1.0]);
    }

    #[test]
    fn pv_dbow_separates_topics_and_matches_duplicates() {
        let mut texts = Vec::new();
        for i in 0..20 {
            texts.push((format!("a{i:02}"), "alpha beta gamma delta alpha beta"));
            texts.push((format!("b{i:02}"), "omega psi chi phi omega psi"));
        }
        let c = Corpus::from_documents(
            texts
                .iter()
                .map(|(id, t)| doc(id, t))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let cfg = PvDbowConfig {
            dim: 16,
            epochs: 60,
            learning_rate: 0.05,
            subsample: 0.0,
            seed: 3,
            ..Default::default()
        };
        let m = train_pv_dbow(&c, &cfg).unwrap();
        let within = cosine(m.get("a00").unwrap(), m.get("a01").unwrap());
        let across = cosine(m.get("a00").unwrap(), m.get("b00").unwrap());
        assert!(
            within > across,
            "within-topic {within} not above cross-topic {across}"
        );
    }

    #[test]
    fn pv_dbow_zero_epochs_is_deterministic_init() {
        let c = corpus(&[("1", "a a b b"), ("2", "a b a b")]);
        let cfg = PvDbowConfig {
            dim: 4,
            epochs: 0,
            ..Default::default()
        };
        assert_eq!(train_pv_dbow(&c, &cfg).unwrap(), train_pv_dbow(&c, &cfg).unwrap());
    }

    #[test]
    fn import_reads_and_checks_dims() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ext.vec");
        std::fs::write(&p, "3 4\nx 1 2 3 4\ny 5 6 7 8\nz 9 10 11 12\n").unwrap();
        let expected: BTreeSet<String> = ["x", "y", "z", "w"].iter().map(|s| s.to_string()).collect();
        let m = import_embeddings(&p, &expected).unwrap();
        assert_eq!(m.dim, 4);
        assert_eq!(m.len(), 3);

        std::fs::write(&p, "x 1 2 3 4\ny 5 6 7\n").unwrap();
        match import_embeddings(&p, &expected) {
            Err(Error::DimMismatch { id, expected, found }) => {
                assert_eq!(id, "y");
                assert_eq!((expected, found), (4, 3));
            }
            other => panic!("expected dim mismatch, got {other:?}"),
        }
    }

    #[test]
    fn load_word_vectors_last_duplicate_wins() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wv.vec");
        std::fs::write(&p, "a 1 1\nb 2 2\na 3 3\n").unwrap();
        let wv = load_word_vectors(&p).unwrap();
        assert_eq!(wv.len(), 2);
        assert_eq!(wv.get("a").unwrap(), &[3.0, 3.0]);
    }
}
