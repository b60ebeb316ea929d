use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One court decision: tokenized text, outgoing citations, and the curated
/// collections (casebooks, topic categories) it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    pub out_citations: BTreeSet<String>,
    pub labels: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabEntry {
    /// Dense index in 0..vocab_size.
    pub index: usize,
    /// Number of documents containing the token.
    pub doc_freq: usize,
}

/// Immutable document collection with a dense vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: BTreeMap<String, Document>,
    pub vocabulary: BTreeMap<String, VocabEntry>,
    pub total_docs: usize,
}

impl Corpus {
    /// Assembles a corpus, rejecting duplicate ids and stripping self-citations.
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut documents = BTreeMap::new();
        for mut doc in docs {
            if doc.id.is_empty() {
                return Err(Error::InvalidParameter("empty document id".into()));
            }
            if doc.out_citations.remove(&doc.id) {
                warn!("document {:?} cites itself; self-citation dropped", doc.id);
            }
            if documents.contains_key(&doc.id) {
                return Err(Error::DuplicateId(doc.id));
            }
            documents.insert(doc.id.clone(), doc);
        }
        let mut vocabulary = BTreeMap::new();
        for doc in documents.values() {
            let distinct: BTreeSet<&String> = doc.tokens.iter().collect();
            for token in distinct {
                vocabulary
                    .entry(token.clone())
                    .or_insert(VocabEntry {
                        index: 0,
                        doc_freq: 0,
                    })
                    .doc_freq += 1;
            }
        }
        for (index, entry) in vocabulary.values_mut().enumerate() {
            entry.index = index;
        }
        let total_docs = documents.len();
        Ok(Corpus {
            documents,
            vocabulary,
            total_docs,
        })
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.documents.keys().map(String::as_str)
    }

    pub fn id_set(&self) -> BTreeSet<String> {
        self.documents.keys().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.total_docs == 0
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    citations: Vec<String>,
    #[serde(default)]
    labels: Vec<String>,
}

/// Reads a JSON-lines corpus file: one record per line with `id`, `text`,
/// optional `citations` and `labels`. Unknown keys are ignored.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut docs = Vec::new();
    let mut seen = BTreeSet::new();
    let mut dangling = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if raw.id.is_empty() {
            return Err(Error::parse(path, lineno, "empty document id"));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId(raw.id));
        }
        let tokens = tokenize(&raw.text);
        if tokens.is_empty() {
            warn!("{}:{}: document {:?} has no tokens", path.display(), lineno, raw.id);
        }
        docs.push(Document {
            id: raw.id,
            tokens,
            out_citations: raw.citations.into_iter().collect(),
            labels: raw.labels.into_iter().collect(),
        });
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let corpus = Corpus::from_documents(docs)?;
    for doc in corpus.documents.values() {
        dangling += doc
            .out_citations
            .iter()
            .filter(|c| !corpus.documents.contains_key(*c))
            .count();
    }
    if dangling > 0 {
        warn!(
            "{}: {} citation(s) point outside the corpus and will not become graph edges",
            path.display(),
            dangling
        );
    }
    Ok(corpus)
}

/// Lowercased maximal runs of Unicode letters and digits, in order.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// First `min(limit, len)` tokens of the document, order preserved.
pub fn truncate_tokens(doc: &Document, limit: usize) -> &[String] {
    &doc.tokens[..limit.min(doc.tokens.len())]
}

/// Undirected simple graph over corpus ids; an edge exists when either
/// endpoint cites the other and both are corpus members.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    nodes: Vec<String>,
    index: BTreeMap<String, u32>,
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
}

impl CitationGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Node ids in index order (lexicographic).
    pub fn node_ids(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn node_at(&self, index: u32) -> &str {
        &self.nodes[index as usize]
    }

    pub fn neighbors_of(&self, index: u32) -> &[u32] {
        &self.adjacency[index as usize]
    }

    pub fn degree(&self, id: &str) -> usize {
        self.node_index(id)
            .map(|i| self.adjacency[i as usize].len())
            .unwrap_or(0)
    }

    pub fn neighbors(&self, id: &str) -> impl Iterator<Item = &str> {
        let list = self
            .node_index(id)
            .map(|i| self.adjacency[i as usize].as_slice())
            .unwrap_or(&[]);
        list.iter().map(|&n| self.nodes[n as usize].as_str())
    }

    /// All edges as (a, b) index pairs with a < b.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, nbrs)| {
            nbrs.iter()
                .filter(move |&&b| (a as u32) < b)
                .map(move |&b| (a as u32, b))
        })
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.node_index(a), self.node_index(b)) {
            (Some(i), Some(j)) => self.adjacency[i as usize].binary_search(&j).is_ok(),
            _ => false,
        }
    }
}

/// Collapses all citations between corpus members into undirected edges;
/// citations to ids outside the corpus are dropped.
pub fn build_citation_graph(corpus: &Corpus) -> CitationGraph {
    let nodes: Vec<String> = corpus.documents.keys().cloned().collect();
    let index: BTreeMap<String, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i as u32))
        .collect();
    let mut pairs = BTreeSet::new();
    for doc in corpus.documents.values() {
        let a = index[&doc.id];
        for cited in &doc.out_citations {
            if let Some(&b) = index.get(cited) {
                if a != b {
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    let mut adjacency = vec![Vec::new(); nodes.len()];
    for &(a, b) in &pairs {
        adjacency[a as usize].push(b);
        adjacency[b as usize].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    CitationGraph {
        nodes,
        index,
        adjacency,
        edge_count: pairs.len(),
    }
}

/// Silver-standard relevance: two documents are mutually relevant when they
/// share at least one label. Only documents with a non-empty relevant set are
/// stored; those are the queries Q.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelevanceJudgments {
    judgments: BTreeMap<String, BTreeSet<String>>,
}

impl RelevanceJudgments {
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn relevant(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.judgments.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.judgments.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    /// Re-checks symmetry and irreflexivity, e.g. after reloading from disk.
    pub fn validate(&self) -> Result<()> {
        for (q, rel) in &self.judgments {
            if rel.contains(q) {
                return Err(Error::InvalidParameter(format!(
                    "judgments for {q:?} contain the query itself"
                )));
            }
            for r in rel {
                let back = self.judgments.get(r).map_or(false, |s| s.contains(q));
                if !back {
                    return Err(Error::InvalidParameter(format!(
                        "judgments not symmetric: {r:?} missing {q:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Derives judgments from label co-membership: rel(a) = every other document
/// sharing a label with a. Symmetric and irreflexive by construction.
pub fn build_relevance(corpus: &Corpus) -> RelevanceJudgments {
    let mut members: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for doc in corpus.documents.values() {
        for label in &doc.labels {
            members.entry(label).or_default().push(&doc.id);
        }
    }
    let mut judgments: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for ids in members.values() {
        for &a in ids {
            for &b in ids {
                if a != b {
                    judgments.entry(a.to_string()).or_default().insert(b.to_string());
                }
            }
        }
    }
    judgments.retain(|_, rel| !rel.is_empty());
    RelevanceJudgments { judgments }
}

/// Descriptive statistics of per-query relevant counts (sample std, linearly
/// interpolated quartiles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceStats {
    pub queries: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

pub fn corpus_stats(judgments: &RelevanceJudgments) -> Result<RelevanceStats> {
    if judgments.is_empty() {
        return Err(Error::EmptyInput("relevance judgments".into()));
    }
    let mut counts: Vec<f64> = judgments
        .judgments
        .values()
        .map(|rel| rel.len() as f64)
        .collect();
    counts.sort_by(f64::total_cmp);
    let n = counts.len();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RelevanceStats {
        queries: n,
        mean,
        std,
        min: counts[0],
        q25: quantile(&counts, 0.25),
        median: quantile(&counts, 0.5),
        q75: quantile(&counts, 0.75),
        max: counts[n - 1],
    })
}

/// Linear interpolation between order statistics (the numpy default).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}
