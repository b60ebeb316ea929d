use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use caserec_core::{
    boostne, build_citation_graph, build_relevance, bucketize_and_map, concat_embeddings,
    corpus_stats, deepwalk, fit_tfidf, import_embeddings, jaccard_matrix, load_corpus, matrix_run,
    poincare_train, random_run, score_sum_run, sparse_run, top_k_hyperbolic, train_pv_dbow,
    train_word_vectors_sgns, truncate_tokens, walklets, BoostneConfig, CitationGraph, Corpus,
    DeepwalkConfig, Document, EmbeddingMatrix, Error, EvalReport, PoincareConfig,
    PoincareEmbedding, PvDbowConfig, RankedList, RecommendationRun, RelevanceJudgments, Result,
    SgnsConfig, WalkletsConfig,
};
use log::info;
use serde::Serialize;

use crate::config::{Family, MethodConfig, RunConfig};
use crate::output;
use crate::Overrides;

/// Config values after command-line overrides.
#[derive(Debug, Clone)]
pub struct Effective {
    pub k: usize,
    pub n_buckets: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub token_limit: Option<usize>,
}

impl Effective {
    pub fn new(config: &RunConfig, o: &Overrides) -> Self {
        Effective {
            k: o.k.unwrap_or(config.k),
            n_buckets: config.n_buckets,
            seed: o.seed.unwrap_or(config.seed),
            workers: o.workers.unwrap_or(config.workers),
            out: o.out.clone().unwrap_or_else(|| config.out.clone()),
            token_limit: o.token_limit.or(config.token_limit),
        }
    }
}

pub(crate) struct Prepared {
    pub corpus: Corpus,
    pub graph: CitationGraph,
    pub judgments: RelevanceJudgments,
}

pub(crate) fn prepare(config: &RunConfig) -> Result<Prepared> {
    let corpus = load_corpus(&config.corpus)?;
    let graph = build_citation_graph(&corpus);
    let judgments = build_relevance(&corpus);
    info!(
        "corpus: {} documents, {} tokens in vocabulary, {} citation edges, {} judged queries",
        corpus.total_docs,
        corpus.vocabulary.len(),
        graph.edge_count(),
        judgments.len()
    );
    Ok(Prepared {
        corpus,
        graph,
        judgments,
    })
}

/// A copy of the corpus whose documents keep only their first `limit` tokens.
fn truncated(corpus: &Corpus, limit: Option<usize>) -> Result<Option<Corpus>> {
    let Some(limit) = limit else {
        return Ok(None);
    };
    let docs = corpus
        .documents
        .values()
        .map(|d| Document {
            id: d.id.clone(),
            tokens: truncate_tokens(d, limit).to_vec(),
            out_citations: d.out_citations.clone(),
            labels: d.labels.clone(),
        })
        .collect();
    Corpus::from_documents(docs).map(Some)
}

fn vec_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}.vec"))
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    family: &'a str,
    corpus: &'a Path,
    docs: usize,
    dim: usize,
    params: serde_json::Value,
}

/// Runs one method's training step and returns its matrix plus the resolved
/// hyperparameters for the manifest.
fn train_method(
    m: &MethodConfig,
    family: Family,
    corpus: &Corpus,
    graph: &CitationGraph,
    eff: &Effective,
) -> Result<(EmbeddingMatrix, serde_json::Value)> {
    match family {
        Family::SgnsAvg => {
            let d = SgnsConfig::default();
            let cfg = SgnsConfig {
                dim: m.dim.unwrap_or(d.dim),
                window: m.window.unwrap_or(d.window),
                negatives: m.negatives.unwrap_or(d.negatives),
                epochs: m.epochs.unwrap_or(d.epochs),
                learning_rate: m.learning_rate.unwrap_or(d.learning_rate),
                min_count: m.min_count.unwrap_or(d.min_count),
                subsample: m.subsample.unwrap_or(d.subsample),
                workers: eff.workers,
                seed: eff.seed,
            };
            let limit = m.token_limit.or(eff.token_limit);
            let text = truncated(corpus, limit)?;
            let text = text.as_ref().unwrap_or(corpus);
            let wv = train_word_vectors_sgns(text, &cfg)?;
            let matrix = caserec_core::averaged_matrix(corpus, &wv, limit, &m.name)?;
            let mut params = serde_json::to_value(&cfg).expect("plain struct");
            params["token_limit"] = serde_json::to_value(limit).expect("plain option");
            Ok((matrix, params))
        }
        Family::PvDbow => {
            let d = PvDbowConfig::default();
            let cfg = PvDbowConfig {
                dim: m.dim.unwrap_or(d.dim),
                negatives: m.negatives.unwrap_or(d.negatives),
                epochs: m.epochs.unwrap_or(d.epochs),
                learning_rate: m.learning_rate.unwrap_or(d.learning_rate),
                min_count: m.min_count.unwrap_or(d.min_count),
                subsample: m.subsample.unwrap_or(d.subsample),
                workers: eff.workers,
                seed: eff.seed,
            };
            let text = truncated(corpus, eff.token_limit)?;
            let text = text.as_ref().unwrap_or(corpus);
            let mut matrix = train_pv_dbow(text, &cfg)?;
            matrix.method = m.name.clone();
            let params = serde_json::to_value(&cfg).expect("plain struct");
            Ok((matrix, params))
        }
        Family::Deepwalk => {
            let d = DeepwalkConfig::default();
            let cfg = DeepwalkConfig {
                dim: m.dim.unwrap_or(d.dim),
                walks_per_node: m.walks_per_node.unwrap_or(d.walks_per_node),
                walk_length: m.walk_length.unwrap_or(d.walk_length),
                window: m.window.unwrap_or(d.window),
                negatives: m.negatives.unwrap_or(d.negatives),
                epochs: m.epochs.unwrap_or(d.epochs),
                learning_rate: m.learning_rate.unwrap_or(d.learning_rate),
                workers: eff.workers,
                seed: eff.seed,
            };
            let mut matrix = deepwalk(graph, &cfg)?;
            matrix.method = m.name.clone();
            let params = serde_json::to_value(&cfg).expect("plain struct");
            Ok((matrix, params))
        }
        Family::Walklets => {
            let d = WalkletsConfig::default();
            let cfg = WalkletsConfig {
                dim: m.dim.unwrap_or(d.dim),
                num_scales: m.num_scales.unwrap_or(d.num_scales),
                walks_per_node: m.walks_per_node.unwrap_or(d.walks_per_node),
                walk_length: m.walk_length.unwrap_or(d.walk_length),
                window: m.window.unwrap_or(d.window),
                negatives: m.negatives.unwrap_or(d.negatives),
                epochs: m.epochs.unwrap_or(d.epochs),
                learning_rate: m.learning_rate.unwrap_or(d.learning_rate),
                workers: eff.workers,
                seed: eff.seed,
            };
            let mut matrix = walklets(graph, &cfg)?;
            matrix.method = m.name.clone();
            let params = serde_json::to_value(&cfg).expect("plain struct");
            Ok((matrix, params))
        }
        Family::Boostne => {
            let d = BoostneConfig::default();
            let cfg = BoostneConfig {
                dim: m.dim.unwrap_or(d.dim),
                levels: m.levels.unwrap_or(d.levels),
                nmf_iterations: m.nmf_iterations.unwrap_or(d.nmf_iterations),
                seed: eff.seed,
            };
            let mut matrix = boostne(graph, &cfg)?;
            matrix.method = m.name.clone();
            let params = serde_json::to_value(&cfg).expect("plain struct");
            Ok((matrix, params))
        }
        Family::Poincare => {
            let d = PoincareConfig::default();
            let cfg = PoincareConfig {
                dim: m.dim.unwrap_or(d.dim),
                epochs: m.epochs.unwrap_or(d.epochs),
                negatives: m.negatives.unwrap_or(d.negatives),
                learning_rate: m.learning_rate.unwrap_or(d.learning_rate),
                burn_in_epochs: m.burn_in_epochs.unwrap_or(d.burn_in_epochs),
                burn_in_factor: m.burn_in_factor.unwrap_or(d.burn_in_factor),
                epsilon: d.epsilon,
                seed: eff.seed,
            };
            let matrix = poincare_train(graph, &cfg)?.to_matrix(&m.name);
            let params = serde_json::to_value(&cfg).expect("plain struct");
            Ok((matrix, params))
        }
        Family::Tfidf
        | Family::Import
        | Family::Concat
        | Family::Sum
        | Family::Random => Err(Error::InvalidParameter(format!(
            "method {:?} (family {family}) has no training step",
            m.name
        ))),
    }
}

pub fn train(config: &RunConfig, eff: &Effective, names: &[String]) -> Result<()> {
    let prepared = prepare(config)?;
    let selected = config.selected(names)?;
    fs::create_dir_all(&eff.out).map_err(|e| Error::io(&eff.out, e))?;
    let explicit = !names.is_empty();
    let mut trained = 0usize;
    for m in selected {
        let family = m.family()?;
        if !family.trainable() {
            if explicit {
                return Err(Error::InvalidParameter(format!(
                    "method {:?} (family {family}) has no training step",
                    m.name
                )));
            }
            info!("skipping {:?}: family {family} has no training step", m.name);
            continue;
        }
        info!("training {:?} ({family})", m.name);
        let (matrix, params) = train_method(m, family, &prepared.corpus, &prepared.graph, eff)?;
        let path = vec_path(&eff.out, &m.name);
        matrix.write_text(&path)?;
        let manifest = Manifest {
            name: &m.name,
            family: &m.family,
            corpus: &config.corpus,
            docs: matrix.len(),
            dim: matrix.dim,
            params,
        };
        output::write_json(&eff.out.join(format!("{}.manifest.json", m.name)), &manifest)?;
        info!("wrote {} ({} vectors, dim {})", path.display(), matrix.len(), matrix.dim);
        trained += 1;
    }
    if trained == 0 {
        return Err(Error::InvalidParameter(
            "no trainable method selected".into(),
        ));
    }
    Ok(())
}

/// Loads (and caches) the dense matrix of a trainable or imported method.
fn load_dense<'a>(
    cache: &'a mut BTreeMap<String, EmbeddingMatrix>,
    m: &MethodConfig,
    eff: &Effective,
    ids: &BTreeSet<String>,
) -> Result<&'a EmbeddingMatrix> {
    if !cache.contains_key(&m.name) {
        let family = m.family()?;
        let matrix = if family == Family::Import {
            import_embeddings(m.path.as_ref().expect("validated at load"), ids)?
        } else if family.trainable() {
            let path = vec_path(&eff.out, &m.name);
            if !path.is_file() {
                return Err(Error::io(
                    &path,
                    io::Error::new(
                        io::ErrorKind::NotFound,
                        format!(
                            "no trained vectors; run `caserec train --method {}` first",
                            m.name
                        ),
                    ),
                ));
            }
            EmbeddingMatrix::read_text(&path, m.name.clone())?
        } else {
            return Err(Error::InvalidParameter(format!(
                "method {:?} (family {family}) has no dense vectors",
                m.name
            )));
        };
        cache.insert(m.name.clone(), matrix);
    }
    Ok(&cache[&m.name])
}

/// Produces the ranked lists of one method for the given queries.
fn method_run(
    config: &RunConfig,
    eff: &Effective,
    prepared: &Prepared,
    cache: &mut BTreeMap<String, EmbeddingMatrix>,
    m: &MethodConfig,
    queries: &[&str],
) -> Result<RecommendationRun> {
    let family = m.family()?;
    match family {
        Family::Tfidf => {
            let text = truncated(&prepared.corpus, eff.token_limit)?;
            let text = text.as_ref().unwrap_or(&prepared.corpus);
            let set = fit_tfidf(text, m.max_features.unwrap_or(500_000))?;
            sparse_run(&m.name, &set, queries, eff.k)
        }
        Family::Random => {
            let candidates: Vec<String> = prepared.corpus.documents.keys().cloned().collect();
            Ok(random_run(&m.name, &candidates, queries, eff.k, eff.seed))
        }
        Family::Concat | Family::Sum => {
            let parts = m.parts.as_ref().expect("validated at load");
            for part in parts {
                load_dense(cache, config.method(part)?, eff, &prepared.corpus.id_set())?;
            }
            let refs: Vec<&EmbeddingMatrix> =
                parts.iter().map(|p| &cache[p]).collect();
            if family == Family::Concat {
                let combined = concat_embeddings(&refs, m.normalize_parts.unwrap_or(true))?;
                matrix_run(&m.name, &combined, queries, eff.k)
            } else {
                score_sum_run(&m.name, &refs, queries, eff.k)
            }
        }
        Family::Poincare if m.distance.as_deref() == Some("hyperbolic") => {
            let matrix = load_dense(cache, m, eff, &prepared.corpus.id_set())?;
            let emb = PoincareEmbedding::from_matrix(matrix, PoincareConfig::default().epsilon)?;
            let mut lists = BTreeMap::new();
            for &q in queries {
                lists.insert(q.to_string(), top_k_hyperbolic(q, &emb, eff.k)?);
            }
            Ok(RecommendationRun {
                method: m.name.clone(),
                k: eff.k,
                lists,
            })
        }
        _ => {
            let matrix = load_dense(cache, m, eff, &prepared.corpus.id_set())?;
            matrix_run(&m.name, matrix, queries, eff.k)
        }
    }
}

pub(crate) fn build_runs(
    config: &RunConfig,
    eff: &Effective,
    prepared: &Prepared,
    names: &[String],
    queries: &[&str],
) -> Result<Vec<RecommendationRun>> {
    let selected = config.selected(names)?;
    if selected.is_empty() {
        return Err(Error::InvalidParameter(
            "config defines no methods".into(),
        ));
    }
    let mut cache = BTreeMap::new();
    let mut runs = Vec::with_capacity(selected.len());
    for m in selected {
        info!("ranking with {:?}", m.name);
        runs.push(method_run(config, eff, prepared, &mut cache, m, queries)?);
    }
    Ok(runs)
}

pub fn build(config: &RunConfig, eff: &Effective) -> Result<()> {
    let prepared = prepare(config)?;
    let stats = corpus_stats(&prepared.judgments)?;
    fs::create_dir_all(&eff.out).map_err(|e| Error::io(&eff.out, e))?;

    #[derive(Serialize)]
    struct CorpusReport<'a> {
        total_docs: usize,
        vocabulary_size: usize,
        graph_nodes: usize,
        graph_edges: usize,
        relevance: &'a caserec_core::RelevanceStats,
    }
    let report = CorpusReport {
        total_docs: prepared.corpus.total_docs,
        vocabulary_size: prepared.corpus.vocabulary.len(),
        graph_nodes: prepared.graph.node_count(),
        graph_edges: prepared.graph.edge_count(),
        relevance: &stats,
    };
    output::write_json(&eff.out.join("corpus_stats.json"), &report)?;
    output::write_json(&eff.out.join("judgments.json"), &prepared.judgments)?;
    println!(
        "{} documents, {} judged queries, mean {:.2} relevant per query",
        prepared.corpus.total_docs, stats.queries, stats.mean
    );
    Ok(())
}

pub fn evaluate(config: &RunConfig, eff: &Effective, names: &[String]) -> Result<()> {
    let prepared = prepare(config)?;
    if prepared.judgments.is_empty() {
        return Err(Error::EmptyInput(
            "no two documents share a label; nothing to evaluate".into(),
        ));
    }
    let queries: Vec<&str> = prepared.judgments.queries().collect();
    let runs = build_runs(config, eff, &prepared, names, &queries)?;
    let run_refs: Vec<&RecommendationRun> = runs.iter().collect();

    let rows = runs
        .iter()
        .map(|r| caserec_core::evaluate(r, &prepared.judgments, prepared.corpus.total_docs))
        .collect::<Result<Vec<_>>>()?;

    let words: BTreeMap<String, u64> = prepared
        .corpus
        .documents
        .values()
        .map(|d| (d.id.clone(), d.tokens.len() as u64))
        .collect();
    let degrees: BTreeMap<String, u64> = prepared
        .corpus
        .documents
        .keys()
        .map(|id| (id.clone(), prepared.graph.degree(id) as u64))
        .collect();
    let buckets_by_words =
        bucketize_and_map(&run_refs, &prepared.judgments, "words", &words, eff.n_buckets)?;
    let buckets_by_citations = bucketize_and_map(
        &run_refs,
        &prepared.judgments,
        "citations",
        &degrees,
        eff.n_buckets,
    )?;
    let jaccard = jaccard_matrix(&run_refs)?;

    let report = EvalReport {
        k: eff.k,
        rows,
        buckets_by_words,
        buckets_by_citations,
        jaccard,
    };

    fs::create_dir_all(&eff.out).map_err(|e| Error::io(&eff.out, e))?;
    output::write_json(&eff.out.join("report.json"), &report)?;
    output::write_metrics_csv(&eff.out.join("metrics.csv"), &report.rows)?;
    output::write_recommendations_csv(&eff.out.join("recommendations.csv"), &runs)?;
    output::write_bucket_csv(&eff.out.join("buckets_words.csv"), &report.buckets_by_words)?;
    output::write_bucket_csv(
        &eff.out.join("buckets_citations.csv"),
        &report.buckets_by_citations,
    )?;
    output::write_jaccard_csv(&eff.out.join("jaccard.csv"), &report.jaccard)?;

    println!(
        "{:<20} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "method", "queries", "precision", "recall", "mrr", "map", "coverage"
    );
    for row in &report.rows {
        println!(
            "{:<20} {:>8} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            row.method, row.queries, row.precision, row.recall, row.mrr, row.map, row.coverage
        );
    }
    info!("wrote report and tables to {}", eff.out.display());
    Ok(())
}

pub fn recommend(config: &RunConfig, eff: &Effective, method: &str, doc: &str) -> Result<()> {
    let prepared = prepare(config)?;
    if prepared.corpus.get(doc).is_none() {
        return Err(Error::UnknownId(doc.to_string()));
    }
    let m = config.method(method)?;
    let mut cache = BTreeMap::new();
    let run = method_run(config, eff, &prepared, &mut cache, m, &[doc])?;
    let list: &RankedList = run.list(doc).expect("one query, one list");
    for (rank, e) in list.entries.iter().enumerate() {
        println!("{}\t{}\t{}", rank + 1, e.id, e.score);
    }
    Ok(())
}

pub fn compare(config: &RunConfig, eff: &Effective, names: &[String]) -> Result<()> {
    let prepared = prepare(config)?;
    if prepared.judgments.is_empty() {
        return Err(Error::EmptyInput(
            "no two documents share a label; nothing to compare".into(),
        ));
    }
    let queries: Vec<&str> = prepared.judgments.queries().collect();
    let runs = build_runs(config, eff, &prepared, names, &queries)?;
    if runs.len() < 2 {
        return Err(Error::InvalidParameter(
            "comparison needs at least two methods".into(),
        ));
    }
    let run_refs: Vec<&RecommendationRun> = runs.iter().collect();
    let jaccard = jaccard_matrix(&run_refs)?;
    print!("method");
    for name in &jaccard.methods {
        print!("\t{name}");
    }
    println!();
    for (i, name) in jaccard.methods.iter().enumerate() {
        print!("{name}");
        for v in &jaccard.values[i] {
            print!("\t{v:.4}");
        }
        println!();
    }
    Ok(())
}
