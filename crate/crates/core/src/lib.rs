//! Recommendation engine for legal document collections: text and
//! citation-graph embeddings, cosine top-k retrieval, hybrid combination,
//! and ranking evaluation against label co-membership judgments.

mod corpus;
mod embedding;
mod error;
mod eval;
mod graph_embed;
mod retrieval;
mod sgns;
mod synthetic;
mod text_embed;

pub use corpus::{
    build_citation_graph, build_relevance, corpus_stats, load_corpus, tokenize, truncate_tokens,
    CitationGraph, Corpus, Document, RelevanceJudgments, RelevanceStats, VocabEntry,
};
pub use embedding::{l2_norm, l2_normalize, read_vector_rows, EmbeddingMatrix};
pub use error::{Error, Result};
pub use eval::{
    average_precision_at_k, bucketize_and_map, coverage, evaluate, jaccard_matrix,
    jaccard_overlap, precision_at_k, recall_at_k, reciprocal_rank, BucketRow, BucketTable,
    EvalReport, JaccardMatrix, MetricRow,
};
pub use graph_embed::{
    boostne, deepwalk, deepwalk_from_walks, generate_walks, nmf_multiplicative, poincare_distance,
    poincare_distance_gradient, poincare_train, riemannian_update, transition_matrix, walklets,
    walklets_from_walks, BoostneConfig, DeepwalkConfig, PoincareConfig, PoincareEmbedding,
    PoincareTrainer, WalkCorpus, WalkletsConfig,
};
pub use retrieval::{
    concat_embeddings, cosine, matrix_run, random_run, score_sum_run, score_sum_top_k,
    sparse_cosine, sparse_run, top_k, top_k_hyperbolic, top_k_sparse, RankedList,
    RecommendationRun, ScoredDoc,
};
pub use synthetic::{synthetic_corpus, SyntheticConfig};
pub use text_embed::{
    average_embedding, averaged_matrix, fit_tfidf, import_embeddings, load_word_vectors,
    train_pv_dbow, train_word_vectors_sgns, PvDbowConfig, SgnsConfig, SparseVectorSet, WordVectors,
};
