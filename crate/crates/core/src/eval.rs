use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::RelevanceJudgments;
use crate::error::{Error, Result};
use crate::retrieval::{RankedList, RecommendationRun};

fn hits_in(list: &RankedList, relevant: &BTreeSet<String>) -> usize {
    list.entries
        .iter()
        .filter(|e| relevant.contains(&e.id))
        .count()
}

/// Fraction of the k slots filled with relevant documents. The denominator
/// stays k even when fewer candidates were available.
pub fn precision_at_k(list: &RankedList, relevant: &BTreeSet<String>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hits_in(list, relevant) as f64 / k as f64
}

/// Fraction of the relevant documents that made it into the list.
pub fn recall_at_k(list: &RankedList, relevant: &BTreeSet<String>) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    hits_in(list, relevant) as f64 / relevant.len() as f64
}

/// 1/rank of the first relevant entry; 0 when none is relevant.
pub fn reciprocal_rank(list: &RankedList, relevant: &BTreeSet<String>) -> f64 {
    for (i, e) in list.entries.iter().enumerate() {
        if relevant.contains(&e.id) {
            return 1.0 / (i + 1) as f64;
        }
    }
    0.0
}

/// Average precision at the list cutoff: precision is accumulated at each
/// relevant rank and divided by the total number of relevant documents, so a
/// short list is penalized for everything it could not fit.
pub fn average_precision_at_k(list: &RankedList, relevant: &BTreeSet<String>) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, e) in list.entries.iter().enumerate() {
        if relevant.contains(&e.id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / relevant.len() as f64
}

/// Fraction of the collection recommended to at least one query.
pub fn coverage(run: &RecommendationRun, total_docs: usize) -> f64 {
    if total_docs == 0 {
        return 0.0;
    }
    run.recommended_ids().len() as f64 / total_docs as f64
}

/// Mean per-query Jaccard similarity of the recommended sets of two runs.
/// Both runs must cover the same queries; two empty lists count as 1.
pub fn jaccard_overlap(a: &RecommendationRun, b: &RecommendationRun) -> Result<f64> {
    if a.lists.len() != b.lists.len() || a.lists.keys().any(|q| !b.lists.contains_key(q)) {
        return Err(Error::IdSetMismatch(format!(
            "runs {:?} and {:?} cover different query sets",
            a.method, b.method
        )));
    }
    if a.lists.is_empty() {
        return Err(Error::EmptyInput("no queries to overlap".into()));
    }
    let mut sum = 0.0;
    for (q, la) in &a.lists {
        let lb = &b.lists[q];
        let sa: BTreeSet<&str> = la.entries.iter().map(|e| e.id.as_str()).collect();
        let sb: BTreeSet<&str> = lb.entries.iter().map(|e| e.id.as_str()).collect();
        let union = sa.union(&sb).count();
        sum += if union == 0 {
            1.0
        } else {
            sa.intersection(&sb).count() as f64 / union as f64
        };
    }
    Ok(sum / a.lists.len() as f64)
}

/// Symmetric pairwise [`jaccard_overlap`] table; diagonal entries are 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JaccardMatrix {
    pub methods: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn jaccard_matrix(runs: &[&RecommendationRun]) -> Result<JaccardMatrix> {
    let n = runs.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in i + 1..n {
            let v = jaccard_overlap(runs[i], runs[j])?;
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(JaccardMatrix {
        methods: runs.iter().map(|r| r.method.clone()).collect(),
        values,
    })
}

/// Aggregate ranking quality of one run over all judged queries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub method: String,
    pub queries: usize,
    pub mean_relevant: f64,
    pub precision: f64,
    pub recall: f64,
    pub mrr: f64,
    pub map: f64,
    pub coverage: f64,
}

/// Scores a run against the judgments. Queries without a ranked list are
/// scored as empty lists; precision is derived from `mean_relevant` so the
/// identity `precision == mean_relevant / k` holds exactly.
pub fn evaluate(
    run: &RecommendationRun,
    judgments: &RelevanceJudgments,
    total_docs: usize,
) -> Result<MetricRow> {
    if judgments.is_empty() {
        return Err(Error::EmptyInput("no judged queries".into()));
    }
    let empty = RankedList {
        seed: String::new(),
        entries: Vec::new(),
    };
    let mut hit_total = 0usize;
    let mut recall_sum = 0.0;
    let mut rr_sum = 0.0;
    let mut ap_sum = 0.0;
    for (q, relevant) in judgments.iter() {
        let list = run.list(q).unwrap_or(&empty);
        hit_total += hits_in(list, relevant);
        recall_sum += recall_at_k(list, relevant);
        rr_sum += reciprocal_rank(list, relevant);
        ap_sum += average_precision_at_k(list, relevant);
    }
    let q = judgments.len() as f64;
    let mean_relevant = hit_total as f64 / q;
    Ok(MetricRow {
        method: run.method.clone(),
        queries: judgments.len(),
        mean_relevant,
        precision: mean_relevant / run.k as f64,
        recall: recall_sum / q,
        mrr: rr_sum / q,
        map: ap_sum / q,
        coverage: coverage(run, total_docs),
    })
}

/// One key interval with its per-method mean average precision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRow {
    pub bucket: usize,
    pub min_key: u64,
    pub max_key: u64,
    pub size: usize,
    pub map_by_method: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketTable {
    pub key: String,
    pub rows: Vec<BucketRow>,
}

/// Splits the judged queries into `n_buckets` nearly equal groups by
/// ascending key (document length, degree, ...) and reports per-bucket MAP
/// for every run. The first `queries % n_buckets` buckets take the extra
/// query each.
pub fn bucketize_and_map(
    runs: &[&RecommendationRun],
    judgments: &RelevanceJudgments,
    key_name: &str,
    keys: &BTreeMap<String, u64>,
    n_buckets: usize,
) -> Result<BucketTable> {
    if n_buckets == 0 {
        return Err(Error::InvalidParameter("n_buckets must be positive".into()));
    }
    let total = judgments.len();
    if total < n_buckets {
        return Err(Error::InvalidParameter(format!(
            "{total} judged queries cannot fill {n_buckets} buckets"
        )));
    }
    let mut ordered: Vec<(u64, &str)> = Vec::with_capacity(total);
    for q in judgments.queries() {
        let key = keys
            .get(q)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("no {key_name} key for {q:?}")))?;
        ordered.push((key, q));
    }
    ordered.sort();
    let empty = RankedList {
        seed: String::new(),
        entries: Vec::new(),
    };
    let base = total / n_buckets;
    let extra = total % n_buckets;
    let mut rows = Vec::with_capacity(n_buckets);
    let mut start = 0usize;
    for bucket in 0..n_buckets {
        let size = base + usize::from(bucket < extra);
        let members = &ordered[start..start + size];
        start += size;
        let mut map_by_method = BTreeMap::new();
        for run in runs {
            let mut ap_sum = 0.0;
            for &(_, q) in members {
                let relevant = judgments.relevant(q).expect("query came from judgments");
                let list = run.list(q).unwrap_or(&empty);
                ap_sum += average_precision_at_k(list, relevant);
            }
            map_by_method.insert(run.method.clone(), ap_sum / size as f64);
        }
        rows.push(BucketRow {
            bucket,
            min_key: members[0].0,
            max_key: members[size - 1].0,
            size,
            map_by_method,
        });
    }
    Ok(BucketTable {
        key: key_name.to_string(),
        rows,
    })
}

/// Everything one evaluation produces, ready for serialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub k: usize,
    pub rows: Vec<MetricRow>,
    pub buckets_by_words: BucketTable,
    pub buckets_by_citations: BucketTable,
    pub jaccard: JaccardMatrix,
}
