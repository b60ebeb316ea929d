use std::fs;
use std::path::Path;

use caserec_core::{BucketTable, Error, JaccardMatrix, MetricRow, RecommendationRun, Result};
use serde::Serialize;

/// Pretty JSON plus a trailing newline; key order is deterministic because
/// every map in the data model is a BTreeMap.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidParameter(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidParameter(format!("{}: {other:?}", path.display())),
    })
}

fn write_record<W: std::io::Write>(
    w: &mut csv::Writer<W>,
    path: &Path,
    record: &[String],
) -> Result<()> {
    w.write_record(record).map_err(|e| {
        Error::InvalidParameter(format!("writing {}: {e}", path.display()))
    })
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header = [
        "method",
        "queries",
        "mean_relevant",
        "precision",
        "recall",
        "mrr",
        "map",
        "coverage",
    ]
    .map(String::from);
    write_record(&mut w, path, &header)?;
    for r in rows {
        let record = [
            r.method.clone(),
            r.queries.to_string(),
            r.mean_relevant.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.mrr.to_string(),
            r.map.to_string(),
            r.coverage.to_string(),
        ];
        write_record(&mut w, path, &record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_recommendations_csv(path: &Path, runs: &[RecommendationRun]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header = ["method", "seed_id", "rank", "doc_id", "score"].map(String::from);
    write_record(&mut w, path, &header)?;
    for run in runs {
        for (seed, list) in &run.lists {
            for (rank, e) in list.entries.iter().enumerate() {
                let record = [
                    run.method.clone(),
                    seed.clone(),
                    (rank + 1).to_string(),
                    e.id.clone(),
                    e.score.to_string(),
                ];
                write_record(&mut w, path, &record)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_bucket_csv(path: &Path, table: &BucketTable) -> Result<()> {
    let mut w = csv_writer(path)?;
    let methods: Vec<&String> = table
        .rows
        .first()
        .map(|r| r.map_by_method.keys().collect())
        .unwrap_or_default();
    let mut header = vec![
        "bucket".to_string(),
        format!("min_{}", table.key),
        format!("max_{}", table.key),
        "size".to_string(),
    ];
    header.extend(methods.iter().map(|m| m.to_string()));
    write_record(&mut w, path, &header)?;
    for row in &table.rows {
        let mut record = vec![
            row.bucket.to_string(),
            row.min_key.to_string(),
            row.max_key.to_string(),
            row.size.to_string(),
        ];
        for m in &methods {
            record.push(row.map_by_method[*m].to_string());
        }
        write_record(&mut w, path, &record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_jaccard_csv(path: &Path, matrix: &JaccardMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["method".to_string()];
    header.extend(matrix.methods.iter().cloned());
    write_record(&mut w, path, &header)?;
    for (i, name) in matrix.methods.iter().enumerate() {
        let mut record = vec![name.clone()];
        record.extend(matrix.values[i].iter().map(|v| v.to_string()));
        write_record(&mut w, path, &record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
