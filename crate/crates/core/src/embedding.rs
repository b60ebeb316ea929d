use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

/// Dense per-document vectors of one method, uniform dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub method: String,
    pub dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn new(method: impl Into<String>, dim: usize) -> Self {
        EmbeddingMatrix {
            method: method.into(),
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                id,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("vector for {id:?}: {bad}")));
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Writes the text format: a `<count> <dim>` header, then one
    /// `<key> <v1> .. <vdim>` row per id in sorted order. Floats use the
    /// shortest round-trippable decimal form, so files are byte-stable.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let write = |out: &mut BufWriter<File>, s: String| {
            out.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
        };
        write(&mut out, format!("{} {}\n", self.len(), self.dim))?;
        for (id, vec) in &self.vectors {
            let mut row = String::with_capacity(self.dim * 8 + id.len());
            row.push_str(id);
            for v in vec {
                row.push(' ');
                row.push_str(&v.to_string());
            }
            row.push('\n');
            write(&mut out, row)?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads the text format back; duplicate keys keep the last row.
    pub fn read_text(path: impl AsRef<Path>, method: impl Into<String>) -> Result<Self> {
        let path = path.as_ref();
        let rows = read_vector_rows(path)?;
        let dim = rows[0].1.len();
        let mut matrix = EmbeddingMatrix::new(method, dim);
        for (key, vector) in rows {
            if vector.len() != dim {
                return Err(Error::DimMismatch {
                    id: key,
                    expected: dim,
                    found: vector.len(),
                });
            }
            if matrix.contains(&key) {
                warn!("{}: duplicate key {:?}, keeping last", path.display(), key);
            }
            matrix.vectors.insert(key, vector);
        }
        Ok(matrix)
    }
}

/// Parses the shared word-vector/embedding text format and returns all
/// `(key, vector)` rows. The optional header (`<count> <dim>`, both plain
/// integers) is detected and skipped; a count disagreeing with the actual
/// row count only warns. Errors on empty files and non-numeric components.
pub fn read_vector_rows(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let key = fields.next().expect("non-blank line has a first field");
        let rest: Vec<&str> = fields.collect();
        if lineno == 1 && rest.len() == 1 {
            if let (Ok(count), Ok(dim)) = (key.parse::<usize>(), rest[0].parse::<usize>()) {
                header = Some((count, dim));
                continue;
            }
        }
        if rest.is_empty() {
            return Err(Error::parse(path, lineno, "row has a key but no components"));
        }
        let mut vector = Vec::with_capacity(rest.len());
        for field in &rest {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(path, lineno, format!("non-numeric component {field:?}"))
            })?;
            vector.push(v);
        }
        rows.push((key.to_string(), vector));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{}: no vector rows",
            path.display()
        )));
    }
    if let Some((count, dim)) = header {
        if count != rows.len() {
            warn!(
                "{}: header announces {} rows, found {}",
                path.display(),
                count,
                rows.len()
            );
        }
        if dim != rows[0].1.len() {
            warn!(
                "{}: header announces dim {}, rows have {}",
                path.display(),
                dim,
                rows[0].1.len()
            );
        }
    }
    Ok(rows)
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales to unit norm in place; zero vectors are left untouched.
pub fn l2_normalize(v: &mut [f64]) {
    let norm = l2_norm(v);
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_checks_dim() {
        let mut m = EmbeddingMatrix::new("m", 3);
        m.insert("a", vec![1.0, 2.0, 3.0]).unwrap();
        match m.insert("b", vec![1.0]) {
            Err(Error::DimMismatch { id, expected, found }) => {
                assert_eq!(id, "b");
                assert_eq!((expected, found), (3, 1));
            }
            other => panic!("expected dim mismatch, got {other:?}"),
        }
    }

    #[test]
    fn text_roundtrip_is_byte_stable() {
        let mut m = EmbeddingMatrix::new("m", 2);
        m.insert("b", vec![0.1, -2.0]).unwrap();
        m.insert("a", vec![1.0 / 3.0, 1e-12]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("one.vec");
        let p2 = dir.path().join("two.vec");
        m.write_text(&p1).unwrap();
        let back = EmbeddingMatrix::read_text(&p1, "m").unwrap();
        assert_eq!(m, back);
        back.write_text(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn header_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.vec");
        std::fs::write(&p, "2 3\na 1 2 3\nb 4 5 6\n").unwrap();
        let rows = read_vector_rows(&p).unwrap();
        assert_eq!(rows.len(), 2);
        std::fs::write(&p, "a 1 2 3\nb 4 5 6\n").unwrap();
        let rows = read_vector_rows(&p).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, "a");
    }

    #[test]
    fn non_numeric_component_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.vec");
        std::fs::write(&p, "a 1 x 3\n").unwrap();
        match read_vector_rows(&p) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("x"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.vec");
        std::fs::write(&p, "").unwrap();
        assert!(matches!(read_vector_rows(&p), Err(Error::EmptyInput(_))));
    }
}
