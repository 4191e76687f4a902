//! Word vector tables in the whitespace-separated text format
//! (`token v1 v2 ... vd`, one token per line).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum VectorError {
    #[error("cannot read vectors: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {0}: unparsable vector line")]
    ParseError(usize),
    #[error("vector dimensions differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Immutable token → vector table. Tokens are stored lowercase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorStore {
    dimension: usize,
    table: HashMap<String, Vec<f64>>,
    warnings: Vec<String>,
}

impl VectorStore {
    /// Builds a store from in-memory pairs; later duplicates win.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, VectorError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut store = VectorStore::default();
        for (idx, (token, vector)) in pairs.into_iter().enumerate() {
            store.insert(idx + 1, token.as_ref(), vector)?;
        }
        Ok(store)
    }

    fn insert(&mut self, line: usize, token: &str, vector: Vec<f64>) -> Result<(), VectorError> {
        if vector.is_empty() {
            return Err(VectorError::ParseError(line));
        }
        if self.dimension == 0 {
            self.dimension = vector.len();
        } else if vector.len() != self.dimension {
            return Err(VectorError::DimensionMismatch {
                line,
                expected: self.dimension,
                found: vector.len(),
            });
        }
        let token = token.to_lowercase();
        if self.table.insert(token.clone(), vector).is_some() {
            let warning = format!("line {line}: duplicate token {token:?}, keeping the last vector");
            log::warn!("{warning}");
            self.warnings.push(warning);
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.table.get(token).map(Vec::as_slice)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

pub fn load_vectors(path: &Path) -> Result<VectorStore, VectorError> {
    let reader = BufReader::new(File::open(path)?);
    let mut store = VectorStore::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let vector = fields
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| VectorError::ParseError(line_no))?;
        store.insert(line_no, token, vector)?;
    }
    Ok(store)
}

/// Mean of the in-vocabulary token vectors of `term`; the zero vector when
/// no token is known.
pub fn term_vector(term: &str, store: &VectorStore) -> Vec<f64> {
    let mut sum = vec![0.0; store.dimension()];
    let mut known = 0usize;
    for token in term.split_whitespace() {
        if let Some(v) = store.get(&token.to_lowercase()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            known += 1;
        }
    }
    if known > 1 {
        for s in &mut sum {
            *s /= known as f64;
        }
    }
    sum
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, VectorError> {
    if u.len() != v.len() {
        return Err(VectorError::LengthMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_dimension_from_first_line() {
        let f = file("view 1 0 0\nSight 0.9 0.1 0\n");
        let store = load_vectors(f.path()).unwrap();
        assert_eq!((store.dimension(), store.len()), (3, 2));
        assert!(store.get("sight").is_some());
    }

    #[test]
    fn short_line_is_a_dimension_mismatch() {
        let f = file("view 1 0 0\nsight 0.9 0.1\n");
        assert!(matches!(
            load_vectors(f.path()),
            Err(VectorError::DimensionMismatch { line: 2, expected: 3, found: 2 })
        ));
    }

    #[test]
    fn bad_number_is_a_parse_error() {
        let f = file("view 1 x 0\n");
        assert!(matches!(load_vectors(f.path()), Err(VectorError::ParseError(1))));
    }

    #[test]
    fn duplicate_token_last_wins_with_warning() {
        let f = file("view 1 0\nview 0 1\n");
        let store = load_vectors(f.path()).unwrap();
        assert_eq!(store.get("view").unwrap(), &[0.0, 1.0]);
        assert_eq!(store.warnings().len(), 1);
    }

    #[test]
    fn term_vectors() {
        let store = VectorStore::from_pairs([
            ("front", vec![1.0, 0.0]),
            ("desk", vec![0.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(term_vector("desk", &store), vec![0.0, 1.0]);
        assert_eq!(term_vector("front desk", &store), vec![0.5, 0.5]);
        assert_eq!(term_vector("lobby", &store), vec![0.0, 0.0]);
        assert_eq!(term_vector("front lobby", &store), vec![1.0, 0.0]);
    }

    #[test]
    fn cosine_values() {
        assert!((cosine(&[0.3, 0.4], &[0.3, 0.4]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - 0.70710678).abs() < 1e-8);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }
}
