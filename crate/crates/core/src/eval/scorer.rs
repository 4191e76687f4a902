//! Pairwise key point similarity functions.

use std::collections::HashMap;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::rouge::tokenize;
use super::EvalError;
use crate::clustering::{cosine, term_vector, VectorStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    LexicalF1,
    EmbeddingCosine,
    External,
}

impl FromStr for ScorerKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexical_f1" => Ok(ScorerKind::LexicalF1),
            "embedding_cosine" => Ok(ScorerKind::EmbeddingCosine),
            "external" => Ok(ScorerKind::External),
            _ => Err(EvalError::Config(format!("unknown scorer {s:?}"))),
        }
    }
}

/// Similarity `f(candidate, reference)` in `[0, 1]`.
pub trait SimilarityScorer: Send + Sync {
    fn kind(&self) -> ScorerKind;

    fn score(&self, candidate: &str, reference: &str) -> Result<f64, EvalError>;

    /// `matrix[i][j] = f(candidates[i], references[j])`.
    fn score_matrix(
        &self,
        candidates: &[String],
        references: &[String],
    ) -> Result<Vec<Vec<f64>>, EvalError> {
        candidates
            .iter()
            .map(|c| references.iter().map(|r| self.score(c, r)).collect())
            .collect()
    }
}

/// Token-level F1 after lowercasing and punctuation stripping.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalF1;

impl SimilarityScorer for LexicalF1 {
    fn kind(&self) -> ScorerKind {
        ScorerKind::LexicalF1
    }

    fn score(&self, candidate: &str, reference: &str) -> Result<f64, EvalError> {
        let c = tokenize(candidate);
        let r = tokenize(reference);
        if c.is_empty() && r.is_empty() {
            return Ok(1.0);
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &r {
            *counts.entry(t).or_default() += 1;
        }
        let mut overlap = 0usize;
        for t in &c {
            if let Some(n) = counts.get_mut(t.as_str()).filter(|n| **n > 0) {
                *n -= 1;
                overlap += 1;
            }
        }
        if overlap == 0 {
            return Ok(0.0);
        }
        let p = overlap as f64 / c.len() as f64;
        let r = overlap as f64 / r.len() as f64;
        Ok(2.0 * p * r / (p + r))
    }
}

/// Cosine of mean word vectors, clipped at 0.
pub struct EmbeddingCosine {
    store: VectorStore,
}

impl EmbeddingCosine {
    pub fn new(store: VectorStore) -> Self {
        EmbeddingCosine { store }
    }
}

impl SimilarityScorer for EmbeddingCosine {
    fn kind(&self) -> ScorerKind {
        ScorerKind::EmbeddingCosine
    }

    fn score(&self, candidate: &str, reference: &str) -> Result<f64, EvalError> {
        let c = term_vector(&tokenize(candidate).join(" "), &self.store);
        let r = term_vector(&tokenize(reference).join(" "), &self.store);
        let sim = cosine(&c, &r).map_err(|e| EvalError::Scorer(e.to_string()))?;
        Ok(sim.max(0.0))
    }
}

#[derive(Serialize)]
struct ScorePair<'a> {
    candidate: &'a str,
    reference: &'a str,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    pairs: Vec<ScorePair<'a>>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

/// Client for an external scoring service (BLEURT, BARTScore, ...):
/// `POST {"pairs": [{"candidate", "reference"}]}` answered by
/// `{"scores": [..]}` in the same order.
pub struct ExternalScorer {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl ExternalScorer {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, EvalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EvalError::Scorer(e.to_string()))?;
        Ok(ExternalScorer {
            endpoint: endpoint.into(),
            client,
        })
    }

    fn post(&self, pairs: Vec<ScorePair<'_>>) -> Result<Vec<f64>, EvalError> {
        let expected = pairs.len();
        let response = self
            .client
            .post(&self.endpoint)
            .json(&ScoreRequest { pairs })
            .send()
            .map_err(|e| EvalError::Scorer(e.to_string()))?;
        if !response.status().is_success() {
            return Err(EvalError::Scorer(format!("HTTP status {}", response.status())));
        }
        let body: ScoreResponse = response
            .json()
            .map_err(|e| EvalError::Scorer(e.to_string()))?;
        if body.scores.len() != expected {
            return Err(EvalError::Scorer(format!(
                "expected {expected} scores, got {}",
                body.scores.len()
            )));
        }
        if let Some(bad) = body.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(EvalError::Scorer(format!("score {bad} outside [0, 1]")));
        }
        Ok(body.scores)
    }
}

impl SimilarityScorer for ExternalScorer {
    fn kind(&self) -> ScorerKind {
        ScorerKind::External
    }

    fn score(&self, candidate: &str, reference: &str) -> Result<f64, EvalError> {
        Ok(self.post(vec![ScorePair { candidate, reference }])?[0])
    }

    fn score_matrix(
        &self,
        candidates: &[String],
        references: &[String],
    ) -> Result<Vec<Vec<f64>>, EvalError> {
        let pairs = candidates
            .iter()
            .flat_map(|c| {
                references.iter().map(move |r| ScorePair {
                    candidate: c,
                    reference: r,
                })
            })
            .collect();
        let flat = self.post(pairs)?;
        Ok(flat
            .chunks(references.len().max(1))
            .map(<[f64]>::to_vec)
            .collect())
    }
}
