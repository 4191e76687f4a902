//! Set-level soft precision, recall and F1 between generated and reference
//! key points.

use serde::{Deserialize, Serialize};

use super::scorer::SimilarityScorer;
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftScores {
    #[serde(rename = "sP")]
    pub soft_precision: f64,
    #[serde(rename = "sR")]
    pub soft_recall: f64,
    #[serde(rename = "sF1")]
    pub soft_f1: f64,
}

impl SoftScores {
    pub fn from_parts(soft_precision: f64, soft_recall: f64) -> Self {
        let sum = soft_precision + soft_recall;
        let soft_f1 = if sum == 0.0 {
            0.0
        } else {
            2.0 * soft_precision * soft_recall / sum
        };
        SoftScores {
            soft_precision,
            soft_recall,
            soft_f1,
        }
    }
}

/// Soft precision averages, over candidates, the best similarity to any
/// reference; soft recall averages, over references, the best similarity
/// to any candidate. Soft F1 is their harmonic mean.
pub fn soft_scores(
    candidates: &[String],
    references: &[String],
    scorer: &dyn SimilarityScorer,
) -> Result<SoftScores, EvalError> {
    if candidates.is_empty() || references.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let matrix = scorer.score_matrix(candidates, references)?;
    let best_per_candidate: f64 = matrix
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum();
    let best_per_reference: f64 = (0..references.len())
        .map(|j| {
            matrix
                .iter()
                .map(|row| row[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    Ok(SoftScores::from_parts(
        best_per_candidate / candidates.len() as f64,
        best_per_reference / references.len() as f64,
    ))
}
