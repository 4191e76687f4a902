//! Bradley-Terry strengths from pairwise win counts, fitted with the
//! minorization-maximization update
//! `p_i <- W_i / sum_{j != i} n_ij / (p_i + p_j)`.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityDimension {
    Coverage,
    Faithfulness,
    Redundancy,
    Validity,
    Sentiment,
    Informativeness,
    SingleAspect,
}

impl QualityDimension {
    pub const ALL: [QualityDimension; 7] = [
        QualityDimension::Coverage,
        QualityDimension::Faithfulness,
        QualityDimension::Redundancy,
        QualityDimension::Validity,
        QualityDimension::Sentiment,
        QualityDimension::Informativeness,
        QualityDimension::SingleAspect,
    ];
}

impl FromStr for QualityDimension {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_lowercase().replace(['-', ' '], "_");
        Ok(match key.as_str() {
            "coverage" | "cv" => QualityDimension::Coverage,
            "faithfulness" | "ff" => QualityDimension::Faithfulness,
            "redundancy" | "rd" => QualityDimension::Redundancy,
            "validity" | "vl" => QualityDimension::Validity,
            "sentiment" | "sn" => QualityDimension::Sentiment,
            "informativeness" | "in" => QualityDimension::Informativeness,
            "single_aspect" | "singleaspect" | "sa" => QualityDimension::SingleAspect,
            _ => return Err(EvalError::Config(format!("unknown quality dimension {s:?}"))),
        })
    }
}

/// `wins[i][j]` = number of comparisons system `i` won against system `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseJudgments {
    pub dimension: QualityDimension,
    pub wins: Vec<Vec<u64>>,
}

/// Judgments for several dimensions over a shared list of systems; the
/// on-disk format of pairwise evaluation input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentSet {
    pub systems: Vec<String>,
    pub dimensions: BTreeMap<QualityDimension, Vec<Vec<u64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for BtOptions {
    fn default() -> Self {
        BtOptions {
            max_iters: 10_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtFit {
    /// Strengths scaled to sum to 100.
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn validate(wins: &[Vec<u64>]) -> Result<(), EvalError> {
    let n = wins.len();
    for (i, row) in wins.iter().enumerate() {
        if row.len() != n {
            return Err(EvalError::Config(format!(
                "win matrix row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row[i] != 0 {
            return Err(EvalError::Config(format!("win matrix diagonal entry {i} is nonzero")));
        }
    }
    Ok(())
}

fn connected(games: &[Vec<u64>]) -> bool {
    let n = games.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && games[i][j] > 0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn bradley_terry(judgments: &PairwiseJudgments, options: &BtOptions) -> Result<BtFit, EvalError> {
    fit(&judgments.wins, options)
}

/// Fits strengths for the win matrix `wins`.
pub fn fit(wins: &[Vec<u64>], options: &BtOptions) -> Result<BtFit, EvalError> {
    validate(wins)?;
    let n = wins.len();
    let games: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..n).map(|j| wins[i][j] + wins[j][i]).collect())
        .collect();
    if games.iter().flatten().all(|&g| g == 0) {
        return Err(EvalError::NoComparisons);
    }
    if !connected(&games) {
        return Err(EvalError::DisconnectedGraph);
    }
    let total_wins: Vec<f64> = wins.iter().map(|row| row.iter().sum::<u64>() as f64).collect();

    let mut strengths = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iters {
        iterations += 1;
        let mut next: Vec<f64> = (0..n)
            .map(|i| {
                if total_wins[i] == 0.0 {
                    return 0.0;
                }
                let denom: f64 = (0..n)
                    .filter(|&j| j != i && games[i][j] > 0)
                    .map(|j| games[i][j] as f64 / (strengths[i] + strengths[j]))
                    .sum();
                total_wins[i] / denom
            })
            .collect();
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= sum);
        let change = next
            .iter()
            .zip(&strengths)
            .map(|(new, old)| (new - old).abs() / old.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        strengths = next;
        if change < options.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("Bradley-Terry did not converge in {} iterations", options.max_iters);
    }
    let sum: f64 = strengths.iter().sum();
    Ok(BtFit {
        scores: strengths.iter().map(|p| 100.0 * p / sum).collect(),
        iterations,
        converged,
    })
}
