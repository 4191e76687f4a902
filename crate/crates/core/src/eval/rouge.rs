//! ROUGE-1/2/L F-measures (β = 1) on lowercased alphanumeric tokens, no
//! stemming or stopword removal, and the average-of-maxima aggregate.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RougeVariant {
    #[serde(rename = "rouge1")]
    One,
    #[serde(rename = "rouge2")]
    Two,
    #[serde(rename = "rougeL")]
    L,
}

impl FromStr for RougeVariant {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().trim_start_matches("rouge").trim_start_matches('-') {
            "1" => Ok(RougeVariant::One),
            "2" => Ok(RougeVariant::Two),
            "l" => Ok(RougeVariant::L),
            _ => Err(EvalError::Config(format!("unknown ROUGE variant {s:?}"))),
        }
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn f_measure(overlap: usize, candidate_len: usize, reference_len: usize) -> f64 {
    if overlap == 0 || candidate_len == 0 || reference_len == 0 {
        return 0.0;
    }
    let p = overlap as f64 / candidate_len as f64;
    let r = overlap as f64 / reference_len as f64;
    2.0 * p * r / (p + r)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_default() += 1;
        }
    }
    counts
}

fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> f64 {
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let overlap: usize = c
        .iter()
        .map(|(gram, count)| (*count).min(r.get(gram).copied().unwrap_or(0)))
        .sum();
    f_measure(
        overlap,
        candidate.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE F1 of one candidate against one reference.
pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> f64 {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    match variant {
        RougeVariant::One => rouge_n(&c, &r, 1),
        RougeVariant::Two => rouge_n(&c, &r, 2),
        RougeVariant::L => f_measure(lcs_len(&c, &r), c.len(), r.len()),
    }
}

/// For each generated key point, the best ROUGE against any reference;
/// returns the mean of those maxima.
pub fn rouge_max_avg(
    generated: &[String],
    references: &[String],
    variant: RougeVariant,
) -> Result<f64, EvalError> {
    if generated.is_empty() || references.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let total: f64 = generated
        .iter()
        .map(|g| {
            references
                .iter()
                .map(|r| rouge(g, r, variant))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total / generated.len() as f64)
}
