//! Human match judgments: Cohen's kappa, the Annotator-kappa filter, the
//! 60% majority rule and quantification precision.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judgment {
    Yes,
    No,
    /// The annotator flagged the key point itself as unusable.
    Faulty,
}

impl FromStr for Judgment {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "yes" | "y" | "1" | "true" => Ok(Judgment::Yes),
            "no" | "n" | "0" | "false" => Ok(Judgment::No),
            "faulty" | "faulty key point" | "faulty_kp" => Ok(Judgment::Faulty),
            other => Err(EvalError::Config(format!("unknown judgment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub comment_id: String,
    pub kp_id: String,
    pub annotator_id: String,
    pub judgment: Judgment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl MatchRecord {
    fn pair(&self) -> (String, String) {
        (self.comment_id.clone(), self.kp_id.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchAnnotationSet {
    pub records: Vec<MatchRecord>,
    /// Matching threshold of the system whose pairs were annotated. Recorded
    /// for imported baseline outputs; cluster membership needs none.
    pub t_match: Option<f64>,
}

impl MatchAnnotationSet {
    pub fn new(records: Vec<MatchRecord>, t_match: Option<f64>) -> Result<Self, EvalError> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if !seen.insert((&r.comment_id, &r.kp_id, &r.annotator_id)) {
                return Err(EvalError::Config(format!(
                    "duplicate judgment for comment {:?}, key point {:?}, annotator {:?}",
                    r.comment_id, r.kp_id, r.annotator_id
                )));
            }
        }
        Ok(MatchAnnotationSet { records, t_match })
    }

    /// Reads CSV (with a header row) or JSONL, chosen by file extension.
    pub fn load(path: &Path, t_match: Option<f64>) -> Result<Self, EvalError> {
        let is_csv = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let records = if is_csv {
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(path)
                .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
            let mut out = Vec::new();
            for row in reader.deserialize::<CsvRow>() {
                let row = row.map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))?;
                out.push(MatchRecord {
                    judgment: row.judgment.parse()?,
                    comment_id: row.comment_id,
                    kp_id: row.kp_id,
                    annotator_id: row.annotator_id,
                    category: row.category.filter(|c| !c.is_empty()),
                });
            }
            out
        } else {
            crate::io::read_jsonl(path).map_err(|e| EvalError::Io(e.to_string()))?
        };
        Self::new(records, t_match)
    }
}

#[derive(Deserialize)]
struct CsvRow {
    comment_id: String,
    kp_id: String,
    annotator_id: String,
    judgment: String,
    #[serde(default)]
    category: Option<String>,
}

/// Cohen's kappa between two raters labelling the same items.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let mut marginals: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    for x in a {
        marginals.entry(x).or_default().0 += 1;
    }
    for y in b {
        marginals.entry(y).or_default().1 += 1;
    }
    let p_o = agree / n;
    let p_e: f64 = marginals
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Ok(if agree == n { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaFilterParams {
    pub min_shared: usize,
    pub min_peers: usize,
}

impl Default for KappaFilterParams {
    fn default() -> Self {
        KappaFilterParams {
            min_shared: 50,
            min_peers: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KappaFilterResult {
    pub kept: BTreeSet<String>,
    /// Excluded annotators with their Annotator-kappa.
    pub excluded: BTreeMap<String, f64>,
    /// Annotator-kappa for every annotator that met the sharing threshold.
    pub annotator_kappa: BTreeMap<String, f64>,
}

/// Computes each annotator's mean pairwise kappa over the peers it shares
/// at least `min_shared` judgments with. Annotators with fewer than
/// `min_peers` such peers get no score and are kept; the rest are excluded
/// when their score is negative.
pub fn annotator_kappa_filter(records: &[MatchRecord], params: &KappaFilterParams) -> KappaFilterResult {
    let mut by_annotator: BTreeMap<&str, BTreeMap<(String, String), Judgment>> = BTreeMap::new();
    for r in records {
        by_annotator
            .entry(r.annotator_id.as_str())
            .or_default()
            .insert(r.pair(), r.judgment);
    }
    let mut result = KappaFilterResult::default();
    for (&id, mine) in &by_annotator {
        let mut kappas = Vec::new();
        for (&peer, theirs) in &by_annotator {
            if peer == id {
                continue;
            }
            let (a, b): (Vec<Judgment>, Vec<Judgment>) = mine
                .iter()
                .filter_map(|(pair, j)| theirs.get(pair).map(|k| (*j, *k)))
                .unzip();
            if a.len() >= params.min_shared {
                kappas.push(cohens_kappa(&a, &b).expect("equal nonempty sequences"));
            }
        }
        if kappas.len() >= params.min_peers {
            let kappa = kappas.iter().sum::<f64>() / kappas.len() as f64;
            result.annotator_kappa.insert(id.to_string(), kappa);
            if kappa < 0.0 {
                result.excluded.insert(id.to_string(), kappa);
                continue;
            }
        }
        result.kept.insert(id.to_string());
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
}

/// Majority rule: correct iff at least 60% of the votes are "yes". Faulty
/// votes count toward the total.
pub fn aggregate_votes(votes: &[Judgment]) -> Result<Verdict, EvalError> {
    if votes.is_empty() {
        return Err(EvalError::NoVotes);
    }
    let yes = votes.iter().filter(|j| **j == Judgment::Yes).count();
    Ok(if yes * 5 >= votes.len() * 3 {
        Verdict::Correct
    } else {
        Verdict::Incorrect
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchVerdicts {
    /// (comment_id, kp_id) -> verdict.
    pub verdicts: BTreeMap<(String, String), Verdict>,
    /// Pairs whose every vote came from an excluded annotator.
    pub unresolved: Vec<(String, String)>,
    pub categories: BTreeMap<(String, String), String>,
}

impl MatchVerdicts {
    /// Groups verdicts by category; pairs without one fall under `default`.
    pub fn by_category(&self, default: &str) -> BTreeMap<String, Vec<Verdict>> {
        let mut out: BTreeMap<String, Vec<Verdict>> = BTreeMap::new();
        for (pair, verdict) in &self.verdicts {
            let cat = self.categories.get(pair).map_or(default, String::as_str);
            out.entry(cat.to_string()).or_default().push(*verdict);
        }
        out
    }
}

pub fn aggregate_matches(records: &[MatchRecord], excluded: &BTreeSet<String>) -> MatchVerdicts {
    let mut votes: BTreeMap<(String, String), Vec<Judgment>> = BTreeMap::new();
    let mut out = MatchVerdicts::default();
    for r in records {
        let entry = votes.entry(r.pair()).or_default();
        if let Some(cat) = &r.category {
            out.categories.insert(r.pair(), cat.clone());
        }
        if !excluded.contains(&r.annotator_id) {
            entry.push(r.judgment);
        }
    }
    for (pair, v) in votes {
        match aggregate_votes(&v) {
            Ok(verdict) => {
                out.verdicts.insert(pair, verdict);
            }
            Err(_) => out.unresolved.push(pair),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionTable {
    pub per_category: BTreeMap<String, f64>,
    pub average: f64,
}

pub fn quantification_precision(
    grouped: &BTreeMap<String, Vec<Verdict>>,
) -> Result<PrecisionTable, EvalError> {
    if grouped.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut per_category = BTreeMap::new();
    for (cat, verdicts) in grouped {
        if verdicts.is_empty() {
            return Err(EvalError::EmptyCategory(cat.clone()));
        }
        let correct = verdicts.iter().filter(|v| **v == Verdict::Correct).count();
        per_category.insert(cat.clone(), correct as f64 / verdicts.len() as f64);
    }
    let average = per_category.values().sum::<f64>() / per_category.len() as f64;
    Ok(PrecisionTable {
        per_category,
        average,
    })
}
