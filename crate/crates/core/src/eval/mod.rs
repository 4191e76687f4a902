//! Summary evaluation: ROUGE and soft precision/recall against reference
//! summaries, review coverage, Bradley-Terry rankings from pairwise
//! judgments, and quantification precision from match annotations.

mod agreement;
mod bradley_terry;
mod references;
mod rouge;
mod scorer;
mod soft;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use agreement::{
    aggregate_matches, aggregate_votes, annotator_kappa_filter, cohens_kappa,
    quantification_precision, Judgment, KappaFilterParams, KappaFilterResult, MatchAnnotationSet,
    MatchRecord, MatchVerdicts, PrecisionTable, Verdict,
};
pub use bradley_terry::{
    bradley_terry, fit as fit_bradley_terry, BtFit, BtOptions, JudgmentSet, PairwiseJudgments,
    QualityDimension,
};
pub use references::{split_references_by_polarity, LexiconClassifier, PolarityClassifier};
pub use rouge::{rouge, rouge_max_avg, tokenize, RougeVariant};
pub use scorer::{EmbeddingCosine, ExternalScorer, LexicalF1, ScorerKind, SimilarityScorer};
pub use soft::{soft_scores, SoftScores};

use crate::ingest::ReferenceSummary;
use crate::keypoints::{review_coverage, EntitySummary};
use crate::model::{Polarity, ReviewComment};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("{0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("similarity scorer failed: {0}")]
    Scorer(String),
    #[error("comparison graph is disconnected")]
    DisconnectedGraph,
    #[error("no pairwise comparisons")]
    NoComparisons,
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no votes left after annotator filtering")]
    NoVotes,
    #[error("category {0:?} has no verdicts")]
    EmptyCategory(String),
}

/// Scores for one entity and polarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityScores {
    pub entity_id: String,
    pub polarity: Polarity,
    pub generated: usize,
    pub references: usize,
    pub rouge: BTreeMap<RougeVariant, f64>,
    pub soft: SoftScores,
}

/// Unweighted means over the entity rows they summarise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAverages {
    pub rows: usize,
    pub rouge: BTreeMap<RougeVariant, f64>,
    pub soft: SoftScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub systems: Vec<String>,
    pub scores: BTreeMap<QualityDimension, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantificationReport {
    pub t_match: Option<f64>,
    pub precision: PrecisionTable,
    pub judged_pairs: usize,
    pub unresolved_pairs: usize,
    pub annotator_kappa: BTreeMap<String, f64>,
    pub excluded_annotators: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: ScorerKind,
    pub entities: Vec<EntityScores>,
    /// Keyed by "positive", "negative" and "all".
    pub averages: BTreeMap<String, MetricAverages>,
    /// (entity, polarity) pairs skipped because one side was empty.
    pub skipped: Vec<(String, Polarity)>,
    pub coverage: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bradley_terry: Option<RankingTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantification: Option<QuantificationReport>,
}

pub struct EvalInputs<'a> {
    pub summaries: &'a [EntitySummary],
    pub references: &'a [ReferenceSummary],
    /// Used for review coverage; may be empty.
    pub comments: &'a [ReviewComment],
    pub scorer: &'a dyn SimilarityScorer,
    pub classifier: &'a dyn PolarityClassifier,
    pub polarities: Vec<Polarity>,
    pub judgments: Option<&'a JudgmentSet>,
    pub annotations: Option<&'a MatchAnnotationSet>,
    /// Category used for annotation records that carry none.
    pub default_category: String,
}

const VARIANTS: [RougeVariant; 3] = [RougeVariant::One, RougeVariant::Two, RougeVariant::L];

fn average(rows: &[&EntityScores]) -> MetricAverages {
    let n = rows.len().max(1) as f64;
    let rouge = VARIANTS
        .iter()
        .map(|v| (*v, rows.iter().map(|r| r.rouge[v]).sum::<f64>() / n))
        .collect();
    let sp = rows.iter().map(|r| r.soft.soft_precision).sum::<f64>() / n;
    let sr = rows.iter().map(|r| r.soft.soft_recall).sum::<f64>() / n;
    MetricAverages {
        rows: rows.len(),
        rouge,
        soft: SoftScores::from_parts(sp, sr),
    }
}

pub fn evaluate(inputs: &EvalInputs<'_>) -> Result<EvalReport, EvalError> {
    let refs_by_entity: BTreeMap<&str, &ReferenceSummary> = inputs
        .references
        .iter()
        .map(|r| (r.entity_id.as_str(), r))
        .collect();
    let mut comments_by_entity: BTreeMap<&str, Vec<ReviewComment>> = BTreeMap::new();
    for c in inputs.comments {
        comments_by_entity
            .entry(c.entity.entity_id.as_str())
            .or_default()
            .push(c.clone());
    }

    let mut entities = Vec::new();
    let mut skipped = Vec::new();
    let mut coverage = BTreeMap::new();
    for summary in inputs.summaries {
        let id = summary.entity.entity_id.as_str();
        if let Some(comments) = comments_by_entity.get(id) {
            coverage.insert(id.to_string(), review_coverage(summary, comments));
        }
        let (pos_refs, neg_refs) = match refs_by_entity.get(id) {
            Some(r) => split_references_by_polarity(&r.summary_sentences, inputs.classifier),
            None => {
                log::warn!("no reference summary for entity {id}");
                (Vec::new(), Vec::new())
            }
        };
        for &polarity in &inputs.polarities {
            let refs = match polarity {
                Polarity::Positive => &pos_refs,
                Polarity::Negative => &neg_refs,
                Polarity::Neutral => continue,
            };
            let generated: Vec<String> = summary.by_polarity(polarity).map(|k| k.text.clone()).collect();
            if generated.is_empty() || refs.is_empty() {
                skipped.push((id.to_string(), polarity));
                continue;
            }
            let rouge = VARIANTS
                .iter()
                .map(|v| Ok((*v, rouge_max_avg(&generated, refs, *v)?)))
                .collect::<Result<_, EvalError>>()?;
            entities.push(EntityScores {
                entity_id: id.to_string(),
                polarity,
                generated: generated.len(),
                references: refs.len(),
                rouge,
                soft: soft_scores(&generated, refs, inputs.scorer)?,
            });
        }
    }

    let mut averages = BTreeMap::new();
    for polarity in [Polarity::Positive, Polarity::Negative] {
        let rows: Vec<&EntityScores> = entities.iter().filter(|e| e.polarity == polarity).collect();
        if !rows.is_empty() {
            averages.insert(polarity.as_str().to_string(), average(&rows));
        }
    }
    if !entities.is_empty() {
        averages.insert("all".to_string(), average(&entities.iter().collect::<Vec<_>>()));
    }

    let bradley_terry = inputs.judgments.map(rank_systems).transpose()?;
    let quantification = inputs
        .annotations
        .map(|a| quantify(a, &inputs.default_category))
        .transpose()?;

    Ok(EvalReport {
        scorer: inputs.scorer.kind(),
        entities,
        averages,
        skipped,
        coverage,
        bradley_terry,
        quantification,
    })
}

pub fn rank_systems(judgments: &JudgmentSet) -> Result<RankingTable, EvalError> {
    let mut scores = BTreeMap::new();
    for (dim, wins) in &judgments.dimensions {
        if wins.len() != judgments.systems.len() {
            return Err(EvalError::Config(format!(
                "{dim:?}: win matrix has {} rows for {} systems",
                wins.len(),
                judgments.systems.len()
            )));
        }
        scores.insert(*dim, fit_bradley_terry(wins, &BtOptions::default())?.scores);
    }
    Ok(RankingTable {
        systems: judgments.systems.clone(),
        scores,
    })
}

pub fn quantify(set: &MatchAnnotationSet, default_category: &str) -> Result<QuantificationReport, EvalError> {
    let filter = annotator_kappa_filter(&set.records, &KappaFilterParams::default());
    let excluded = filter.excluded.keys().cloned().collect();
    let verdicts = aggregate_matches(&set.records, &excluded);
    let precision = quantification_precision(&verdicts.by_category(default_category))?;
    Ok(QuantificationReport {
        t_match: set.t_match,
        precision,
        judged_pairs: verdicts.verdicts.len(),
        unresolved_pairs: verdicts.unresolved.len(),
        annotator_kappa: filter.annotator_kappa,
        excluded_annotators: filter.excluded,
    })
}
