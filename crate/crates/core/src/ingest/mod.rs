//! Corpus loading, sentence splitting and dataset filtering.

mod sentences;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{Category, CommentValidator, CommentDraft, EntityRef, ModelError, ReviewComment};

pub use sentences::split_text;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {0}: malformed JSON record")]
    ParseError(usize),
    #[error("line {line}: missing field {name:?}")]
    MissingField { line: usize, name: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: ModelError },
    #[error("unknown dataset format {0:?}")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Yelp,
    Space,
}

impl FromStr for DatasetFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "yelp" => Ok(DatasetFormat::Yelp),
            "space" => Ok(DatasetFormat::Space),
            _ => Err(IngestError::UnknownFormat(s.to_string())),
        }
    }
}

impl DatasetFormat {
    fn entity_keys(&self) -> &'static [&'static str] {
        match self {
            DatasetFormat::Yelp => &["entity_id", "business_id"],
            DatasetFormat::Space => &["entity_id", "entity"],
        }
    }

    fn default_category(&self) -> Category {
        match self {
            DatasetFormat::Yelp => Category::Other,
            DatasetFormat::Space => Category::Hotels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReview {
    pub entity: EntityRef,
    pub review_id: String,
    pub text: String,
    pub metadata: BTreeMap<String, String>,
}

/// Reference summary sentences for one entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub entity_id: String,
    pub summary_sentences: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFilter {
    pub max_sentences_per_review: usize,
    pub min_reviews_per_entity: usize,
    pub max_reviews_per_entity: usize,
    pub top_entities_per_category: usize,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        CorpusFilter {
            max_sentences_per_review: 15,
            min_reviews_per_entity: 50,
            max_reviews_per_entity: 100,
            top_entities_per_category: 10,
        }
    }
}

impl CorpusFilter {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_sentences_per_review == 0
            || self.min_reviews_per_entity == 0
            || self.max_reviews_per_entity == 0
            || self.top_entities_per_category == 0
        {
            return Err("corpus filter values must be positive".into());
        }
        if self.min_reviews_per_entity > self.max_reviews_per_entity {
            return Err("min_reviews_per_entity exceeds max_reviews_per_entity".into());
        }
        Ok(())
    }
}

fn string_field(obj: &serde_json::Map<String, Value>, keys: &[&str]) -> Option<String> {
    keys.iter().find_map(|k| match obj.get(*k) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Number(n)) => Some(n.to_string()),
        _ => None,
    })
}

fn parse_review(line: &str, line_no: usize, format: DatasetFormat) -> Result<RawReview, IngestError> {
    let value: Value = serde_json::from_str(line).map_err(|_| IngestError::ParseError(line_no))?;
    let Value::Object(obj) = value else {
        return Err(IngestError::ParseError(line_no));
    };
    let missing = |name: &str| IngestError::MissingField {
        line: line_no,
        name: name.to_string(),
    };
    let entity_keys = format.entity_keys();
    let entity_id = string_field(&obj, entity_keys).ok_or_else(|| missing("entity_id"))?;
    let review_id = string_field(&obj, &["review_id"]).ok_or_else(|| missing("review_id"))?;
    let text = string_field(&obj, &["text"]).ok_or_else(|| missing("text"))?;
    if text.trim().is_empty() {
        return Err(IngestError::Invalid {
            line: line_no,
            source: ModelError::EmptyText,
        });
    }
    let category = string_field(&obj, &["category"])
        .map(|c| Category::from_label(&c))
        .unwrap_or_else(|| format.default_category());
    let entity = EntityRef::new(entity_id, category).map_err(|source| IngestError::Invalid {
        line: line_no,
        source,
    })?;

    let known: &[&str] = &["review_id", "text", "category"];
    let metadata = obj
        .iter()
        .filter(|(k, _)| !known.contains(&k.as_str()) && !entity_keys.contains(&k.as_str()))
        .map(|(k, v)| {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            (k.clone(), v)
        })
        .collect();

    Ok(RawReview {
        entity,
        review_id,
        text,
        metadata,
    })
}

/// Loads a line-delimited JSON review corpus, preserving file order.
pub fn load_corpus(path: &Path, format: DatasetFormat) -> Result<Vec<RawReview>, IngestError> {
    let reader = BufReader::new(File::open(path)?);
    let mut reviews = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        reviews.push(parse_review(&line, idx + 1, format)?);
    }
    Ok(reviews)
}

/// Loads reference summaries: one `{"entity_id", "summary_sentences"}` per line.
pub fn load_references(path: &Path) -> Result<Vec<ReferenceSummary>, crate::io::JsonlError> {
    crate::io::read_jsonl(path)
}

/// Splits a review into sentence comments with indices `0..n`.
pub fn split_sentences(review: &RawReview) -> Vec<ReviewComment> {
    split_text(&review.text)
        .into_iter()
        .enumerate()
        .map(|(idx, text)| ReviewComment {
            comment_id: ReviewComment::compose_id(&review.entity.entity_id, &review.review_id, idx),
            entity: review.entity.clone(),
            review_id: review.review_id.clone(),
            sentence_index: idx,
            text,
        })
        .collect()
}

/// Splits every review and validates the resulting comments, rejecting
/// duplicate positions across the corpus.
pub fn comments_from_reviews(reviews: &[RawReview]) -> Result<Vec<ReviewComment>, ModelError> {
    let mut validator = CommentValidator::new();
    let mut out = Vec::new();
    for review in reviews {
        for comment in split_sentences(review) {
            out.push(validator.validate_comment(CommentDraft {
                entity: comment.entity,
                review_id: comment.review_id,
                sentence_index: comment.sentence_index,
                text: comment.text,
            })?);
        }
    }
    Ok(out)
}

/// Applies the review-length, entity-size and per-category top-K filters,
/// in that order. Input order is preserved among surviving reviews.
pub fn apply_filters(reviews: Vec<RawReview>, filter: &CorpusFilter) -> Vec<RawReview> {
    let reviews: Vec<RawReview> = reviews
        .into_iter()
        .filter(|r| split_text(&r.text).len() <= filter.max_sentences_per_review)
        .collect();

    let mut counts: HashMap<&EntityRef, usize> = HashMap::new();
    for r in &reviews {
        *counts.entry(&r.entity).or_default() += 1;
    }

    let mut by_category: BTreeMap<Category, Vec<(&EntityRef, usize)>> = BTreeMap::new();
    for (entity, count) in counts {
        if (filter.min_reviews_per_entity..=filter.max_reviews_per_entity).contains(&count) {
            by_category
                .entry(entity.category)
                .or_default()
                .push((entity, count));
        }
    }
    let mut keep: Vec<EntityRef> = Vec::new();
    for entities in by_category.values_mut() {
        entities.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.entity_id.cmp(&b.0.entity_id)));
        keep.extend(
            entities
                .iter()
                .take(filter.top_entities_per_category)
                .map(|(e, _)| (*e).clone()),
        );
    }

    reviews
        .into_iter()
        .filter(|r| keep.contains(&r.entity))
        .collect()
}
