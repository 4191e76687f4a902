//! Domain types shared by every stage of the pipeline.
//!
//! All types are plain values: once constructed they are never mutated by
//! the pipeline, so they can be shared freely across threads.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("comment text is empty")]
    EmptyText,
    #[error("duplicate comment id {0}")]
    DuplicateId(String),
    #[error("entity id is empty")]
    EmptyEntityId,
    #[error("unknown polarity {0:?}")]
    UnknownPolarity(String),
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// Business category of a reviewed entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Arts,
    Auto,
    Beauty,
    Hotels,
    Restaurants,
    Other,
}

impl Category {
    /// Lenient mapping from the category labels used by review dumps.
    pub fn from_label(label: &str) -> Category {
        let label = label.trim().to_lowercase();
        match label.as_str() {
            "arts" | "arts & entertainment" | "arts and entertainment" => Category::Arts,
            "auto" | "automotive" => Category::Auto,
            "beauty" | "beauty & spas" | "beauty and spas" => Category::Beauty,
            "hotel" | "hotels" | "hotels & travel" => Category::Hotels,
            "rest" | "restaurant" | "restaurants" => Category::Restaurants,
            _ => Category::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Arts => "arts",
            Category::Auto => "auto",
            Category::Beauty => "beauty",
            Category::Hotels => "hotels",
            Category::Restaurants => "restaurants",
            Category::Other => "other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityRef {
    pub entity_id: String,
    pub category: Category,
}

impl EntityRef {
    pub fn new(entity_id: impl Into<String>, category: Category) -> Result<Self, ModelError> {
        let entity_id = entity_id.into();
        if entity_id.trim().is_empty() {
            return Err(ModelError::EmptyEntityId);
        }
        Ok(EntityRef {
            entity_id,
            category,
        })
    }
}

/// Sentiment polarity of an aspect mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Positive,
    Neutral,
    Negative,
}

impl Polarity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Neutral => "neutral",
            Polarity::Negative => "negative",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "positive" | "pos" => Ok(Polarity::Positive),
            "neutral" | "neu" => Ok(Polarity::Neutral),
            "negative" | "neg" => Ok(Polarity::Negative),
            _ => Err(ModelError::UnknownPolarity(s.to_string())),
        }
    }
}

impl Serialize for Polarity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Polarity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Lowercases and collapses internal whitespace of an aspect term.
pub fn normalize_term(term: &str) -> String {
    term.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One review sentence: the atomic unit of analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewComment {
    pub comment_id: String,
    pub entity: EntityRef,
    pub review_id: String,
    pub sentence_index: usize,
    pub text: String,
}

impl ReviewComment {
    pub fn compose_id(entity_id: &str, review_id: &str, sentence_index: usize) -> String {
        format!("{entity_id}/{review_id}/{sentence_index}")
    }
}

/// An unvalidated comment record.
#[derive(Debug, Clone)]
pub struct CommentDraft {
    pub entity: EntityRef,
    pub review_id: String,
    pub sentence_index: usize,
    pub text: String,
}

/// Validates drafts one by one, remembering what it has seen so that a
/// repeated `(entity, review, index)` position is rejected.
#[derive(Debug, Default)]
pub struct CommentValidator {
    seen: HashSet<String>,
}

impl CommentValidator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn validate_comment(&mut self, raw: CommentDraft) -> Result<ReviewComment, ModelError> {
        let text = raw.text.trim();
        if text.is_empty() {
            return Err(ModelError::EmptyText);
        }
        if raw.entity.entity_id.trim().is_empty() {
            return Err(ModelError::EmptyEntityId);
        }
        let comment_id =
            ReviewComment::compose_id(&raw.entity.entity_id, &raw.review_id, raw.sentence_index);
        if !self.seen.insert(comment_id.clone()) {
            return Err(ModelError::DuplicateId(comment_id));
        }
        Ok(ReviewComment {
            comment_id,
            entity: raw.entity,
            review_id: raw.review_id,
            sentence_index: raw.sentence_index,
            text: text.to_string(),
        })
    }
}

/// Validates a single record in isolation.
pub fn validate_comment(raw: CommentDraft) -> Result<ReviewComment, ModelError> {
    CommentValidator::new().validate_comment(raw)
}

/// An (aspect term, polarity) pair. Serialized as `{"aspect", "sentiment"}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AspectPair {
    #[serde(rename = "aspect")]
    pub aspect_term: String,
    #[serde(rename = "sentiment")]
    pub polarity: Polarity,
}

impl AspectPair {
    pub fn new(aspect: &str, polarity: Polarity) -> Result<Self, ModelError> {
        let aspect_term = normalize_term(aspect);
        if aspect_term.is_empty() {
            return Err(ModelError::Invalid("empty aspect term".into()));
        }
        Ok(AspectPair {
            aspect_term,
            polarity,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectAnnotation {
    pub comment_id: String,
    pub pairs: Vec<AspectPair>,
}

/// A term inside a cluster, with the number of comments mentioning it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermFreq {
    pub term: String,
    pub freq: usize,
}

/// A polarity-homogeneous group of semantically similar aspect terms and
/// the comments that mention any of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectCluster {
    pub cluster_id: usize,
    pub polarity: Polarity,
    pub terms: Vec<TermFreq>,
    pub member_comment_ids: BTreeSet<String>,
}

impl AspectCluster {
    pub fn prevalence(&self) -> usize {
        self.member_comment_ids.len()
    }
}

#[derive(Serialize, Deserialize)]
struct ClusterWire {
    cluster_id: usize,
    polarity: Polarity,
    terms: Vec<TermFreq>,
    comment_ids: BTreeSet<String>,
    prevalence: usize,
}

impl Serialize for AspectCluster {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ClusterWire {
            cluster_id: self.cluster_id,
            polarity: self.polarity,
            terms: self.terms.clone(),
            comment_ids: self.member_comment_ids.clone(),
            prevalence: self.prevalence(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AspectCluster {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = ClusterWire::deserialize(deserializer)?;
        if wire.polarity == Polarity::Neutral {
            return Err(D::Error::custom("cluster polarity cannot be neutral"));
        }
        if wire.terms.is_empty() {
            return Err(D::Error::custom("cluster has no terms"));
        }
        if wire.prevalence != wire.comment_ids.len() {
            return Err(D::Error::custom(format!(
                "prevalence {} does not match {} comment ids",
                wire.prevalence,
                wire.comment_ids.len()
            )));
        }
        Ok(AspectCluster {
            cluster_id: wire.cluster_id,
            polarity: wire.polarity,
            terms: wire.terms,
            member_comment_ids: wire.comment_ids,
        })
    }
}

/// A generated key point with its prevalence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPoint {
    pub text: String,
    pub polarity: Polarity,
    pub cluster_id: usize,
    pub matched_comment_ids: BTreeSet<String>,
}

impl KeyPoint {
    pub fn prevalence(&self) -> usize {
        self.matched_comment_ids.len()
    }
}

#[derive(Serialize, Deserialize)]
struct KeyPointWire {
    text: String,
    polarity: Polarity,
    cluster_id: usize,
    prevalence: usize,
    comment_ids: BTreeSet<String>,
}

impl Serialize for KeyPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        KeyPointWire {
            text: self.text.clone(),
            polarity: self.polarity,
            cluster_id: self.cluster_id,
            prevalence: self.prevalence(),
            comment_ids: self.matched_comment_ids.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KeyPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = KeyPointWire::deserialize(deserializer)?;
        if wire.prevalence != wire.comment_ids.len() {
            return Err(D::Error::custom(format!(
                "prevalence {} does not match {} comment ids",
                wire.prevalence,
                wire.comment_ids.len()
            )));
        }
        Ok(KeyPoint {
            text: wire.text,
            polarity: wire.polarity,
            cluster_id: wire.cluster_id,
            matched_comment_ids: wire.comment_ids,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draft(review: &str, idx: usize, text: &str) -> CommentDraft {
        CommentDraft {
            entity: EntityRef::new("e1", Category::Hotels).unwrap(),
            review_id: review.into(),
            sentence_index: idx,
            text: text.into(),
        }
    }

    #[test]
    fn validate_trims_and_assigns_id() {
        let c = validate_comment(draft("r1", 0, "Great view. ")).unwrap();
        assert_eq!(c.comment_id, "e1/r1/0");
        assert_eq!(c.text, "Great view.");
    }

    #[test]
    fn whitespace_text_is_rejected() {
        assert_eq!(
            validate_comment(draft("r1", 0, "   ")),
            Err(ModelError::EmptyText)
        );
    }

    #[test]
    fn duplicate_position_is_rejected_on_second() {
        let mut v = CommentValidator::new();
        v.validate_comment(draft("r1", 0, "a")).unwrap();
        assert_eq!(
            v.validate_comment(draft("r1", 0, "b")),
            Err(ModelError::DuplicateId("e1/r1/0".into()))
        );
    }

    #[test]
    fn empty_entity_rejected() {
        assert_eq!(
            EntityRef::new("  ", Category::Other),
            Err(ModelError::EmptyEntityId)
        );
    }

    #[test]
    fn term_normalization() {
        assert_eq!(normalize_term("  Front   DESK "), "front desk");
        assert_eq!(AspectPair::new("View", Polarity::Positive).unwrap().aspect_term, "view");
        assert!(AspectPair::new("   ", Polarity::Positive).is_err());
    }

    #[test]
    fn polarity_wire_names() {
        assert_eq!(serde_json::to_string(&Polarity::Negative).unwrap(), "\"negative\"");
        assert!(serde_json::from_str::<Polarity>("\"meh\"").is_err());
        let pair: AspectPair =
            serde_json::from_str(r#"{"aspect":"staff","sentiment":"positive"}"#).unwrap();
        assert_eq!(pair.polarity, Polarity::Positive);
    }

    #[test]
    fn cluster_wire_rejects_inconsistent_prevalence() {
        let json = r#"{"cluster_id":0,"polarity":"positive","terms":[{"term":"view","freq":1}],
                       "comment_ids":["a"],"prevalence":2}"#;
        assert!(serde_json::from_str::<AspectCluster>(json).is_err());
        let json = r#"{"cluster_id":0,"polarity":"neutral","terms":[{"term":"view","freq":1}],
                       "comment_ids":["a"],"prevalence":1}"#;
        assert!(serde_json::from_str::<AspectCluster>(json).is_err());
    }

    #[test]
    fn category_labels() {
        assert_eq!(Category::from_label("Beauty & Spas"), Category::Beauty);
        assert_eq!(Category::from_label("Rest"), Category::Restaurants);
        assert_eq!(Category::from_label("bowling"), Category::Other);
    }

    mod roundtrip {
        use super::*;
        use proptest::prelude::*;

        fn polarity() -> impl Strategy<Value = Polarity> {
            prop_oneof![
                Just(Polarity::Positive),
                Just(Polarity::Neutral),
                Just(Polarity::Negative)
            ]
        }

        proptest! {
            #[test]
            fn comment_and_annotation_roundtrip(
                entity in "[a-z0-9]{1,8}",
                review in "[a-z0-9]{1,8}",
                idx in 0usize..50,
                text in "[A-Za-z ,.!]{1,40}",
                pairs in proptest::collection::vec(("[a-z]{1,10}", polarity()), 0..5),
            ) {
                let comment = ReviewComment {
                    comment_id: ReviewComment::compose_id(&entity, &review, idx),
                    entity: EntityRef::new(entity, Category::Hotels).unwrap(),
                    review_id: review,
                    sentence_index: idx,
                    text,
                };
                let back: ReviewComment =
                    serde_json::from_str(&serde_json::to_string(&comment).unwrap()).unwrap();
                prop_assert_eq!(back, comment.clone());

                let ann = AspectAnnotation {
                    comment_id: comment.comment_id.clone(),
                    pairs: pairs.iter().map(|(a, p)| AspectPair::new(a, *p).unwrap()).collect(),
                };
                let back: AspectAnnotation =
                    serde_json::from_str(&serde_json::to_string(&ann).unwrap()).unwrap();
                prop_assert_eq!(back, ann);

                let ids: BTreeSet<String> = std::iter::once(comment.comment_id.clone()).collect();
                let cluster = AspectCluster {
                    cluster_id: idx,
                    polarity: Polarity::Negative,
                    terms: vec![TermFreq { term: "x".into(), freq: 1 }],
                    member_comment_ids: ids.clone(),
                };
                let back: AspectCluster =
                    serde_json::from_str(&serde_json::to_string(&cluster).unwrap()).unwrap();
                prop_assert_eq!(back, cluster);

                let kp = KeyPoint {
                    text: "Clean rooms.".into(),
                    polarity: Polarity::Positive,
                    cluster_id: idx,
                    matched_comment_ids: ids,
                };
                let back: KeyPoint =
                    serde_json::from_str(&serde_json::to_string(&kp).unwrap()).unwrap();
                prop_assert_eq!(back, kp);
            }
        }
    }
}
