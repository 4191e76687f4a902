//! Greedy clustering of aspect terms by semantic similarity, per entity and
//! sentiment polarity.
//!
//! Terms of one polarity are visited from most to least frequent. Each term
//! joins the existing cluster whose terms it is most similar to on average
//! (mean cosine of word vectors), provided that mean clears the threshold;
//! otherwise it opens a new cluster. A cluster's members are all comments
//! mentioning any of its terms, and their count is the cluster's prevalence.

mod vectors;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{AspectAnnotation, AspectCluster, EntityRef, Polarity, ReviewComment, TermFreq};

pub use vectors::{cosine, load_vectors, term_vector, VectorError, VectorStore};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("annotation refers to unknown comment {0}")]
    UnknownComment(String),
    #[error("lambda must lie in (0, 1), got {0}")]
    InvalidLambda(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringParams {
    pub lambda_threshold: f64,
    /// Admit a term whose mean similarity equals the threshold exactly.
    /// Off by default: admission requires a mean strictly above it.
    #[serde(default)]
    pub inclusive_threshold: bool,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        ClusteringParams {
            lambda_threshold: 0.55,
            inclusive_threshold: false,
        }
    }
}

impl ClusteringParams {
    pub fn new(lambda_threshold: f64) -> Result<Self, ClusterError> {
        let params = ClusteringParams {
            lambda_threshold,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.lambda_threshold > 0.0 && self.lambda_threshold < 1.0 {
            Ok(())
        } else {
            Err(ClusterError::InvalidLambda(self.lambda_threshold.to_string()))
        }
    }

    fn admits(&self, mean: f64) -> bool {
        if self.inclusive_threshold {
            mean >= self.lambda_threshold
        } else {
            mean > self.lambda_threshold
        }
    }
}

/// Aspect terms of one polarity for one entity, with the comments that
/// mention each term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectPool {
    pub entity: EntityRef,
    pub polarity: Polarity,
    pub term_freq: BTreeMap<String, usize>,
    pub term_comments: BTreeMap<String, BTreeSet<String>>,
}

impl AspectPool {
    pub fn new(entity: EntityRef, polarity: Polarity) -> Self {
        AspectPool {
            entity,
            polarity,
            term_freq: BTreeMap::new(),
            term_comments: BTreeMap::new(),
        }
    }

    /// Records that `comment_id` mentions `term`; repeated mentions by the
    /// same comment count once.
    pub fn add(&mut self, term: &str, comment_id: &str) {
        let comments = self.term_comments.entry(term.to_string()).or_default();
        if comments.insert(comment_id.to_string()) {
            *self.term_freq.entry(term.to_string()).or_default() += 1;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.term_freq.is_empty()
    }

    /// Distinct terms by frequency descending, then lexicographically.
    pub fn ranked_terms(&self) -> Vec<(&str, usize)> {
        let mut terms: Vec<(&str, usize)> =
            self.term_freq.iter().map(|(t, f)| (t.as_str(), *f)).collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms
    }
}

/// The positive and negative pools of one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityPools {
    pub positive: AspectPool,
    pub negative: AspectPool,
}

/// Groups annotations by entity and polarity, dropping neutral pairs.
pub fn build_pools(
    annotations: &[AspectAnnotation],
    comments: &[ReviewComment],
) -> Result<BTreeMap<EntityRef, EntityPools>, ClusterError> {
    let by_id: HashMap<&str, &ReviewComment> =
        comments.iter().map(|c| (c.comment_id.as_str(), c)).collect();
    let mut pools: BTreeMap<EntityRef, EntityPools> = BTreeMap::new();
    for annotation in annotations {
        let comment = by_id
            .get(annotation.comment_id.as_str())
            .ok_or_else(|| ClusterError::UnknownComment(annotation.comment_id.clone()))?;
        let entry = pools
            .entry(comment.entity.clone())
            .or_insert_with(|| EntityPools {
                positive: AspectPool::new(comment.entity.clone(), Polarity::Positive),
                negative: AspectPool::new(comment.entity.clone(), Polarity::Negative),
            });
        for pair in &annotation.pairs {
            let pool = match pair.polarity {
                Polarity::Positive => &mut entry.positive,
                Polarity::Negative => &mut entry.negative,
                Polarity::Neutral => continue,
            };
            pool.add(&pair.aspect_term, &comment.comment_id);
        }
    }
    Ok(pools)
}

/// Greedily clusters one pool. Clusters are returned by prevalence
/// descending, then by creation order (`cluster_id`).
pub fn cluster_pool(
    pool: &AspectPool,
    store: &VectorStore,
    params: &ClusteringParams,
) -> Vec<AspectCluster> {
    let ranked = pool.ranked_terms();
    let term_vectors: Vec<Vec<f64>> = ranked.iter().map(|(t, _)| term_vector(t, store)).collect();

    // each cluster is a list of indices into `ranked`
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for idx in 0..ranked.len() {
        let mut best: Option<(usize, f64)> = None;
        for (cid, members) in clusters.iter().enumerate() {
            let total: f64 = members
                .iter()
                .map(|&m| cosine(&term_vectors[idx], &term_vectors[m]).unwrap_or(0.0))
                .sum();
            let mean = total / members.len() as f64;
            if best.is_none_or(|(_, b)| mean > b) {
                best = Some((cid, mean));
            }
        }
        match best {
            Some((cid, mean)) if params.admits(mean) => clusters[cid].push(idx),
            _ => clusters.push(vec![idx]),
        }
    }

    let mut out: Vec<AspectCluster> = clusters
        .into_iter()
        .enumerate()
        .map(|(cluster_id, members)| {
            let mut member_comment_ids = BTreeSet::new();
            let terms = members
                .iter()
                .map(|&m| {
                    let (term, freq) = ranked[m];
                    if let Some(ids) = pool.term_comments.get(term) {
                        member_comment_ids.extend(ids.iter().cloned());
                    }
                    TermFreq {
                        term: term.to_string(),
                        freq,
                    }
                })
                .collect();
            AspectCluster {
                cluster_id,
                polarity: pool.polarity,
                terms,
                member_comment_ids,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.prevalence()
            .cmp(&a.prevalence())
            .then(a.cluster_id.cmp(&b.cluster_id))
    });
    out
}

/// Inverse index from comment id to the clusters containing it.
pub fn clusters_to_memberships(clusters: &[AspectCluster]) -> BTreeMap<String, BTreeSet<usize>> {
    let mut index: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for cluster in clusters {
        for id in &cluster.member_comment_ids {
            index.entry(id.clone()).or_default().insert(cluster.cluster_id);
        }
    }
    index
}

/// One line of the clusters artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub entity_id: String,
    pub polarity: Polarity,
    pub clusters: Vec<AspectCluster>,
}
