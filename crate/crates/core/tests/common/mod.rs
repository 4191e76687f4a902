#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pakpa::clustering::{build_pools, cluster_pool, load_vectors, ClusteringParams};
use pakpa::ingest::{apply_filters, comments_from_reviews, load_corpus, CorpusFilter, DatasetFormat};
use pakpa::llm::{
    kpg_input, parse_absa_response, render_absa_prompt, render_kpg_prompt, LlmConfig, MockBackend,
    PromptTemplate,
};
use pakpa::model::{AspectAnnotation, ReviewComment};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_comments() -> Vec<ReviewComment> {
    let reviews = load_corpus(&fixture("reviews.jsonl"), DatasetFormat::Yelp).unwrap();
    comments_from_reviews(&apply_filters(reviews, &CorpusFilter::default())).unwrap()
}

fn read_map(name: &str) -> BTreeMap<String, String> {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

/// Rebuilds the digest-keyed mock table from the human-readable reply
/// files: one ABSA reply per comment id and one key point reply per
/// `entity/polarity/top term` cluster key.
pub fn build_mock_table() -> MockBackend {
    let model = LlmConfig::default().model_name;
    let absa_replies = read_map("absa_replies.json");
    let kpg_replies = read_map("kpg_replies.json");
    let comments = fixture_comments();
    let absa_template = PromptTemplate::absa_default();
    let kpg_template = PromptTemplate::kpg_default();

    let mut mock = MockBackend::new();
    let mut annotations = Vec::new();
    for c in &comments {
        let reply = absa_replies
            .get(&c.comment_id)
            .unwrap_or_else(|| panic!("no ABSA reply for {}", c.comment_id));
        mock.insert(&model, &render_absa_prompt(c, &absa_template).unwrap(), reply.clone());
        if let Ok(pairs) = parse_absa_response(reply) {
            annotations.push(AspectAnnotation {
                comment_id: c.comment_id.clone(),
                pairs,
            });
        }
    }
    assert_eq!(absa_replies.len(), comments.len(), "stale ABSA replies");

    let store = load_vectors(&fixture("vectors.txt")).unwrap();
    let params = ClusteringParams::default();
    let by_id: BTreeMap<&str, &ReviewComment> = comments.iter().map(|c| (c.comment_id.as_str(), c)).collect();
    let mut used = 0;
    for (entity, pools) in build_pools(&annotations, &comments).unwrap() {
        for pool in [&pools.positive, &pools.negative] {
            for cluster in cluster_pool(pool, &store, &params) {
                let key = format!("{}/{}/{}", entity.entity_id, cluster.polarity, cluster.terms[0].term);
                let Some(reply) = kpg_replies.get(&key) else { continue };
                let members: Vec<&ReviewComment> =
                    cluster.member_comment_ids.iter().map(|id| by_id[id.as_str()]).collect();
                assert!(!kpg_input(&cluster, &members).is_empty());
                mock.insert(&model, &render_kpg_prompt(&cluster, &members, &kpg_template).unwrap(), reply.clone());
                used += 1;
            }
        }
    }
    assert_eq!(used, kpg_replies.len(), "a key point reply no longer matches any cluster");
    mock
}
