//! Runs ingest, ABSA, clustering and key point generation in-process and
//! prints the text report for every entity.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use pakpa::absa::annotate_corpus;
use pakpa::cli::{emit_report, ReportFormat};
use pakpa::clustering::{build_pools, cluster_pool, load_vectors, ClusteringParams};
use pakpa::ingest::{apply_filters, comments_from_reviews, load_corpus, CorpusFilter, DatasetFormat};
use pakpa::keypoints::{generate_keypoints, GenerationOptions};
use pakpa::llm::{Gateway, LlmConfig, MockBackend, PromptTemplate, ResponseCache};
use pakpa::model::ReviewComment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let reviews = load_corpus(&fixtures.join("reviews.jsonl"), DatasetFormat::Yelp)?;
    let comments = comments_from_reviews(&apply_filters(reviews, &CorpusFilter::default()))?;
    let store = load_vectors(&fixtures.join("vectors.txt"))?;

    let backend = MockBackend::load(&fixtures.join("mock_table.json"))?;
    let gateway = Gateway::new(Arc::new(backend), LlmConfig::default(), ResponseCache::in_memory());
    let absa = PromptTemplate::absa_default();
    let kpg = PromptTemplate::kpg_default();
    let params = ClusteringParams::default();
    let options = GenerationOptions::default();

    let mut by_entity: BTreeMap<_, Vec<ReviewComment>> = BTreeMap::new();
    for c in &comments {
        by_entity.entry(c.entity.clone()).or_default().push(c.clone());
    }
    for (entity, group) in &by_entity {
        let run = annotate_corpus(entity, group, &gateway, &absa)?;
        let mut clusters = Vec::new();
        for pools in build_pools(&run.annotations, group)?.values() {
            clusters.extend(cluster_pool(&pools.positive, &store, &params));
            clusters.extend(cluster_pool(&pools.negative, &store, &params));
        }
        let summary = generate_keypoints(entity, &clusters, group, &gateway, &kpg, &options)?;
        println!("{}", emit_report(&summary, group, ReportFormat::Text));
    }
    println!("{} LLM calls", gateway.backend_calls());
    Ok(())
}
