//! Greedy aspect clustering of the annotated fixture corpus. Pass a
//! threshold to see how it changes the clusters:
//!
//! ```text
//! cargo run --example cluster_aspects -- 0.7
//! ```

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use pakpa::absa::annotate_corpus;
use pakpa::clustering::{build_pools, cluster_pool, load_vectors, ClusteringParams};
use pakpa::ingest::{apply_filters, comments_from_reviews, load_corpus, CorpusFilter, DatasetFormat};
use pakpa::llm::{Gateway, LlmConfig, MockBackend, PromptTemplate, ResponseCache};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lambda: f64 = match std::env::args().nth(1) {
        Some(arg) => arg.parse()?,
        None => 0.55,
    };
    let params = ClusteringParams::new(lambda)?;

    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let reviews = load_corpus(&fixtures.join("reviews.jsonl"), DatasetFormat::Yelp)?;
    let comments = comments_from_reviews(&apply_filters(reviews, &CorpusFilter::default()))?;
    let store = load_vectors(&fixtures.join("vectors.txt"))?;

    let backend = MockBackend::load(&fixtures.join("mock_table.json"))?;
    let gateway = Gateway::new(Arc::new(backend), LlmConfig::default(), ResponseCache::in_memory());
    let template = PromptTemplate::absa_default();

    let mut annotations = Vec::new();
    let entities: BTreeSet<_> = comments.iter().map(|c| c.entity.clone()).collect();
    for entity in &entities {
        let group: Vec<_> = comments.iter().filter(|c| &c.entity == entity).cloned().collect();
        annotations.extend(annotate_corpus(entity, &group, &gateway, &template)?.annotations);
    }

    println!("lambda = {lambda}");
    for (entity, pools) in build_pools(&annotations, &comments)? {
        for pool in [&pools.positive, &pools.negative] {
            if pool.is_empty() {
                continue;
            }
            println!("\n{} / {}", entity.entity_id, pool.polarity.as_str());
            for cluster in cluster_pool(pool, &store, &params) {
                let terms: Vec<String> =
                    cluster.terms.iter().map(|t| format!("{}({})", t.term, t.freq)).collect();
                println!("  #{:<2} prevalence {:>3}  {}", cluster.cluster_id, cluster.prevalence(), terms.join(", "));
            }
        }
    }
    Ok(())
}
