//! Prompted aspect-based sentiment analysis over one entity's comments,
//! replayed from the bundled mock table so no endpoint is needed.
//!
//! Point `LLM_API_KEY` and `--endpoint` of the `pakpa` binary at a real
//! chat-completion service to annotate live.

use std::path::Path;
use std::sync::Arc;

use pakpa::absa::annotate_corpus;
use pakpa::ingest::{apply_filters, comments_from_reviews, load_corpus, CorpusFilter, DatasetFormat};
use pakpa::llm::{Gateway, LlmConfig, MockBackend, PromptTemplate, ResponseCache};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let reviews = load_corpus(&fixtures.join("reviews.jsonl"), DatasetFormat::Yelp)?;
    let comments = comments_from_reviews(&apply_filters(reviews, &CorpusFilter::default()))?;
    let entity = comments[0].entity.clone();
    let group: Vec<_> = comments.into_iter().filter(|c| c.entity == entity).collect();

    let backend = MockBackend::load(&fixtures.join("mock_table.json"))?;
    let gateway = Gateway::new(Arc::new(backend), LlmConfig::default(), ResponseCache::in_memory());
    let template = PromptTemplate::absa_default();

    let run = annotate_corpus(&entity, &group, &gateway, &template)?;
    println!(
        "{}: {} comments, {} annotated, {} failed",
        entity.entity_id,
        group.len(),
        run.annotations.len(),
        run.failures.len()
    );
    for a in run.annotations.iter().take(8) {
        let text = &group.iter().find(|c| c.comment_id == a.comment_id).unwrap().text;
        let pairs: Vec<String> = a
            .pairs
            .iter()
            .map(|p| format!("({}, {})", p.aspect_term, p.polarity.as_str()))
            .collect();
        println!("  {text}\n    -> {}", pairs.join(" "));
    }
    for f in &run.failures {
        println!("  failed {}: {}", f.comment_id, f.error);
    }
    Ok(())
}
