//! Loads the bundled review corpus, applies the default filters and splits
//! every kept review into sentence-level comments.
//!
//! ```text
//! cargo run --example ingest_corpus [reviews.jsonl]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use pakpa::ingest::{apply_filters, comments_from_reviews, load_corpus, CorpusFilter, DatasetFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reviews.jsonl"));

    let reviews = load_corpus(&path, DatasetFormat::Yelp)?;
    let filter = CorpusFilter::default();
    let kept = apply_filters(reviews.clone(), &filter);
    let comments = comments_from_reviews(&kept)?;

    println!("{} reviews loaded, {} kept after filtering", reviews.len(), kept.len());
    println!("filter: {filter:?}");

    let mut per_entity: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &reviews {
        per_entity.entry(&r.entity.entity_id).or_default().0 += 1;
    }
    for c in &comments {
        per_entity.entry(&c.entity.entity_id).or_default().1 += 1;
    }
    println!("\n{:<20} {:>8} {:>9}", "entity", "reviews", "comments");
    for (entity, (n_reviews, n_comments)) in per_entity {
        println!("{entity:<20} {n_reviews:>8} {n_comments:>9}");
    }

    println!("\nfirst comments:");
    for c in comments.iter().take(5) {
        println!("  {:<28} {}", c.comment_id, c.text);
    }
    Ok(())
}
