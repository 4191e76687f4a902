//! Scores the frozen fixture summaries against the reference summaries with
//! ROUGE and soft precision/recall/F1, once per bundled scorer.

use std::path::Path;

use pakpa::clustering::load_vectors;
use pakpa::eval::{
    evaluate, EmbeddingCosine, EvalInputs, LexicalF1, LexiconClassifier, RougeVariant, SimilarityScorer,
};
use pakpa::ingest::{apply_filters, comments_from_reviews, load_corpus, load_references, CorpusFilter, DatasetFormat};
use pakpa::io::read_jsonl;
use pakpa::keypoints::EntitySummary;
use pakpa::model::Polarity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let summaries: Vec<EntitySummary> = read_jsonl(&fixtures.join("snapshot/summaries.jsonl"))?;
    let references = load_references(&fixtures.join("references.jsonl"))?;
    let reviews = load_corpus(&fixtures.join("reviews.jsonl"), DatasetFormat::Yelp)?;
    let comments = comments_from_reviews(&apply_filters(reviews, &CorpusFilter::default()))?;

    let classifier = LexiconClassifier::default();
    let scorers: Vec<Box<dyn SimilarityScorer>> = vec![
        Box::new(LexicalF1),
        Box::new(EmbeddingCosine::new(load_vectors(&fixtures.join("vectors.txt"))?)),
    ];

    for scorer in &scorers {
        let report = evaluate(&EvalInputs {
            summaries: &summaries,
            references: &references,
            comments: &comments,
            scorer: scorer.as_ref(),
            classifier: &classifier,
            polarities: vec![Polarity::Positive, Polarity::Negative],
            judgments: None,
            annotations: None,
            default_category: "all".into(),
        })?;

        println!("scorer: {:?}", report.scorer);
        println!("  {:<24} {:<9} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}", "entity", "polarity", "R-1", "R-2", "R-L", "sP", "sR", "sF1");
        for row in &report.entities {
            println!(
                "  {:<24} {:<9} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
                row.entity_id,
                row.polarity.as_str(),
                row.rouge[&RougeVariant::One],
                row.rouge[&RougeVariant::Two],
                row.rouge[&RougeVariant::L],
                row.soft.soft_precision,
                row.soft.soft_recall,
                row.soft.soft_f1,
            );
        }
        for (entity, polarity) in &report.skipped {
            println!("  {entity:<24} {:<9} skipped (no generated or reference sentences)", polarity.as_str());
        }
        if let Some(all) = report.averages.get("all") {
            println!(
                "  average over {} rows: sP {:.3} sR {:.3} sF1 {:.3}",
                all.rows, all.soft.soft_precision, all.soft.soft_recall, all.soft.soft_f1
            );
        }
        for (entity, share) in &report.coverage {
            println!("  coverage {entity}: {:.1}% of reviews", share * 100.0);
        }
        println!();
    }
    Ok(())
}
