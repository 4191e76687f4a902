//! Quantification precision from crowd match judgments: annotators whose
//! mean Cohen's kappa with their peers is negative are dropped, then each
//! (comment, key point) pair is decided by the 60% rule.

use std::path::PathBuf;

use pakpa::eval::{cohens_kappa, quantify, Judgment, MatchAnnotationSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/annotations.csv"));
    let set = MatchAnnotationSet::load(&path, Some(0.99))?;

    let labels = |who: &str| -> Vec<Judgment> {
        set.records.iter().filter(|r| r.annotator_id == who).map(|r| r.judgment).collect()
    };
    println!("kappa(a1, a2) = {:.3}", cohens_kappa(&labels("a1"), &labels("a2"))?);
    println!("kappa(a1, a7) = {:.3}\n", cohens_kappa(&labels("a1"), &labels("a7"))?);

    let report = quantify(&set, "all")?;
    for (annotator, kappa) in &report.annotator_kappa {
        let status = if report.excluded_annotators.contains_key(annotator) { "excluded" } else { "kept" };
        println!("{annotator:<6} mean kappa {kappa:>7.3}  {status}");
    }
    println!("\n{} pairs judged, {} without any vote", report.judged_pairs, report.unresolved_pairs);
    for (category, p) in &report.precision.per_category {
        println!("precision {category:<12} {p:.3}");
    }
    println!("precision average      {:.3}", report.precision.average);
    Ok(())
}
