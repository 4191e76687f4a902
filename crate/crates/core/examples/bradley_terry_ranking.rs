//! Fits Bradley-Terry scores to pairwise human preferences, one fit per
//! quality dimension. Scores within a dimension sum to 100.
//!
//! ```text
//! cargo run --example bradley_terry_ranking [judgments.json]
//! ```

use std::path::PathBuf;

use pakpa::eval::{bradley_terry, rank_systems, BtOptions, JudgmentSet, PairwiseJudgments, QualityDimension};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/judgments.json"));
    let judgments: JudgmentSet = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let table = rank_systems(&judgments)?;

    print!("{:<18}", "dimension");
    for s in &table.systems {
        print!(" {s:>12}");
    }
    println!();
    for (dim, scores) in &table.scores {
        print!("{:<18}", format!("{dim:?}"));
        for v in scores {
            print!(" {v:>12.2}");
        }
        println!();
    }

    // a single dimension, with convergence details
    let wins = judgments.dimensions[&QualityDimension::Coverage].clone();
    let fit = bradley_terry(
        &PairwiseJudgments {
            dimension: QualityDimension::Coverage,
            wins,
        },
        &BtOptions::default(),
    )?;
    println!(
        "\ncoverage fit: {} iterations, converged = {}",
        fit.iterations, fit.converged
    );
    Ok(())
}
