//! Every stage through the same entry point as the `pakpa` binary, writing
//! artifacts to a directory (default: a fresh temp dir).
//!
//! ```text
//! cargo run --example full_pipeline -- out/
//! ```

use std::path::{Path, PathBuf};

use pakpa::cli::{run_stage, PipelineConfig, Stage};
use pakpa::llm::LlmConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = match std::env::args().nth(1) {
        Some(dir) => PathBuf::from(dir),
        None => std::env::temp_dir().join(format!("pakpa-example-{}", std::process::id())),
    };
    let cfg = PipelineConfig {
        corpus_path: Some(fixtures.join("reviews.jsonl")),
        vectors_path: Some(fixtures.join("vectors.txt")),
        references_path: Some(fixtures.join("references.jsonl")),
        judgments_path: Some(fixtures.join("judgments.json")),
        annotations_path: Some(fixtures.join("annotations.csv")),
        mock_table: Some(fixtures.join("mock_table.json")),
        output_dir: out.clone(),
        llm: LlmConfig {
            max_retries: 0,
            ..LlmConfig::default()
        },
        ..PipelineConfig::default()
    };

    let written = run_stage(Stage::Pipeline, &cfg)?.written;
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!("\n{}", std::fs::read_to_string(out.join("report.txt"))?);
    Ok(())
}
