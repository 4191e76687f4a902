mod common;

use common::{build_mock_table, fixture, fixture_comments};

#[test]
fn mock_table_matches_reply_files() {
    let expected = build_mock_table().to_json();
    let path = fixture("mock_table.json");
    if std::env::var_os("PAKPA_UPDATE_FIXTURES").is_some() {
        std::fs::write(&path, &expected).unwrap();
    }
    let actual = std::fs::read_to_string(&path).unwrap_or_default();
    assert!(
        actual == expected,
        "fixtures/mock_table.json is out of date; rerun with PAKPA_UPDATE_FIXTURES=1"
    );
}

#[test]
fn comment_count_matches_manifest() {
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("manifest.json")).unwrap()).unwrap();
    assert_eq!(fixture_comments().len() as u64, manifest["comments_filtered"].as_u64().unwrap());
    let reviews = pakpa::ingest::load_corpus(&fixture("reviews.jsonl"), pakpa::ingest::DatasetFormat::Yelp).unwrap();
    assert_eq!(reviews.len() as u64, manifest["reviews"].as_u64().unwrap());
    let all = pakpa::ingest::comments_from_reviews(&reviews).unwrap();
    assert_eq!(all.len() as u64, manifest["comments_unfiltered"].as_u64().unwrap());
}
