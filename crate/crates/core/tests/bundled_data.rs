use std::path::PathBuf;

use iotrisk::dataset::{load_corpus, synthesize_corpus, write_corpus, SynthesisSpec};
use iotrisk::RiskClass;

fn repo_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn shipped_corpus_matches_regeneration() {
    let records = synthesize_corpus(&SynthesisSpec::bundled()).unwrap();
    let mut fresh = Vec::new();
    write_corpus(&mut fresh, &records).unwrap();
    let shipped = std::fs::read(repo_file("synthetic_corpus.csv")).unwrap();
    assert!(fresh == shipped, "data/synthetic_corpus.csv is stale; rerun `iotrisk build --synthesize`");

    let (_, summary) = load_corpus(&repo_file("synthetic_corpus.csv")).unwrap();
    assert_eq!(summary.counts(), [176, 138, 183, 656]);
}

#[test]
fn fixture_devices_cover_two_products_and_four_classes() {
    let (records, summary) = load_corpus(&repo_file("fixture_devices.csv")).unwrap();
    assert_eq!(summary.counts(), [2, 2, 2, 2]);
    assert!(records.iter().all(|r| r.synthetic));
    for product in ["smart_speaker", "smart_camera"] {
        let classes: Vec<RiskClass> = records.iter().filter(|r| r.product_type == product).map(|r| r.risk_score).collect();
        assert_eq!(classes, RiskClass::ALL);
    }
}
