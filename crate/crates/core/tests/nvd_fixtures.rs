use std::path::PathBuf;

use iotrisk::dataset::Category;
use iotrisk::nvd::{
    candidate_records, filter_iot, parse_cpe_uri, published_since, read_feed, severity_class, CpePart, RiskClass,
    RuleSet,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn repo_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn two_item_feed_keeps_one_and_skips_one() {
    let p = read_feed(&fixture("two_items.json")).unwrap();
    assert_eq!(p.item_count, 2);
    assert_eq!(p.entries.len(), 1);
    assert_eq!(p.skipped, 1);
    assert!(p.errors.is_empty());
    let e = &p.entries[0];
    assert_eq!(e.cve_id, "CVE-2020-10001");
    assert_eq!(e.cvss_v3_base, 9.8);
    assert_eq!(e.published_year(), 2020);
    assert_eq!(e.cpe_uris.len(), 1);
    assert_eq!(severity_class(e.cvss_v3_base).unwrap(), RiskClass::Critical);
}

#[test]
fn three_cpes_in_document_order() {
    let p = read_feed(&fixture("three_cpes.json")).unwrap();
    let uris: Vec<&str> = p.entries[0].cpe_uris.iter().map(|c| c.raw.as_str()).collect();
    assert_eq!(
        uris,
        [
            "cpe:2.3:o:echoline:speaker_firmware:3.2.1:*:*:*:*:*:*:*",
            "cpe:2.3:h:echoline:smart_speaker_s1:-:*:*:*:*:*:*:*",
            "cpe:2.3:a:echoline:companion_app:1.4\\:beta:*:*:*:android:*:*:*",
        ]
    );
    assert_eq!(p.entries[0].cpe_uris[2].version, "1.4\\:beta");
}

#[test]
fn cpe_fixture_round_trips() {
    let text = std::fs::read_to_string(fixture("cpe_uris.txt")).unwrap();
    for uri in text.lines().filter(|l| !l.is_empty()) {
        assert_eq!(parse_cpe_uri(uri).unwrap().to_uri(), uri);
    }
}

#[test]
fn gzipped_feed_reads_like_plain() {
    use std::io::Write;
    let plain = std::fs::read(fixture("three_cpes.json")).unwrap();
    let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
    gz.write_all(&plain).unwrap();
    let packed = gz.finish().unwrap();
    let a = iotrisk::nvd::parse_feed(&plain).unwrap();
    let b = iotrisk::nvd::parse_feed(&packed).unwrap();
    assert_eq!(a.entries, b.entries);
}

#[test]
fn bundled_rules_classify_mixed_feed() {
    let rules = RuleSet::load(&repo_file("iot_rules.txt")).unwrap();
    let p = read_feed(&fixture("mixed_feed.json")).unwrap();
    assert_eq!(p.entries.len(), 4);
    assert_eq!(p.cpe_warnings.len(), 1);
    let recent = published_since(p.entries, 2013);
    assert_eq!(recent.len(), 3);

    let matched = filter_iot(&recent, &rules, None).unwrap();
    let tags: Vec<(&str, Category)> = matched.iter().map(|(e, c)| (e.cve_id.as_str(), *c)).collect();
    assert_eq!(tags, [("CVE-2018-1001", Category::Medical), ("CVE-2021-3003", Category::Wearable)]);

    let all = candidate_records(&matched, None).unwrap();
    assert_eq!(all.len(), 3);
    assert_eq!(all[0].brand, "medipump");
    assert_eq!(all[0].risk_score, RiskClass::Critical);
    assert_eq!(all[2].risk_score, RiskClass::Low);

    let hw = [CpePart::Hardware];
    let only_h = filter_iot(&recent, &rules, Some(&hw)).unwrap();
    assert_eq!(candidate_records(&only_h, Some(&hw)).unwrap().len(), 1);
}
