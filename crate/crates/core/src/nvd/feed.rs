//! Reader for NVD JSON 1.1 vulnerability feeds.

use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use flate2::read::GzDecoder;
use serde::Deserialize;

use super::cpe::{parse_cpe_uri, CpeIdentity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CveEntry {
    pub cve_id: String,
    pub description: String,
    pub published: NaiveDate,
    pub cvss_v3_base: f64,
    pub cpe_uris: Vec<CpeIdentity>,
}

impl CveEntry {
    pub fn published_year(&self) -> i32 {
        self.published.year()
    }
}

/// Problem with a single feed item. The item is not part of the output.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemError {
    pub index: usize,
    pub cve_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct FeedParse {
    pub entries: Vec<CveEntry>,
    /// Items without a CVSS v3 base metric.
    pub skipped: usize,
    pub errors: Vec<ItemError>,
    /// CPE URIs that could not be parsed; the owning entry is kept.
    pub cpe_warnings: Vec<ItemError>,
    pub item_count: usize,
}

#[derive(Deserialize)]
struct Document {
    #[serde(rename = "CVE_Items")]
    items: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
struct Item {
    cve: Option<CveBlock>,
    #[serde(default)]
    configurations: Option<Configurations>,
    #[serde(default)]
    impact: Option<Impact>,
    #[serde(rename = "publishedDate")]
    published_date: Option<String>,
}

#[derive(Deserialize)]
struct CveBlock {
    #[serde(rename = "CVE_data_meta")]
    meta: Option<Meta>,
    description: Option<Description>,
}

#[derive(Deserialize)]
struct Meta {
    #[serde(rename = "ID")]
    id: Option<String>,
}

#[derive(Deserialize)]
struct Description {
    #[serde(default)]
    description_data: Vec<LangString>,
}

#[derive(Deserialize)]
struct LangString {
    #[serde(default)]
    lang: String,
    value: String,
}

#[derive(Deserialize)]
struct Configurations {
    #[serde(default)]
    nodes: Vec<Node>,
}

#[derive(Deserialize)]
struct Node {
    #[serde(default)]
    children: Vec<Node>,
    #[serde(default)]
    cpe_match: Vec<CpeMatch>,
}

#[derive(Deserialize)]
struct CpeMatch {
    #[serde(rename = "cpe23Uri")]
    cpe23_uri: Option<String>,
}

#[derive(Deserialize)]
struct Impact {
    #[serde(rename = "baseMetricV3")]
    base_metric_v3: Option<BaseMetricV3>,
}

#[derive(Deserialize)]
struct BaseMetricV3 {
    #[serde(rename = "cvssV3")]
    cvss_v3: Option<CvssV3>,
}

#[derive(Deserialize)]
struct CvssV3 {
    #[serde(rename = "baseScore")]
    base_score: Option<f64>,
}

pub fn is_cve_id(id: &str) -> bool {
    let Some(rest) = id.strip_prefix("CVE-") else {
        return false;
    };
    let mut parts = rest.splitn(2, '-');
    let (Some(year), Some(num)) = (parts.next(), parts.next()) else {
        return false;
    };
    year.len() == 4
        && year.bytes().all(|b| b.is_ascii_digit())
        && num.len() >= 4
        && num.bytes().all(|b| b.is_ascii_digit())
}

fn byte_offset(doc: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in doc.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(doc.len());
        }
        offset += l.len() + 1;
    }
    doc.len()
}

fn collect_cpes(nodes: &[Node], out: &mut Vec<String>) {
    for n in nodes {
        out.extend(n.cpe_match.iter().filter_map(|m| m.cpe23_uri.clone()));
        collect_cpes(&n.children, out);
    }
}

/// Parses an NVD JSON 1.1 feed. Gzip-compressed input is detected by magic bytes.
pub fn parse_feed(document: &[u8]) -> Result<FeedParse> {
    let inflated;
    let bytes = if document.starts_with(&[0x1f, 0x8b]) {
        let mut buf = Vec::new();
        GzDecoder::new(document)
            .read_to_end(&mut buf)
            .map_err(|e| Error::format(format!("gzip: {e}")))?;
        inflated = buf;
        &inflated[..]
    } else {
        document
    };

    let doc: Document = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;

    let mut out = FeedParse {
        item_count: doc.items.len(),
        ..Default::default()
    };
    for (index, value) in doc.items.into_iter().enumerate() {
        let item: Item = match serde_json::from_value(value) {
            Ok(item) => item,
            Err(e) => {
                out.errors.push(ItemError {
                    index,
                    cve_id: None,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let id = item
            .cve
            .as_ref()
            .and_then(|c| c.meta.as_ref())
            .and_then(|m| m.id.clone());
        let Some(cve_id) = id else {
            out.errors.push(ItemError {
                index,
                cve_id: None,
                message: "missing CVE_data_meta.ID".into(),
            });
            continue;
        };
        let item_err = |message: String| ItemError {
            index,
            cve_id: Some(cve_id.clone()),
            message,
        };
        if !is_cve_id(&cve_id) {
            out.errors.push(item_err(format!("malformed CVE id {cve_id:?}")));
            continue;
        }
        let score = item
            .impact
            .as_ref()
            .and_then(|i| i.base_metric_v3.as_ref())
            .and_then(|m| m.cvss_v3.as_ref())
            .and_then(|c| c.base_score);
        let Some(score) = score else {
            out.skipped += 1;
            continue;
        };
        if !(0.0..=10.0).contains(&score) {
            out.errors.push(item_err(format!("CVSS v3 base score {score} out of range")));
            continue;
        }
        let published = match item
            .published_date
            .as_deref()
            .and_then(|d| d.get(..10))
            .map(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d"))
        {
            Some(Ok(d)) => d,
            _ => {
                out.errors.push(item_err("missing or malformed publishedDate".into()));
                continue;
            }
        };
        let description = item
            .cve
            .as_ref()
            .and_then(|c| c.description.as_ref())
            .and_then(|d| {
                d.description_data
                    .iter()
                    .find(|s| s.lang == "en")
                    .or_else(|| d.description_data.first())
            })
            .map(|s| s.value.clone())
            .unwrap_or_default();

        let mut uris = Vec::new();
        if let Some(cfg) = &item.configurations {
            collect_cpes(&cfg.nodes, &mut uris);
        }
        let mut cpe_uris = Vec::with_capacity(uris.len());
        for uri in uris {
            match parse_cpe_uri(&uri) {
                Ok(c) => cpe_uris.push(c),
                Err(e) => out.cpe_warnings.push(item_err(format!("{uri}: {e}"))),
            }
        }
        out.entries.push(CveEntry {
            cve_id,
            description,
            published,
            cvss_v3_base: score,
            cpe_uris,
        });
    }
    Ok(out)
}

pub fn read_feed(path: &Path) -> Result<FeedParse> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_feed(&bytes)
}

/// Keeps entries published in `year` or later.
pub fn published_since(entries: Vec<CveEntry>, year: i32) -> Vec<CveEntry> {
    entries
        .into_iter()
        .filter(|e| e.published_year() >= year)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cve_pattern() {
        assert!(is_cve_id("CVE-2019-0001"));
        assert!(is_cve_id("CVE-2021-123456"));
        assert!(!is_cve_id("CVE-19-0001"));
        assert!(!is_cve_id("CVE-2019-001"));
        assert!(!is_cve_id("cve-2019-0001"));
    }

    #[test]
    fn empty_item_array() {
        let p = parse_feed(br#"{"CVE_Items": []}"#).unwrap();
        assert!(p.entries.is_empty());
        assert_eq!(p.skipped, 0);
        assert_eq!(p.item_count, 0);
    }

    #[test]
    fn malformed_document_reports_offset() {
        let doc = b"{\n  \"CVE_Items\": [ {,} ]\n}";
        match parse_feed(doc) {
            Err(Error::Parse { offset, .. }) => {
                assert_eq!(doc[offset - 1], b'{');
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_item_array_is_structural() {
        assert!(matches!(
            parse_feed(br#"{"items": []}"#),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn missing_id_is_collected_and_parsing_continues() {
        let doc = br#"{"CVE_Items": [
            {"cve": {"CVE_data_meta": {}}, "impact": {}, "publishedDate": "2019-01-01T00:00Z"},
            {"cve": {"CVE_data_meta": {"ID": "CVE-2019-1111"}},
             "impact": {"baseMetricV3": {"cvssV3": {"baseScore": 5.0}}},
             "publishedDate": "2019-01-01T00:00Z"}
        ]}"#;
        let p = parse_feed(doc).unwrap();
        assert_eq!(p.errors.len(), 1);
        assert_eq!(p.errors[0].index, 0);
        assert_eq!(p.entries.len(), 1);
        assert_eq!(p.entries[0].cve_id, "CVE-2019-1111");
    }
}
