//! Keyword rules that decide which CVE entries concern IoT devices and which
//! device category they fall into.

use std::path::Path;

use serde::Serialize;

use super::cpe::CpePart;
use super::feed::CveEntry;
use super::severity::{severity_class, RiskClass};
use crate::dataset::Category;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleField {
    Vendor,
    Product,
    Description,
    /// Vendor, product or description.
    Any,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub category: Category,
    pub field: RuleField,
    /// Lower-cased substring.
    pub pattern: String,
}

impl Rule {
    pub fn new(category: Category, field: RuleField, pattern: &str) -> Self {
        Self {
            category,
            field,
            pattern: pattern.to_lowercase(),
        }
    }
}

/// Ordered rule list; earlier rules take priority.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub version: u32,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Self {
        Self { version: 1, rules }
    }

    /// Parses the line format:
    ///
    /// ```text
    /// version 1
    /// # category  field    pattern
    /// Medical     product  insulin
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut rules = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks[0] == "version" {
                let v = toks
                    .get(1)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::config(format!("rules line {}: bad version", n + 1)))?;
                version = Some(v);
                continue;
            }
            if toks.len() < 3 {
                return Err(Error::config(format!(
                    "rules line {}: expected `<category> <field> <pattern>`",
                    n + 1
                )));
            }
            let category: Category = toks[0]
                .parse()
                .map_err(|e| Error::config(format!("rules line {}: {e}", n + 1)))?;
            let field = match toks[1] {
                "vendor" => RuleField::Vendor,
                "product" => RuleField::Product,
                "description" => RuleField::Description,
                "any" => RuleField::Any,
                f => {
                    return Err(Error::config(format!(
                        "rules line {}: unknown field {f:?}",
                        n + 1
                    )))
                }
            };
            rules.push(Rule::new(category, field, &toks[2..].join(" ")));
        }
        let version =
            version.ok_or_else(|| Error::config("rules file has no `version` line"))?;
        Ok(Self { version, rules })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn rule_matches(rule: &Rule, vendor: &str, product: &str, description: &str) -> bool {
    let hit = |s: &str| s.to_lowercase().contains(&rule.pattern);
    match rule.field {
        RuleField::Vendor => hit(vendor),
        RuleField::Product => hit(product),
        RuleField::Description => hit(description),
        RuleField::Any => hit(vendor) || hit(product) || hit(description),
    }
}

/// Keeps entries matched by at least one rule, tagged with the category of the
/// highest-priority matching rule. With `parts`, only CPEs of those parts count.
pub fn filter_iot(
    entries: &[CveEntry],
    rules: &RuleSet,
    parts: Option<&[CpePart]>,
) -> Result<Vec<(CveEntry, Category)>> {
    if rules.rules.is_empty() {
        return Err(Error::config("empty rule set"));
    }
    let mut out = Vec::new();
    for e in entries {
        let cpes: Vec<_> = e
            .cpe_uris
            .iter()
            .filter(|c| parts.is_none_or(|p| p.contains(&c.part)))
            .collect();
        if cpes.is_empty() {
            continue;
        }
        let hit = rules.rules.iter().find(|r| {
            cpes.iter()
                .any(|c| rule_matches(r, &c.vendor_name(), &c.product_name(), &e.description))
        });
        if let Some(r) = hit {
            out.push((e.clone(), r.category));
        }
    }
    Ok(out)
}

/// One device candidate awaiting manual enrichment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub brand: String,
    pub product_type: String,
    pub category: Category,
    pub price_usd: String,
    pub protocols: String,
    pub data_storage: String,
    pub personal_information: String,
    pub location_track: String,
    pub communication_capability: String,
    pub authorisation_encryption: String,
    pub risk_score: RiskClass,
    pub synthetic: bool,
    pub cve_id: String,
    pub published: String,
    pub base_score: f64,
    pub cpe_uri: String,
}

pub const CANDIDATE_PROVENANCE_COLUMNS: [&str; 4] = ["cve_id", "published", "base_score", "cpe_uri"];

/// Expands matched entries into one record per distinct (vendor, product).
pub fn candidate_records(
    matched: &[(CveEntry, Category)],
    parts: Option<&[CpePart]>,
) -> Result<Vec<CandidateRecord>> {
    let mut out = Vec::new();
    for (e, cat) in matched {
        let risk = severity_class(e.cvss_v3_base)?;
        let mut seen: Vec<(String, String)> = Vec::new();
        for c in e
            .cpe_uris
            .iter()
            .filter(|c| parts.is_none_or(|p| p.contains(&c.part)))
        {
            let key = (c.vendor_name(), c.product_name());
            if seen.contains(&key) {
                continue;
            }
            seen.push(key.clone());
            out.push(CandidateRecord {
                brand: key.0,
                product_type: key.1,
                category: *cat,
                price_usd: String::new(),
                protocols: String::new(),
                data_storage: String::new(),
                personal_information: String::new(),
                location_track: String::new(),
                communication_capability: String::new(),
                authorisation_encryption: String::new(),
                risk_score: risk,
                synthetic: false,
                cve_id: e.cve_id.clone(),
                published: e.published.format("%Y-%m-%d").to_string(),
                base_score: e.cvss_v3_base,
                cpe_uri: c.raw.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nvd::cpe::parse_cpe_uri;
    use chrono::NaiveDate;

    fn entry(product: &str) -> CveEntry {
        CveEntry {
            cve_id: "CVE-2020-0001".into(),
            description: String::new(),
            published: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            cvss_v3_base: 7.5,
            cpe_uris: vec![parse_cpe_uri(&format!("cpe:2.3:h:acme:{product}:1.0:*:*:*:*:*:*:*")).unwrap()],
        }
    }

    #[test]
    fn substring_rule_retains_and_tags() {
        let rules = RuleSet::new(vec![Rule::new(Category::SmartHome, RuleField::Product, "camera")]);
        let out = filter_iot(&[entry("smart_camera")], &rules, None).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1, Category::SmartHome);
    }

    #[test]
    fn unmatched_entry_dropped() {
        let rules = RuleSet::new(vec![Rule::new(Category::SmartHome, RuleField::Product, "camera")]);
        assert!(filter_iot(&[entry("router_os")], &rules, None).unwrap().is_empty());
    }

    #[test]
    fn earlier_rule_wins() {
        let rules = RuleSet::new(vec![
            Rule::new(Category::Medical, RuleField::Product, "pump"),
            Rule::new(Category::Other, RuleField::Vendor, "acme"),
        ]);
        let out = filter_iot(&[entry("insulin_pump")], &rules, None).unwrap();
        assert_eq!(out[0].1, Category::Medical);
    }

    #[test]
    fn empty_rules_rejected() {
        assert!(matches!(
            filter_iot(&[entry("x")], &RuleSet::new(vec![]), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn part_restriction() {
        let rules = RuleSet::new(vec![Rule::new(Category::SmartHome, RuleField::Product, "camera")]);
        let only_os = [CpePart::OperatingSystem];
        assert!(filter_iot(&[entry("camera")], &rules, Some(&only_os)).unwrap().is_empty());
    }

    #[test]
    fn parse_rule_file() {
        let rs = RuleSet::parse("# c\nversion 3\nMedical product insulin pump\nSmartHome any Camera\n").unwrap();
        assert_eq!(rs.version, 3);
        assert_eq!(rs.rules.len(), 2);
        assert_eq!(rs.rules[0].pattern, "insulin pump");
        assert_eq!(rs.rules[1].field, RuleField::Any);
        assert_eq!(rs.rules[1].pattern, "camera");
        assert!(RuleSet::parse("Medical product x\n").is_err());
        assert!(RuleSet::parse("version 1\nToaster product x\n").is_err());
    }

    #[test]
    fn one_candidate_per_vendor_product() {
        let mut e = entry("cam");
        e.cpe_uris.push(parse_cpe_uri("cpe:2.3:h:acme:cam:2.0:*:*:*:*:*:*:*").unwrap());
        e.cpe_uris.push(parse_cpe_uri("cpe:2.3:o:acme:cam_firmware:2.0:*:*:*:*:*:*:*").unwrap());
        let recs = candidate_records(&[(e, Category::SmartHome)], None).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].risk_score, RiskClass::High);
        assert!(recs[0].price_usd.is_empty());
    }
}
