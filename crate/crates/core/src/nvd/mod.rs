//! NVD ingestion: feed parsing, CPE names, CVSS severity bins and IoT filtering.

mod cpe;
mod feed;
mod rules;
mod severity;

pub use cpe::{parse_cpe_uri, unescape, CpeIdentity, CpePart, CPE23_COMPONENTS};
pub use feed::{is_cve_id, parse_feed, published_since, read_feed, CveEntry, FeedParse, ItemError};
pub use rules::{
    candidate_records, filter_iot, CandidateRecord, Rule, RuleField, RuleSet,
    CANDIDATE_PROVENANCE_COLUMNS,
};
pub use severity::{severity_class, RiskClass};

/// Earliest publication year kept by ingestion.
pub const FIRST_YEAR: i32 = 2013;
