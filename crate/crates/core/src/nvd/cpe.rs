use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PREFIX: [&str; 2] = ["cpe", "2.3"];
/// `cpe:2.3:` plus eleven attribute components.
pub const CPE23_COMPONENTS: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CpePart {
    Application,
    OperatingSystem,
    Hardware,
}

impl CpePart {
    pub fn code(self) -> char {
        match self {
            CpePart::Application => 'a',
            CpePart::OperatingSystem => 'o',
            CpePart::Hardware => 'h',
        }
    }
}

impl FromStr for CpePart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(CpePart::Application),
            "o" => Ok(CpePart::OperatingSystem),
            "h" => Ok(CpePart::Hardware),
            other => Err(Error::Cpe {
                index: 2,
                message: format!("part must be one of a, o, h; got {other:?}"),
            }),
        }
    }
}

/// A CPE 2.3 formatted-string name. Components keep their escaped form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpeIdentity {
    pub part: CpePart,
    pub vendor: String,
    pub product: String,
    pub version: String,
    /// update, edition, language, sw_edition, target_sw, target_hw, other.
    pub qualifiers: Vec<String>,
    pub raw: String,
}

impl CpeIdentity {
    /// Re-serializes the bound components. Empty components are written as `*`.
    pub fn to_uri(&self) -> String {
        let mut parts: Vec<&str> = vec!["cpe", "2.3"];
        let code = self.part.code().to_string();
        parts.push(&code);
        for c in [&self.vendor, &self.product, &self.version]
            .into_iter()
            .chain(self.qualifiers.iter())
        {
            parts.push(if c.is_empty() { "*" } else { c.as_str() });
        }
        parts.join(":")
    }

    /// Vendor with CPE escapes removed and underscores kept.
    pub fn vendor_name(&self) -> String {
        unescape(&self.vendor)
    }

    pub fn product_name(&self) -> String {
        unescape(&self.product)
    }
}

impl fmt::Display for CpeIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// Splits on colons that are not preceded by a backslash escape.
fn split_components(uri: &str) -> Vec<&str> {
    let bytes = uri.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b':' => {
                out.push(&uri[start..i]);
                start = i + 1;
                i += 1;
            }
            _ => i += 1,
        }
    }
    out.push(&uri[start.min(uri.len())..]);
    out
}

pub fn unescape(component: &str) -> String {
    let mut out = String::with_capacity(component.len());
    let mut chars = component.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn parse_cpe_uri(uri: &str) -> Result<CpeIdentity> {
    let comps = split_components(uri);
    for (i, expected) in PREFIX.iter().enumerate() {
        match comps.get(i) {
            Some(c) if c == expected => {}
            Some(c) => {
                return Err(Error::Cpe {
                    index: i,
                    message: format!("expected {expected:?}, found {c:?} (only cpe:2.3 is supported)"),
                })
            }
            None => {
                return Err(Error::Cpe {
                    index: i,
                    message: "missing prefix".into(),
                })
            }
        }
    }
    if comps.len() < CPE23_COMPONENTS {
        return Err(Error::Cpe {
            index: comps.len(),
            message: format!(
                "expected {CPE23_COMPONENTS} components, found {}",
                comps.len()
            ),
        });
    }
    if comps.len() > CPE23_COMPONENTS {
        return Err(Error::Cpe {
            index: CPE23_COMPONENTS,
            message: format!(
                "expected {CPE23_COMPONENTS} components, found {}",
                comps.len()
            ),
        });
    }
    for (i, c) in comps.iter().enumerate().skip(2) {
        if c.is_empty() {
            return Err(Error::Cpe {
                index: i,
                message: "empty component".into(),
            });
        }
    }
    let part = comps[2].parse::<CpePart>()?;
    Ok(CpeIdentity {
        part,
        vendor: comps[3].to_string(),
        product: comps[4].to_string(),
        version: comps[5].to_string(),
        qualifiers: comps[6..].iter().map(|s| s.to_string()).collect(),
        raw: uri.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binds_positionally() {
        let c = parse_cpe_uri("cpe:2.3:h:vendorx:cam123:1.0:*:*:*:*:*:*:*").unwrap();
        assert_eq!(c.part, CpePart::Hardware);
        assert_eq!(c.vendor, "vendorx");
        assert_eq!(c.product, "cam123");
        assert_eq!(c.version, "1.0");
        assert_eq!(c.qualifiers.len(), 7);

        let o = parse_cpe_uri("cpe:2.3:o:vendorx:fw:2.1:*:*:*:*:*:*:*").unwrap();
        assert_eq!(o.part, CpePart::OperatingSystem);
    }

    #[test]
    fn escaped_colon_does_not_split() {
        let c = parse_cpe_uri(r"cpe:2.3:a:acme:web\:admin:1.2:*:*:*:*:*:*:*").unwrap();
        assert_eq!(c.product, r"web\:admin");
        assert_eq!(c.product_name(), "web:admin");
        assert_eq!(c.to_uri(), c.raw);
    }

    #[test]
    fn rejects_other_versions_and_short_uris() {
        match parse_cpe_uri("cpe:2.2:h:x:y") {
            Err(Error::Cpe { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_cpe_uri("cpe:2.3:h:x:y:1.0") {
            Err(Error::Cpe { index, .. }) => assert_eq!(index, 6),
            other => panic!("unexpected {other:?}"),
        }
        match parse_cpe_uri("cpe:2.3:x:v:p:1:*:*:*:*:*:*:*") {
            Err(Error::Cpe { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_cpe_uri("cpe:2.3:h:v:p:1:*:*:*:*:*:*:*:extra").is_err());
    }
}
