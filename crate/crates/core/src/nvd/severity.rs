use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CVSS v3 qualitative severity, the label space of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RiskClass {
    Low = 0,
    Medium = 1,
    High = 2,
    Critical = 3,
}

impl RiskClass {
    pub const ALL: [RiskClass; 4] = [
        RiskClass::Low,
        RiskClass::Medium,
        RiskClass::High,
        RiskClass::Critical,
    ];
    pub const COUNT: usize = 4;

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<RiskClass> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            RiskClass::Low => "Low",
            RiskClass::Medium => "Medium",
            RiskClass::High => "High",
            RiskClass::Critical => "Critical",
        }
    }
}

impl fmt::Display for RiskClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RiskClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::format(format!("unknown risk class {s:?}; expected Low|Medium|High|Critical")))
    }
}

/// Maps a CVSS v3 base score onto the v3.0 qualitative scale.
///
/// A score of 0.0 ("None") has no class here and is rejected.
pub fn severity_class(base_score: f64) -> Result<RiskClass> {
    if !base_score.is_finite() || base_score <= 0.0 || base_score > 10.0 {
        return Err(Error::domain(format!(
            "CVSS base score {base_score} outside (0.0, 10.0]"
        )));
    }
    // Scores carry one decimal; compare on tenths to dodge representation error.
    let tenths = (base_score * 10.0).round() as i64;
    Ok(match tenths {
        ..=39 => RiskClass::Low,
        40..=69 => RiskClass::Medium,
        70..=89 => RiskClass::High,
        _ => RiskClass::Critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bin_edges() {
        assert_eq!(severity_class(0.1).unwrap(), RiskClass::Low);
        assert_eq!(severity_class(3.9).unwrap(), RiskClass::Low);
        assert_eq!(severity_class(4.0).unwrap(), RiskClass::Medium);
        assert_eq!(severity_class(6.9).unwrap(), RiskClass::Medium);
        assert_eq!(severity_class(7.0).unwrap(), RiskClass::High);
        assert_eq!(severity_class(8.9).unwrap(), RiskClass::High);
        assert_eq!(severity_class(9.0).unwrap(), RiskClass::Critical);
        assert_eq!(severity_class(10.0).unwrap(), RiskClass::Critical);
    }

    #[test]
    fn none_and_out_of_range_rejected() {
        assert!(matches!(severity_class(0.0), Err(Error::Domain(_))));
        assert!(severity_class(-1.0).is_err());
        assert!(severity_class(10.1).is_err());
        assert!(severity_class(f64::NAN).is_err());
    }

    #[test]
    fn ordering_is_total() {
        assert!(RiskClass::Low < RiskClass::Medium);
        assert!(RiskClass::High < RiskClass::Critical);
        for (i, c) in RiskClass::ALL.iter().enumerate() {
            assert_eq!(c.ordinal(), i);
            assert_eq!(c.name().parse::<RiskClass>().unwrap(), *c);
        }
    }

    proptest! {
        #[test]
        fn monotone_in_score(a in 1u32..=100, b in 1u32..=100) {
            let (lo, hi) = (a.min(b), a.max(b));
            let cl = severity_class(lo as f64 / 10.0).unwrap();
            let ch = severity_class(hi as f64 / 10.0).unwrap();
            prop_assert!(cl <= ch);
        }
    }
}
