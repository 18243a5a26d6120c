use std::fmt;

use super::DeviceRecord;
use crate::error::{Error, Result};
use crate::nvd::RiskClass;

/// Class counts and fractions of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSummary {
    pub total: usize,
    /// Indexed by class ordinal.
    pub per_class: [(usize, f64); RiskClass::COUNT],
}

impl CorpusSummary {
    pub fn count(&self, class: RiskClass) -> usize {
        self.per_class[class.ordinal()].0
    }

    pub fn fraction(&self, class: RiskClass) -> f64 {
        self.per_class[class.ordinal()].1
    }

    pub fn counts(&self) -> [usize; RiskClass::COUNT] {
        self.per_class.map(|(c, _)| c)
    }

    /// Whole-percent display string as in a class table, e.g. `15%`.
    pub fn percent(&self, class: RiskClass) -> String {
        format!("{:.0}%", self.fraction(class) * 100.0)
    }
}

impl fmt::Display for CorpusSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14}{:>8}{:>16}", "Classification", "Counts", "Distribution %")?;
        for c in RiskClass::ALL {
            writeln!(f, "{:<14}{:>8}{:>16}", c.name(), self.count(c), self.percent(c))?;
        }
        write!(f, "{:<14}{:>8}", "Total", self.total)
    }
}

pub fn label_distribution(labels: &[RiskClass]) -> Result<CorpusSummary> {
    if labels.is_empty() {
        return Err(Error::domain("class distribution of an empty corpus"));
    }
    let mut counts = [0usize; RiskClass::COUNT];
    for l in labels {
        counts[l.ordinal()] += 1;
    }
    let total = labels.len();
    Ok(CorpusSummary {
        total,
        per_class: counts.map(|c| (c, c as f64 / total as f64)),
    })
}

pub fn class_distribution(records: &[DeviceRecord]) -> Result<CorpusSummary> {
    let labels: Vec<RiskClass> = records.iter().map(|r| r.risk_score).collect();
    label_distribution(&labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use RiskClass::*;

    fn labels(counts: [usize; 4]) -> Vec<RiskClass> {
        RiskClass::ALL
            .iter()
            .zip(counts)
            .flat_map(|(c, n)| std::iter::repeat_n(*c, n))
            .collect()
    }

    #[test]
    fn table_counts_display_as_whole_percent() {
        let s = label_distribution(&labels([176, 138, 183, 656])).unwrap();
        assert_eq!(s.total, 1153);
        let pct: Vec<String> = RiskClass::ALL.iter().map(|c| s.percent(*c)).collect();
        assert_eq!(pct, ["15%", "12%", "16%", "57%"]);
        let sum: f64 = s.per_class.iter().map(|p| p.1).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_class() {
        let s = label_distribution(&[High, High, High]).unwrap();
        assert_eq!(s.per_class[2], (3, 1.0));
        assert_eq!(s.per_class[0], (0, 0.0));
    }

    #[test]
    fn balanced() {
        let s = label_distribution(&labels([2, 2, 2, 2])).unwrap();
        assert!(s.per_class.iter().all(|&(c, f)| c == 2 && f == 0.25));
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(label_distribution(&[]), Err(Error::Domain(_))));
    }
}
