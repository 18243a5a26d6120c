use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nvd::RiskClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Nothing was predicted as this class, so precision is 0 by convention.
    pub precision_undefined: bool,
    /// The class never occurs, so recall is 0 by convention.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    pub micro: Averages,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Unweighted mean.
pub fn macro_average(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn compute_metrics(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<MetricsReport> {
    if truth.len() != predicted.len() {
        return Err(Error::domain(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::domain("metrics need at least one prediction"));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::domain(format!("label outside {n_classes} classes")));
        }
        confusion[t][p] += 1;
    }
    let per_class: Vec<ClassMetrics> = (0..n_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let predicted_c: usize = (0..n_classes).map(|t| confusion[t][c]).sum();
            let support: usize = confusion[c].iter().sum();
            let (precision, precision_undefined) = ratio(tp, predicted_c);
            let (recall, recall_undefined) = ratio(tp, support);
            ClassMetrics {
                precision,
                recall,
                f1: harmonic(precision, recall),
                support,
                precision_undefined,
                recall_undefined,
            }
        })
        .collect();
    let pick = |f: fn(&ClassMetrics) -> f64| macro_average(&per_class.iter().map(f).collect::<Vec<_>>());
    let macro_avg = Averages {
        precision: pick(|m| m.precision),
        recall: pick(|m| m.recall),
        f1: pick(|m| m.f1),
    };
    let tp: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let fp: usize = (0..n_classes)
        .map(|c| (0..n_classes).map(|t| confusion[t][c]).sum::<usize>() - confusion[c][c])
        .sum();
    let fn_: usize = (0..n_classes).map(|c| confusion[c].iter().sum::<usize>() - confusion[c][c]).sum();
    let micro_p = ratio(tp, tp + fp).0;
    let micro_r = ratio(tp, tp + fn_).0;
    let accuracy = tp as f64 / truth.len() as f64;
    Ok(MetricsReport {
        confusion,
        per_class,
        macro_avg,
        micro: Averages {
            precision: micro_p,
            recall: micro_r,
            f1: harmonic(micro_p, micro_r),
        },
        accuracy,
    })
}

fn class_name(c: usize) -> String {
    RiskClass::from_ordinal(c).map_or_else(|| format!("class{c}"), |r| r.name().to_string())
}

impl MetricsReport {
    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    /// `(row label, precision, recall, f1)` for every class, Macro and Micro/ACC.
    fn rows(&self) -> Vec<(String, f64, f64, f64)> {
        let mut rows: Vec<_> = self
            .per_class
            .iter()
            .enumerate()
            .map(|(c, m)| (class_name(c), m.precision, m.recall, m.f1))
            .collect();
        rows.push(("Macro".into(), self.macro_avg.precision, self.macro_avg.recall, self.macro_avg.f1));
        rows.push(("Micro/ACC".into(), self.micro.precision, self.micro.recall, self.micro.f1));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,precision,recall,f1\n");
        for (name, p, r, f) in self.rows() {
            out.push_str(&format!("{name},{p:.6},{r:.6},{f:.6}\n"));
        }
        out
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>9} {:>9} {:>9}", "", "Precision", "Recall", "F1")?;
        for (name, p, r, f1) in self.rows() {
            writeln!(f, "{name:<10} {:>8.1}% {:>8.1}% {:>8.1}%", p * 100.0, r * 100.0, f1 * 100.0)?;
        }
        let flagged: Vec<String> = self
            .per_class
            .iter()
            .enumerate()
            .filter(|(_, m)| m.precision_undefined || m.recall_undefined)
            .map(|(c, _)| class_name(c))
            .collect();
        if !flagged.is_empty() {
            writeln!(f, "zero denominators (reported as 0): {}", flagged.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 3, 3];
        let m = compute_metrics(&y, &y, 4).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_avg, Averages { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn hand_computed_case() {
        let t = [0, 0, 1, 1];
        let p = [0, 1, 1, 1];
        let m = compute_metrics(&t, &p, 2).unwrap();
        assert_eq!(m.confusion, vec![vec![1, 1], vec![0, 2]]);
        assert!((m.per_class[1].precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.per_class[0].recall, 0.5);
        assert!((m.macro_avg.precision - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(m.accuracy, 0.75);
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let m = compute_metrics(&[0, 0], &[0, 0], 2).unwrap();
        assert!(m.per_class[1].precision_undefined && m.per_class[1].recall_undefined);
        assert_eq!(m.per_class[1].f1, 0.0);
        assert!(m.to_string().contains("zero denominators"));
        assert!(compute_metrics(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn layout_has_macro_and_micro_rows() {
        let m = compute_metrics(&[0, 1, 2, 3], &[0, 1, 2, 2], 4).unwrap();
        let text = m.to_string();
        for row in ["Low", "Medium", "High", "Critical", "Macro", "Micro/ACC"] {
            assert!(text.contains(row));
        }
        assert!(m.to_csv().contains("Micro/ACC,0.750000,0.750000,0.750000"));
    }
}
