use std::fmt;

use super::ablation::AblationReport;
use super::cv::{CvResult, SelectionMetric};
use super::grid::TuneResult;

/// Runs-by-folds accuracy table with mean and std columns.
pub fn cv_table(runs: &[(String, CvResult)]) -> String {
    let Some((_, first)) = runs.first() else {
        return String::new();
    };
    let width = runs.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(3);
    let mut out = format!("{:<width$}", "Run");
    for s in &first.scores {
        out.push_str(&format!(" {:>6}", s.label()));
    }
    out.push_str(&format!(" {:>6} {:>6}\n", "Mean", "Std"));
    for (name, cv) in runs {
        out.push_str(&format!("{name:<width$}"));
        for a in cv.accuracies() {
            out.push_str(&format!(" {:>6.3}", a));
        }
        out.push_str(&format!(" {:>6.3} {:>6.3}\n", cv.mean_accuracy(), cv.std_accuracy()));
    }
    out
}

pub fn cv_csv(runs: &[(String, CvResult)]) -> String {
    let Some((_, first)) = runs.first() else {
        return String::new();
    };
    let mut out = String::from("run");
    for s in &first.scores {
        out.push_str(&format!(",{}", s.label()));
    }
    out.push_str(",mean,std\n");
    for (name, cv) in runs {
        out.push_str(name);
        for a in cv.accuracies() {
            out.push_str(&format!(",{a:.6}"));
        }
        out.push_str(&format!(",{:.6},{:.6}\n", cv.mean_accuracy(), cv.std_accuracy()));
    }
    out
}

fn metric_name(m: SelectionMetric) -> &'static str {
    match m {
        SelectionMetric::Accuracy => "accuracy",
        SelectionMetric::MacroF1 => "macro_f1",
    }
}

fn params_text(params: &[(String, String)]) -> String {
    params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for TuneResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>4} {:>8} {:>8}  params (ranked by mean {})", "rank", "mean", "std", metric_name(self.metric))?;
        for (rank, &i) in self.ranking.iter().enumerate() {
            let e = &self.entries[i];
            writeln!(f, "{:>4} {:>8.4} {:>8.4}  {}", rank + 1, e.mean, e.std, params_text(&e.params))?;
        }
        write!(f, "best: {}", params_text(&self.best().params))
    }
}

impl TuneResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,grid_index,params,mean,std\n");
        for (rank, &i) in self.ranking.iter().enumerate() {
            let e = &self.entries[i];
            out.push_str(&format!("{},{},{},{:.6},{:.6}\n", rank + 1, i, params_text(&e.params), e.mean, e.std));
        }
        out
    }
}

impl fmt::Display for AblationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "baseline mean {} {:.4} (std {:.4})",
            metric_name(self.metric),
            self.baseline_mean,
            self.baseline_std
        )?;
        writeln!(f, "{:<26} {:>8} {:>8} {:>8}", "dropped column", "mean", "std", "delta")?;
        for r in &self.rows {
            writeln!(f, "{:<26} {:>8.4} {:>8.4} {:>+8.4}", r.column, r.mean, r.std, r.delta)?;
        }
        Ok(())
    }
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("column,mean,std,delta\nbaseline,{:.6},{:.6},0\n", self.baseline_mean, self.baseline_std);
        for r in &self.rows {
            out.push_str(&format!("{},{:.6},{:.6},{:.6}\n", r.column, r.mean, r.std, r.delta));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::cv::FoldScore;

    #[test]
    fn table_layout() {
        let cv = CvResult {
            scores: (0..4)
                .map(|i| FoldScore {
                    repeat: i / 2,
                    fold: i % 2,
                    accuracy: 0.5 + 0.1 * i as f64,
                    macro_f1: 0.0,
                })
                .collect(),
        };
        let text = cv_table(&[("wo_dr".into(), cv.clone())]);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].contains("R1-F1") && lines[0].contains("R2-F2"));
        assert!(lines[1].starts_with("wo_dr"));
        assert!(lines[1].contains("0.650"));
        let csv = cv_csv(&[("wo_dr".into(), cv)]);
        assert!(csv.starts_with("run,R1-F1,R1-F2,R2-F1,R2-F2,mean,std\n"));
    }
}
