use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::apportion::largest_remainder;
use crate::error::{Error, Result};
use crate::nvd::RiskClass;
use crate::rng;

fn class_label(c: usize) -> String {
    RiskClass::from_ordinal(c).map_or_else(|| format!("class {c}"), |r| r.name().to_string())
}

fn by_class(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups
}

/// Repeated stratified k-fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    /// `folds[repeat][row]` is the fold holding `row` out.
    pub folds: Vec<Vec<usize>>,
}

/// Rows of each class are shuffled with the repeat's stream and dealt
/// round-robin into folds. The dealing position carries over from one class to
/// the next, which keeps fold sizes within one of each other.
pub fn make_fold_plan(labels: &[usize], k: usize, repeats: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::domain(format!("k = {k}; need at least 2 folds")));
    }
    if repeats == 0 {
        return Err(Error::domain("repeats must be at least 1"));
    }
    let groups = by_class(labels);
    for (c, g) in groups.iter().enumerate() {
        if !g.is_empty() && g.len() < k {
            return Err(Error::domain(format!(
                "class {} has {} rows, fewer than k = {k}",
                class_label(c),
                g.len()
            )));
        }
    }
    let folds = (0..repeats)
        .map(|r| {
            let mut rng = rng::stream(seed, r as u64);
            let mut assignment = vec![0; labels.len()];
            let mut next = 0;
            for g in &groups {
                let mut rows = g.clone();
                rows.shuffle(&mut rng);
                for row in rows {
                    assignment[row] = next % k;
                    next += 1;
                }
            }
            assignment
        })
        .collect();
    Ok(FoldPlan { k, repeats, seed, folds })
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.folds.first().map_or(0, Vec::len)
    }

    /// `(train, test)` row indices, both ascending.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.n_rows()).partition(|&r| self.folds[repeat][r] != fold)
    }

    /// All `(repeat, fold)` pairs in report order.
    pub fn evaluations(&self) -> Vec<(usize, usize)> {
        (0..self.repeats)
            .flat_map(|r| (0..self.k).map(move |f| (r, f)))
            .collect()
    }
}

/// Stratified hold-out split; returns ascending `(train, test)` row indices.
///
/// The test set gets `round(n · fraction)` rows, apportioned to classes by
/// largest remainder.
pub fn stratified_split(labels: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::domain(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let groups = by_class(labels);
    let present: Vec<usize> = (0..groups.len()).filter(|&c| !groups[c].is_empty()).collect();
    let quotas: Vec<f64> = present.iter().map(|&c| groups[c].len() as f64 * test_fraction).collect();
    let total = (labels.len() as f64 * test_fraction).round() as usize;
    let counts = largest_remainder(&quotas, total);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (&c, &n_test) in present.iter().zip(&counts) {
        let g = &groups[c];
        if n_test == 0 || n_test >= g.len() {
            return Err(Error::domain(format!(
                "test fraction {test_fraction} leaves class {} empty on one side ({} rows, {n_test} to test)",
                class_label(c),
                g.len()
            )));
        }
        let mut rows = g.clone();
        rows.shuffle(&mut rng::stream(seed, c as u64));
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(counts: &[usize]) -> Vec<usize> {
        counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect()
    }

    #[test]
    fn small_exact_plan() {
        let y = labels(&[2, 2, 2, 2]);
        let plan = make_fold_plan(&y, 2, 1, 3).unwrap();
        for fold in 0..2 {
            let (_, test) = plan.split(0, fold);
            let mut classes: Vec<usize> = test.iter().map(|&r| y[r]).collect();
            classes.sort_unstable();
            assert_eq!(classes, vec![0, 1, 2, 3]);
        }
        assert_eq!(plan, make_fold_plan(&y, 2, 1, 3).unwrap());
    }

    #[test]
    fn too_few_members() {
        let err = make_fold_plan(&labels(&[5, 2]), 3, 1, 0).unwrap_err();
        assert!(err.to_string().contains("Medium"));
        assert!(make_fold_plan(&labels(&[5]), 1, 1, 0).is_err());
    }

    #[test]
    fn split_counts() {
        let (train, test) = stratified_split(&labels(&[25, 25, 25, 25]), 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
        let y = labels(&[176, 138, 183, 656]);
        let (_, test) = stratified_split(&y, 0.2, 9).unwrap();
        let per: Vec<usize> = (0..4).map(|c| test.iter().filter(|&&r| y[r] == c).count()).collect();
        assert_eq!(per, vec![35, 28, 37, 131]);
        assert_eq!(stratified_split(&y, 0.2, 9).unwrap().1, test);
        assert!(stratified_split(&labels(&[1, 10]), 0.2, 0).is_err());
        assert!(stratified_split(&y, 1.0, 0).is_err());
    }
}
