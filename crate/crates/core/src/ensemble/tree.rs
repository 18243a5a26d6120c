use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Splitter {
    /// Best midpoint threshold per candidate feature.
    Best,
    /// One uniformly drawn threshold per candidate feature.
    Random,
}

/// Number of features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Count(m) => m,
        };
        m.clamp(1, n_features.max(1))
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(MaxFeatures::All),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            n => n
                .parse()
                .ok()
                .filter(|&m: &usize| m > 0)
                .map(MaxFeatures::Count)
                .ok_or_else(|| Error::config(format!("max_features `{s}`: expected all, sqrt or a count"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Minimum weighted impurity decrease, as a share of the root weight.
    pub min_impurity_decrease: f64,
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: usize::MAX,
            min_samples_split: 2,
            min_samples_leaf: 1,
            min_impurity_decrease: 0.0,
            max_features: MaxFeatures::All,
            splitter: Splitter::Best,
        }
    }
}

impl TreeParams {
    pub fn with_depth(max_depth: usize) -> Self {
        Self {
            max_depth,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.min_samples_split < 2 || self.min_samples_leaf < 1 {
            return Err(Error::config(
                "min_samples_split must be at least 2 and min_samples_leaf at least 1",
            ));
        }
        if !(self.min_impurity_decrease >= 0.0) || !self.min_impurity_decrease.is_finite() {
            return Err(Error::config("min_impurity_decrease must be finite and non-negative"));
        }
        if let MaxFeatures::Count(0) = self.max_features {
            return Err(Error::config("max_features must be positive"));
        }
        Ok(())
    }
}

/// Fitting targets: class ordinals (Gini) or real values (variance).
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Classes { labels: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
}

impl Targets<'_> {
    fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(v) => v.len(),
        }
    }

    fn n_outputs(&self) -> usize {
        match self {
            Targets::Classes { n_classes, .. } => *n_classes,
            Targets::Values(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class distribution, or a single regression value.
    Leaf { value: Vec<f64> },
}

/// Binary tree stored in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    n_outputs: usize,
}

#[derive(Clone)]
struct Stats {
    weight: f64,
    /// Per-class weight, or `[Σwy, Σwy²]`.
    sums: Vec<f64>,
}

impl Stats {
    fn new(targets: &Targets) -> Self {
        let width = match targets {
            Targets::Classes { n_classes, .. } => *n_classes,
            Targets::Values(_) => 2,
        };
        Stats {
            weight: 0.0,
            sums: vec![0.0; width],
        }
    }

    fn add(&mut self, targets: &Targets, row: usize, w: f64) {
        self.weight += w;
        match targets {
            Targets::Classes { labels, .. } => self.sums[labels[row]] += w,
            Targets::Values(v) => {
                self.sums[0] += w * v[row];
                self.sums[1] += w * v[row] * v[row];
            }
        }
    }

    fn minus(&self, other: &Stats) -> Stats {
        Stats {
            weight: self.weight - other.weight,
            sums: self.sums.iter().zip(&other.sums).map(|(a, b)| a - b).collect(),
        }
    }

    /// `W · impurity = W − proxy`, so split gain is a difference of proxies.
    fn proxy(&self, targets: &Targets) -> f64 {
        if self.weight <= 0.0 {
            return 0.0;
        }
        match targets {
            Targets::Classes { .. } => self.sums.iter().map(|s| s * s).sum::<f64>() / self.weight,
            Targets::Values(_) => self.sums[0] * self.sums[0] / self.weight,
        }
    }

    fn impurity(&self, targets: &Targets) -> f64 {
        if self.weight <= 0.0 {
            return 0.0;
        }
        match targets {
            Targets::Classes { .. } => 1.0 - self.proxy(targets) / self.weight,
            Targets::Values(_) => {
                let mean = self.sums[0] / self.weight;
                (self.sums[1] / self.weight - mean * mean).max(0.0)
            }
        }
    }

    fn leaf_value(&self, targets: &Targets) -> Vec<f64> {
        match targets {
            Targets::Classes { n_classes, .. } => {
                if self.weight > 0.0 {
                    self.sums.iter().map(|s| s / self.weight).collect()
                } else {
                    vec![1.0 / *n_classes as f64; *n_classes]
                }
            }
            Targets::Values(_) => vec![if self.weight > 0.0 { self.sums[0] / self.weight } else { 0.0 }],
        }
    }
}

struct Task {
    rows: Vec<usize>,
    /// Node rows sorted by each feature.
    sorted: Vec<Vec<usize>>,
    depth: usize,
    /// Parent split and whether this is its left child.
    parent: Option<(usize, bool)>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    x: &'a Matrix,
    targets: Targets<'a>,
    weights: &'a [f64],
    params: &'a TreeParams,
    total_weight: f64,
    n_candidates: usize,
}

impl Grower<'_> {
    fn stats(&self, rows: &[usize]) -> Stats {
        let mut s = Stats::new(&self.targets);
        for &r in rows {
            s.add(&self.targets, r, self.weights[r]);
        }
        s
    }

    fn candidate_features(&self, rng: &mut Rng) -> Vec<usize> {
        let d = self.x.cols();
        if self.n_candidates >= d {
            return (0..d).collect();
        }
        let mut f = sample(rng, d, self.n_candidates).into_vec();
        f.sort_unstable();
        f
    }

    fn best_split(&self, task: &Task, parent: &Stats, rng: &mut Rng) -> Option<Candidate> {
        let t = &self.targets;
        let parent_proxy = parent.proxy(t);
        let tol = 1e-10 * parent_proxy.abs().max(f64::MIN_POSITIVE);
        let msl = self.params.min_samples_leaf;
        let n = task.rows.len();
        let mut best: Option<Candidate> = None;
        let mut consider = |feature: usize, threshold: f64, left: &Stats| {
            let right = parent.minus(left);
            let gain = left.proxy(t) + right.proxy(t) - parent_proxy;
            if best.as_ref().is_none_or(|b| gain > b.gain + tol) {
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        };
        for f in self.candidate_features(rng) {
            let order = &task.sorted[f];
            let value = |i: usize| self.x.get(order[i], f);
            match self.params.splitter {
                Splitter::Best => {
                    let mut left = Stats::new(t);
                    for i in 0..n - 1 {
                        left.add(t, order[i], self.weights[order[i]]);
                        let (a, b) = (value(i), value(i + 1));
                        if a < b && i + 1 >= msl && n - i - 1 >= msl {
                            let mut mid = a + (b - a) / 2.0;
                            if mid >= b {
                                mid = a;
                            }
                            consider(f, mid, &left);
                        }
                    }
                }
                Splitter::Random => {
                    let (lo, hi) = (value(0), value(n - 1));
                    if lo >= hi {
                        continue;
                    }
                    let threshold = rng.random_range(lo..hi);
                    let mut left = Stats::new(t);
                    let mut count = 0;
                    while count < n && value(count) <= threshold {
                        left.add(t, order[count], self.weights[order[count]]);
                        count += 1;
                    }
                    if count >= msl && n - count >= msl {
                        consider(f, threshold, &left);
                    }
                }
            }
        }
        best
    }
}

fn check_inputs(x: &Matrix, targets: &Targets, weights: &[f64]) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::domain("cannot fit a tree on zero rows"));
    }
    if targets.len() != x.rows() || weights.len() != x.rows() {
        return Err(Error::domain(format!(
            "{} rows but {} targets and {} weights",
            x.rows(),
            targets.len(),
            weights.len()
        )));
    }
    if !x.is_finite() {
        return Err(Error::domain("feature matrix contains non-finite values"));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::domain("sample weights must be non-negative with a positive total"));
    }
    match targets {
        Targets::Classes { labels, n_classes } => {
            if let Some(bad) = labels.iter().find(|&&l| l >= *n_classes) {
                return Err(Error::domain(format!("label {bad} outside {n_classes} classes")));
            }
        }
        Targets::Values(v) => {
            if v.iter().any(|y| !y.is_finite()) {
                return Err(Error::domain("regression targets must be finite"));
            }
        }
    }
    Ok(())
}

/// Fits a tree and reports the leaf reached by every training row
/// (`usize::MAX` for rows with zero weight).
pub(crate) fn grow(
    x: &Matrix,
    targets: Targets,
    weights: Option<&[f64]>,
    params: &TreeParams,
    rng: &mut Rng,
) -> Result<(DecisionTree, Vec<usize>)> {
    params.check()?;
    let unit;
    let weights = match weights {
        Some(w) => w,
        None => {
            unit = vec![1.0; x.rows()];
            &unit
        }
    };
    check_inputs(x, &targets, weights)?;
    let d = x.cols();
    let rows: Vec<usize> = (0..x.rows()).filter(|&r| weights[r] > 0.0).collect();
    let sorted = (0..d)
        .map(|f| {
            let mut o = rows.clone();
            o.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            o
        })
        .collect();
    let grower = Grower {
        x,
        targets,
        weights,
        params,
        total_weight: weights.iter().sum(),
        n_candidates: params.max_features.resolve(d),
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut leaf_of = vec![usize::MAX; x.rows()];
    let mut goes_left = vec![false; x.rows()];
    let mut stack = vec![Task {
        rows,
        sorted,
        depth: 0,
        parent: None,
    }];
    while let Some(task) = stack.pop() {
        let id = nodes.len();
        if let Some((p, is_left)) = task.parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                *if is_left { left } else { right } = id;
            }
        }
        let stats = grower.stats(&task.rows);
        let n = task.rows.len();
        let splittable = d > 0
            && task.depth < params.max_depth
            && n >= params.min_samples_split
            && n >= 2 * params.min_samples_leaf
            && stats.impurity(&targets) > 1e-15;
        let chosen = if splittable {
            grower
                .best_split(&task, &stats, rng)
                .filter(|c| (c.gain / grower.total_weight).max(0.0) >= params.min_impurity_decrease)
        } else {
            None
        };
        let Some(split) = chosen else {
            for &r in &task.rows {
                leaf_of[r] = id;
            }
            nodes.push(Node::Leaf {
                value: stats.leaf_value(&targets),
            });
            continue;
        };

        for &r in &task.rows {
            goes_left[r] = x.get(r, split.feature) <= split.threshold;
        }
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = task.rows.iter().partition(|&&r| goes_left[r]);
        let (left_sorted, right_sorted): (Vec<Vec<usize>>, Vec<Vec<usize>>) = task
            .sorted
            .into_iter()
            .map(|o| o.into_iter().partition(|&r| goes_left[r]))
            .unzip();
        nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: usize::MAX,
            right: usize::MAX,
        });
        stack.push(Task {
            rows: right_rows,
            sorted: right_sorted,
            depth: task.depth + 1,
            parent: Some((id, false)),
        });
        stack.push(Task {
            rows: left_rows,
            sorted: left_sorted,
            depth: task.depth + 1,
            parent: Some((id, true)),
        });
    }
    let tree = DecisionTree {
        nodes,
        n_features: d,
        n_outputs: targets.n_outputs(),
    };
    Ok((tree, leaf_of))
}

/// Greedy CART with Gini (classes) or variance (values) impurity.
pub fn fit_tree(
    x: &Matrix,
    targets: Targets,
    weights: Option<&[f64]>,
    params: &TreeParams,
    rng: &mut Rng,
) -> Result<DecisionTree> {
    grow(x, targets, weights, params, rng).map(|(t, _)| t)
}

impl DecisionTree {
    /// Rebuilds a tree from preorder nodes, checking the links.
    pub fn from_nodes(nodes: Vec<Node>, n_features: usize, n_outputs: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::format("tree without nodes"));
        }
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Split {
                    feature,
                    left,
                    right,
                    threshold,
                } => {
                    if *feature >= n_features || *left != i + 1 || *right <= *left || *right >= nodes.len() {
                        return Err(Error::format(format!("tree node {i} has invalid links")));
                    }
                    if !threshold.is_finite() {
                        return Err(Error::format(format!("tree node {i} has a non-finite threshold")));
                    }
                }
                Node::Leaf { value } => {
                    if value.len() != n_outputs {
                        return Err(Error::format(format!("leaf {i} has {} outputs", value.len())));
                    }
                }
            }
        }
        Ok(Self {
            nodes,
            n_features,
            n_outputs,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Index of the leaf reached by `row`.
    pub fn apply(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> &[f64] {
        match &self.nodes[self.apply(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("apply stops at leaves"),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features {
            return Err(Error::domain(format!(
                "tree expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        let mut out = Matrix::zeros(x.rows(), self.n_outputs);
        for (r, row) in x.iter_rows().enumerate() {
            out.row_mut(r).copy_from_slice(self.predict_row(row));
        }
        Ok(out)
    }

    pub fn set_leaf(&mut self, node: usize, value: Vec<f64>) {
        if let Some(Node::Leaf { value: v }) = self.nodes.get_mut(node) {
            *v = value;
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            match &self.nodes[i] {
                Node::Split { left, right, .. } => {
                    stack.push((*left, d + 1));
                    stack.push((*right, d + 1));
                }
                Node::Leaf { .. } => deepest = deepest.max(d),
            }
        }
        deepest
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn classes(labels: &[usize], k: usize) -> Targets<'_> {
        Targets::Classes { labels, n_classes: k }
    }

    #[test]
    fn separable_line_splits_once() {
        let x = Matrix::from_column(&[0.0, 1.0, 2.0, 3.0]);
        let t = fit_tree(&x, classes(&[0, 0, 1, 1], 2), None, &TreeParams::default(), &mut rng::seeded(0)).unwrap();
        assert_eq!(t.nodes().len(), 3);
        match &t.nodes()[0] {
            Node::Split { feature, threshold, .. } => assert_eq!((*feature, *threshold), (0, 1.5)),
            _ => panic!("expected a split"),
        }
        assert_eq!(t.predict_row(&[0.5]), &[1.0, 0.0]);
        assert_eq!(t.predict_row(&[2.5]), &[0.0, 1.0]);
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let x = Matrix::from_column(&[0.0, 1.0, 2.0]);
        let t = fit_tree(&x, classes(&[2, 2, 2], 3), None, &TreeParams::default(), &mut rng::seeded(0)).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict_row(&[9.0]), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn xor_needs_a_zero_gain_root() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let labels = [0, 1, 1, 0];
        let t = fit_tree(&x, classes(&labels, 2), None, &TreeParams::with_depth(2), &mut rng::seeded(0)).unwrap();
        for (r, &l) in labels.iter().enumerate() {
            assert_eq!(t.predict_row(x.row(r))[l], 1.0);
        }
        assert!(t.depth() <= 2);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let t = fit_tree(&x, classes(&[0, 1], 2), None, &TreeParams::default(), &mut rng::seeded(0)).unwrap();
        assert!(matches!(t.nodes()[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn regression_leaves_are_weighted_means() {
        let x = Matrix::from_column(&[0.0, 1.0, 10.0, 11.0]);
        let y = [1.0, 3.0, 10.0, 10.0];
        let w = [3.0, 1.0, 1.0, 1.0];
        let t = fit_tree(&x, Targets::Values(&y), Some(&w), &TreeParams::with_depth(1), &mut rng::seeded(0)).unwrap();
        assert!((t.predict_row(&[0.0])[0] - 1.5).abs() < 1e-12);
        assert!((t.predict_row(&[12.0])[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn min_impurity_decrease_blocks_weak_splits() {
        let x = Matrix::from_column(&[0.0, 1.0, 2.0, 3.0]);
        let labels = [0, 1, 0, 1];
        let params = TreeParams {
            min_impurity_decrease: 0.2,
            ..TreeParams::default()
        };
        let t = fit_tree(&x, classes(&labels, 2), None, &params, &mut rng::seeded(0)).unwrap();
        assert_eq!(t.nodes().len(), 1);
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let x = Matrix::from_column(&[0.0, 1.0, 2.0]);
        let (t, leaves) = grow(&x, classes(&[0, 1, 1], 2), Some(&[1.0, 0.0, 1.0]), &TreeParams::default(), &mut rng::seeded(0)).unwrap();
        assert_eq!(leaves[1], usize::MAX);
        match &t.nodes()[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 1.0),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn random_splitter_stays_inside_range() {
        let x = Matrix::from_column(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let params = TreeParams {
            splitter: Splitter::Random,
            ..TreeParams::default()
        };
        for seed in 0..20 {
            let t = fit_tree(&x, classes(&[0, 0, 1, 1, 1], 2), None, &params, &mut rng::seeded(seed)).unwrap();
            for r in 0..5 {
                let p = t.predict_row(x.row(r));
                assert_eq!(p[if r < 2 { 0 } else { 1 }], 1.0);
            }
        }
    }

    #[test]
    fn bad_inputs() {
        let x = Matrix::zeros(0, 1);
        assert!(fit_tree(&x, classes(&[], 2), None, &TreeParams::default(), &mut rng::seeded(0)).is_err());
        let x = Matrix::from_column(&[0.0]);
        assert!(fit_tree(&x, classes(&[3], 2), None, &TreeParams::default(), &mut rng::seeded(0)).is_err());
        assert!(fit_tree(&x, classes(&[0], 2), Some(&[-1.0]), &TreeParams::default(), &mut rng::seeded(0)).is_err());
    }
}
