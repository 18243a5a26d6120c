use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, DecisionTree, MaxFeatures, Splitter, Targets, TreeParams};
use super::{check_features, check_labels, ClassWeights};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::{par, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForestVariant {
    RandomForest,
    ExtraTrees,
}

impl ForestVariant {
    pub fn name(self) -> &'static str {
        match self {
            ForestVariant::RandomForest => "random_forest",
            ForestVariant::ExtraTrees => "extra_trees",
        }
    }
}

impl fmt::Display for ForestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ForestVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_forest" => Ok(ForestVariant::RandomForest),
            "extra_trees" => Ok(ForestVariant::ExtraTrees),
            _ => Err(Error::config(format!(
                "unknown forest variant `{s}` (random_forest | extra_trees)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub variant: ForestVariant,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    /// Depth and impurity limits; splitter and max_features are set per variant.
    pub tree: TreeParams,
    pub class_weights: Option<ClassWeights>,
}

impl ForestParams {
    pub fn random_forest(n_trees: usize) -> Self {
        Self {
            n_trees,
            variant: ForestVariant::RandomForest,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            tree: TreeParams::default(),
            class_weights: None,
        }
    }

    pub fn extra_trees(n_trees: usize) -> Self {
        Self {
            variant: ForestVariant::ExtraTrees,
            bootstrap: false,
            ..Self::random_forest(n_trees)
        }
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_features: self.max_features,
            splitter: match self.variant {
                ForestVariant::RandomForest => Splitter::Best,
                ForestVariant::ExtraTrees => Splitter::Random,
            },
            ..self.tree
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub variant: ForestVariant,
    pub n_classes: usize,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
    /// Seed each tree was grown from.
    pub seeds: Vec<u64>,
    pub class_weights: Option<ClassWeights>,
}

pub fn forest_fit(x: &Matrix, labels: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::config("a forest needs at least one tree"));
    }
    check_labels(x, labels, n_classes)?;
    if let Some(cw) = &params.class_weights {
        cw.check(n_classes)?;
    }
    let tree_params = params.tree_params();
    tree_params.check()?;
    let n = x.rows();
    let base: Vec<f64> = labels
        .iter()
        .map(|&l| params.class_weights.as_ref().map_or(1.0, |cw| cw.0[l]))
        .collect();
    let seeds: Vec<u64> = (0..params.n_trees).map(|t| rng::derive_seed(seed, &[t as u64])).collect();
    let fitted = par::map(params.n_trees, |t| {
        let mut rng = rng::seeded(seeds[t]);
        let weights: Vec<f64> = if params.bootstrap {
            let mut counts = vec![0.0; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1.0;
            }
            counts.iter().zip(&base).map(|(c, w)| c * w).collect()
        } else {
            base.clone()
        };
        fit_tree(
            x,
            Targets::Classes { labels, n_classes },
            Some(&weights),
            &tree_params,
            &mut rng,
        )
    });
    Ok(ForestModel {
        variant: params.variant,
        n_classes,
        n_features: x.cols(),
        trees: fitted.into_iter().collect::<Result<_>>()?,
        seeds,
        class_weights: params.class_weights.clone(),
    })
}

impl ForestModel {
    /// Mean of the trees' leaf class distributions.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        check_features(x, self.n_features)?;
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        let scale = 1.0 / self.trees.len() as f64;
        for (r, row) in x.iter_rows().enumerate() {
            let acc = out.row_mut(r);
            for tree in &self.trees {
                for (a, p) in acc.iter_mut().zip(tree.predict_row(row)) {
                    *a += p;
                }
            }
            acc.iter_mut().for_each(|a| *a *= scale);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::argmax;

    fn toy() -> (Matrix, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![i as f64, ((i * 7) % 5) as f64, ((i * 3) % 4) as f64])
            .collect();
        let labels = (0..30).map(|i| usize::from(i >= 15)).collect();
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn single_unbootstrapped_tree_is_cart() {
        let (x, y) = toy();
        let params = ForestParams {
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..ForestParams::random_forest(1)
        };
        let forest = forest_fit(&x, &y, 2, &params, 4).unwrap();
        let cart = fit_tree(&x, Targets::Classes { labels: &y, n_classes: 2 }, None, &TreeParams::default(), &mut rng::seeded(0)).unwrap();
        assert_eq!(forest.predict_proba(&x).unwrap(), cart.predict(&x).unwrap());
    }

    #[test]
    fn both_variants_fit_separable_data() {
        let (x, y) = toy();
        for params in [ForestParams::random_forest(25), ForestParams::extra_trees(25)] {
            let f = forest_fit(&x, &y, 2, &params, 8).unwrap();
            let p = f.predict_proba(&x).unwrap();
            for (r, &l) in y.iter().enumerate() {
                assert_eq!(argmax(p.row(r)), l);
            }
            assert_eq!(f, forest_fit(&x, &y, 2, &params, 8).unwrap());
        }
    }

    #[test]
    fn variant_names() {
        assert_eq!("extra_trees".parse::<ForestVariant>().unwrap(), ForestVariant::ExtraTrees);
        assert!(matches!("boosted".parse::<ForestVariant>(), Err(Error::Config(_))));
    }
}
