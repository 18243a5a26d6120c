//! Plain-text model files.
//!
//! ```text
//! iotrisk-model 1
//! classes Low Medium High Critical
//! fingerprint <hex>
//! model gbdt
//! ...
//! end
//! ```
//!
//! Trees are written in preorder, one node per line: `S <feature> <threshold>`
//! or `L <values...>`. Floats use Rust's shortest round-trip form.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{AdaboostModel, ClassWeights, DecisionTree, ForestModel, ForestVariant, GbdtModel, Model, Node};
use crate::error::{Error, Result};
use crate::nvd::RiskClass;

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "iotrisk-model";

fn class_name(i: usize) -> String {
    RiskClass::from_ordinal(i).map_or_else(|| format!("class{i}"), |c| c.name().to_string())
}

fn floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

fn write_tree(out: &mut String, tree: &DecisionTree) {
    let _ = writeln!(out, "tree {} {} {}", tree.nodes().len(), tree.n_features(), tree.n_outputs());
    for node in tree.nodes() {
        let _ = match node {
            Node::Split { feature, threshold, .. } => writeln!(out, "S {feature} {threshold:?}"),
            Node::Leaf { value } => writeln!(out, "L {}", floats(value)),
        };
    }
}

fn write_body(out: &mut String, model: &Model) {
    match model {
        Model::Gbdt(m) => {
            let _ = writeln!(out, "model gbdt");
            let _ = writeln!(out, "n_classes {}", m.n_classes);
            let _ = writeln!(out, "n_features {}", m.n_features);
            let _ = writeln!(out, "learning_rate {:?}", m.learning_rate);
            let _ = writeln!(out, "init {}", floats(&m.init));
            let _ = writeln!(out, "train_loss {}", floats(&m.train_loss));
            let _ = writeln!(out, "stages {}", m.stages.len());
            for stage in &m.stages {
                for tree in stage {
                    write_tree(out, tree);
                }
            }
        }
        Model::Forest(m) => {
            let _ = writeln!(out, "model forest");
            let _ = writeln!(out, "variant {}", m.variant);
            let _ = writeln!(out, "n_classes {}", m.n_classes);
            let _ = writeln!(out, "n_features {}", m.n_features);
            let _ = match &m.class_weights {
                Some(cw) => writeln!(out, "class_weights {}", floats(&cw.0)),
                None => writeln!(out, "class_weights none"),
            };
            let _ = writeln!(out, "trees {}", m.trees.len());
            for (tree, seed) in m.trees.iter().zip(&m.seeds) {
                let _ = writeln!(out, "seed {seed}");
                write_tree(out, tree);
            }
        }
        Model::Adaboost(m) => {
            let _ = writeln!(out, "model adaboost");
            let _ = writeln!(out, "n_classes {}", m.n_classes);
            let _ = writeln!(out, "n_features {}", m.n_features);
            let _ = writeln!(out, "learners {}", m.learners.len());
            for ((tree, alpha), err) in m.learners.iter().zip(&m.alphas).zip(&m.errors) {
                let _ = writeln!(out, "alpha {alpha:?} {err:?}");
                write_tree(out, tree);
            }
        }
        Model::Voting(members) => {
            let _ = writeln!(out, "model voting");
            let _ = writeln!(out, "members {}", members.len());
            for m in members {
                write_body(out, m);
            }
        }
    }
}

/// Serializes `model` with its encoder fingerprint.
pub fn write_model(model: &Model, fingerprint: &str) -> String {
    use super::ProbabilisticClassifier;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {MODEL_FORMAT_VERSION}");
    let classes: Vec<String> = (0..model.n_classes()).map(class_name).collect();
    let _ = writeln!(out, "classes {}", classes.join(" "));
    let _ = writeln!(out, "fingerprint {fingerprint}");
    write_body(&mut out, model);
    let _ = writeln!(out, "end");
    out
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Reader<'a> {
    fn err(line: usize, msg: impl std::fmt::Display) -> Error {
        Error::format(format!("model file line {}: {msg}", line + 1))
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        match self.lines.next() {
            Some((i, l)) => Ok((i, l.split_whitespace().collect())),
            None => Err(Error::format("model file ends early")),
        }
    }

    /// Reads `key args...` and returns the arguments.
    fn field(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (i, toks) = self.next()?;
        if toks.first() != Some(&key) {
            return Err(Self::err(i, format!("expected `{key}`")));
        }
        Ok((i, toks[1..].to_vec()))
    }

    fn one<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (i, args) = self.field(key)?;
        match args.as_slice() {
            [v] => v.parse().map_err(|_| Self::err(i, format!("bad value for `{key}`"))),
            _ => Err(Self::err(i, format!("`{key}` takes one value"))),
        }
    }

    fn floats(i: usize, args: &[&str]) -> Result<Vec<f64>> {
        args.iter()
            .map(|a| a.parse::<f64>().map_err(|_| Self::err(i, format!("bad number `{a}`"))))
            .collect()
    }

    fn float_list(&mut self, key: &str) -> Result<Vec<f64>> {
        let (i, args) = self.field(key)?;
        Self::floats(i, &args)
    }

    fn tree(&mut self) -> Result<DecisionTree> {
        let (i, args) = self.field("tree")?;
        let nums: Vec<usize> = args
            .iter()
            .map(|a| a.parse().map_err(|_| Self::err(i, "bad tree header")))
            .collect::<Result<_>>()?;
        let [count, n_features, n_outputs] = nums[..] else {
            return Err(Self::err(i, "tree header needs node count, features, outputs"));
        };
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let (j, toks) = self.next()?;
            nodes.push(match toks.as_slice() {
                ["S", f, t] => Node::Split {
                    feature: f.parse().map_err(|_| Self::err(j, "bad feature index"))?,
                    threshold: t.parse().map_err(|_| Self::err(j, "bad threshold"))?,
                    left: usize::MAX,
                    right: usize::MAX,
                },
                ["L", vals @ ..] => Node::Leaf {
                    value: Self::floats(j, vals)?,
                },
                _ => return Err(Self::err(j, "expected a tree node")),
            });
        }
        link(&mut nodes, 0).map_err(|_| Self::err(i, "tree nodes do not form a preorder tree"))?;
        DecisionTree::from_nodes(nodes, n_features, n_outputs)
    }

    fn model(&mut self) -> Result<Model> {
        let (i, args) = self.field("model")?;
        match args.as_slice() {
            ["gbdt"] => {
                let n_classes = self.one("n_classes")?;
                let n_features = self.one("n_features")?;
                let learning_rate = self.one("learning_rate")?;
                let init = self.float_list("init")?;
                let train_loss = self.float_list("train_loss")?;
                let n_stages: usize = self.one("stages")?;
                let mut stages = Vec::with_capacity(n_stages);
                for _ in 0..n_stages {
                    stages.push((0..n_classes).map(|_| self.tree()).collect::<Result<Vec<_>>>()?);
                }
                Ok(Model::Gbdt(GbdtModel {
                    n_classes,
                    n_features,
                    learning_rate,
                    init,
                    stages,
                    train_loss,
                }))
            }
            ["forest"] => {
                let variant: ForestVariant = self.one("variant")?;
                let n_classes = self.one("n_classes")?;
                let n_features = self.one("n_features")?;
                let (j, cw) = self.field("class_weights")?;
                let class_weights = match cw.as_slice() {
                    ["none"] => None,
                    vals => Some(ClassWeights(Self::floats(j, vals)?)),
                };
                let n_trees: usize = self.one("trees")?;
                let (mut trees, mut seeds) = (Vec::new(), Vec::new());
                for _ in 0..n_trees {
                    seeds.push(self.one("seed")?);
                    trees.push(self.tree()?);
                }
                Ok(Model::Forest(ForestModel {
                    variant,
                    n_classes,
                    n_features,
                    trees,
                    seeds,
                    class_weights,
                }))
            }
            ["adaboost"] => {
                let n_classes = self.one("n_classes")?;
                let n_features = self.one("n_features")?;
                let n: usize = self.one("learners")?;
                let mut m = AdaboostModel {
                    n_classes,
                    n_features,
                    learners: Vec::new(),
                    alphas: Vec::new(),
                    errors: Vec::new(),
                };
                for _ in 0..n {
                    let (j, args) = self.field("alpha")?;
                    let [alpha, err] = Self::floats(j, &args)?[..] else {
                        return Err(Self::err(j, "alpha line needs weight and error"));
                    };
                    m.alphas.push(alpha);
                    m.errors.push(err);
                    m.learners.push(self.tree()?);
                }
                Ok(Model::Adaboost(m))
            }
            ["voting"] => {
                let n: usize = self.one("members")?;
                Ok(Model::Voting((0..n).map(|_| self.model()).collect::<Result<_>>()?))
            }
            _ => Err(Self::err(i, "unknown model kind")),
        }
    }
}

/// Fills split links of preorder nodes; returns the index after the subtree.
fn link(nodes: &mut [Node], i: usize) -> std::result::Result<usize, ()> {
    match nodes.get(i).ok_or(())? {
        Node::Leaf { .. } => Ok(i + 1),
        Node::Split { .. } => {
            let right = link(nodes, i + 1)?;
            let end = link(nodes, right)?;
            if let Node::Split { left, right: r, .. } = &mut nodes[i] {
                *left = i + 1;
                *r = right;
            }
            Ok(end)
        }
    }
    .and_then(|end| if i == 0 && end != nodes.len() { Err(()) } else { Ok(end) })
}

/// Parses a model file. With `expected` set, the stored encoder fingerprint
/// must match it.
pub fn read_model(text: &str, expected: Option<&str>) -> Result<(Model, String)> {
    let mut r = Reader {
        lines: text.lines().enumerate().peekable(),
    };
    let (i, head) = r.next()?;
    match head.as_slice() {
        [MAGIC, v] if *v == MODEL_FORMAT_VERSION.to_string() => {}
        [MAGIC, v] => return Err(Reader::err(i, format!("unsupported model format version {v}"))),
        _ => return Err(Reader::err(i, "not a model file")),
    }
    let (_, classes) = r.field("classes")?;
    let fingerprint: String = r.one("fingerprint")?;
    if let Some(want) = expected {
        if want != fingerprint {
            return Err(Error::Fingerprint {
                expected: want.to_string(),
                actual: fingerprint,
            });
        }
    }
    let model = r.model()?;
    use super::ProbabilisticClassifier;
    let names: Vec<String> = (0..model.n_classes()).map(class_name).collect();
    if classes != names {
        return Err(Error::format("class ordering in the header does not match the model"));
    }
    r.field("end")?;
    if let Some((j, _)) = r.lines.peek() {
        return Err(Reader::err(*j, "trailing content after `end`"));
    }
    Ok((model, fingerprint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{ModelFamily, ModelSpec, ProbabilisticClassifier};
    use crate::matrix::Matrix;

    fn data() -> (Matrix, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..24).map(|i| vec![i as f64 * 0.37, ((i * 5) % 7) as f64]).collect();
        let labels = (0..24).map(|i| (i / 3) % 4).collect();
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn every_family_round_trips() {
        let (x, y) = data();
        for family in ModelFamily::ALL {
            let mut spec = ModelSpec::desk(family);
            spec.set("n_estimators", "5").unwrap();
            let model = spec.fit(&x, &y, 4, 3).unwrap();
            let text = write_model(&model, "abc123");
            let (back, fp) = read_model(&text, Some("abc123")).unwrap();
            assert_eq!(fp, "abc123");
            assert_eq!(back, model);
            assert_eq!(write_model(&back, "abc123"), text);
            assert_eq!(back.predict_proba(&x).unwrap(), model.predict_proba(&x).unwrap());
        }
    }

    #[test]
    fn rejects_wrong_fingerprint_and_garbage() {
        let (x, y) = data();
        let mut spec = ModelSpec::desk(ModelFamily::Gbdt);
        spec.set("n_estimators", "2").unwrap();
        let text = write_model(&spec.fit(&x, &y, 4, 0).unwrap(), "aaaa");
        assert!(matches!(read_model(&text, Some("bbbb")), Err(Error::Fingerprint { .. })));
        assert!(read_model(&text.replace("iotrisk-model 1", "iotrisk-model 9"), None).is_err());
        assert!(read_model(&text.replace("\nend\n", "\n"), None).is_err());
        assert!(read_model("hello", None).is_err());
    }
}
