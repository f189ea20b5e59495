//! CART regression trees and a bagged random forest.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_MAX_DEPTH: usize = 10;
pub const DEFAULT_CV_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        let ts = TrainingSet {
            features,
            labels,
            weights: None,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.weights = Some(weights);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::LengthMismatch {
                expected: self.features.len(),
                actual: self.labels.len(),
            });
        }
        let d = self.dim();
        if let Some(row) = self.features.iter().find(|r| r.len() != d) {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        if let Some(w) = &self.weights {
            if w.len() != self.labels.len() {
                return Err(Error::LengthMismatch {
                    expected: self.labels.len(),
                    actual: w.len(),
                });
            }
            if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(Error::invalid("weights must be finite and non-negative"));
            }
        }
        if self.labels.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("labels must be finite"));
        }
        Ok(())
    }

    fn subset(&self, idx: &[usize]) -> TrainingSet {
        TrainingSet {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            weights: self
                .weights
                .as_ref()
                .map(|w| idx.iter().map(|&i| w[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub seed: u64,
    /// Train each tree on a bootstrap resample.
    pub bootstrap: bool,
    /// Features tried per split; `None` means `ceil(dim / 3)`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: DEFAULT_TREES,
            max_depth: DEFAULT_MAX_DEPTH,
            min_samples_split: 2,
            seed: 0,
            bootstrap: true,
            max_features: None,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be >= 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth must be >= 1"));
        }
        if self.max_features == Some(0) {
            return Err(Error::invalid("max_features must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary regression tree; `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            Node::Split { .. } => None,
        })
    }
}

struct TreeBuilder<'a> {
    data: &'a TrainingSet,
    max_depth: usize,
    min_split: usize,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl TreeBuilder<'_> {
    fn leaf_value(&self, idx: &[usize]) -> f64 {
        let (mut sw, mut swy) = (0.0, 0.0);
        for &i in idx {
            let w = self.data.weight(i);
            sw += w;
            swy += w * self.data.labels[i];
        }
        if sw > 0.0 {
            // Clamp guards the label range against rounding in the weighted mean.
            let (lo, hi) = idx
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(self.data.labels[i]), hi.max(self.data.labels[i]))
                });
            (swy / sw).clamp(lo, hi)
        } else {
            idx.iter().map(|&i| self.data.labels[i]).sum::<f64>() / idx.len() as f64
        }
    }

    fn best_split_on(&self, idx: &[usize], feature: usize) -> Option<BestSplit> {
        let mut order: Vec<usize> = idx.to_vec();
        let x = |i: usize| self.data.features[i][feature];
        order.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));
        let (mut tw, mut twy, mut twy2) = (0.0, 0.0, 0.0);
        for &i in &order {
            let (w, y) = (self.data.weight(i), self.data.labels[i]);
            tw += w;
            twy += w * y;
            twy2 += w * y * y;
        }
        let (mut lw, mut lwy, mut lwy2) = (0.0, 0.0, 0.0);
        let mut best: Option<BestSplit> = None;
        for k in 0..order.len() - 1 {
            let i = order[k];
            let (w, y) = (self.data.weight(i), self.data.labels[i]);
            lw += w;
            lwy += w * y;
            lwy2 += w * y * y;
            let (a, b) = (x(i), x(order[k + 1]));
            if a == b {
                continue;
            }
            let rw = tw - lw;
            let sse =
                |sw: f64, swy: f64, swy2: f64| if sw > 0.0 { swy2 - swy * swy / sw } else { 0.0 };
            let score = sse(lw, lwy, lwy2) + sse(rw, twy - lwy, twy2 - lwy2);
            if best.as_ref().is_none_or(|bs| score < bs.score) {
                best = Some(BestSplit {
                    feature,
                    threshold: a + (b - a) / 2.0,
                    score,
                });
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let value = self.leaf_value(&idx);
        self.nodes.push(Node::Leaf { value });

        let first = self.data.labels[idx[0]];
        let pure = idx.iter().all(|&i| self.data.labels[i] == first);
        if depth >= self.max_depth || idx.len() < self.min_split || pure {
            return at;
        }

        let mut features: Vec<usize> = (0..self.data.dim()).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<BestSplit> = None;
        for (tried, &f) in features.iter().enumerate() {
            // Keep scanning past the subsample only while no valid split exists.
            if tried >= self.mtry && best.is_some() {
                break;
            }
            if let Some(s) = self.best_split_on(&idx, f) {
                if best.as_ref().is_none_or(|b| s.score < b.score) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.data.features[i][split.feature] <= split.threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

fn fit_tree(data: &TrainingSet, config: &ForestConfig, seed: u64) -> RegressionTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = data.len();
    let idx: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let dim = data.dim().max(1);
    let mtry = config.max_features.unwrap_or(dim.div_ceil(3)).clamp(1, dim);
    let mut b = TreeBuilder {
        data,
        max_depth: config.max_depth,
        min_split: config.min_samples_split.max(2),
        mtry,
        rng,
        nodes: Vec::new(),
    };
    b.build(idx, 0);
    RegressionTree { nodes: b.nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub config: ForestConfig,
    pub dim: usize,
    pub label_min: f64,
    pub label_max: f64,
}

/// Bagged CART forest minimizing weighted squared error. Trees are trained in
/// parallel from independent seeded streams.
pub fn forest_fit(data: &TrainingSet, config: &ForestConfig) -> Result<ForestModel> {
    config.validate()?;
    data.validate()?;
    if data.len() < 2 {
        return Err(Error::invalid(format!(
            "forest needs at least 2 training rows, got {}",
            data.len()
        )));
    }
    let trees: Vec<RegressionTree> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| fit_tree(data, config, derive_seed(config.seed, t as u64)))
        .collect();
    let (label_min, label_max) = data
        .labels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
    Ok(ForestModel {
        trees,
        config: *config,
        dim: data.dim(),
        label_min,
        label_max,
    })
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok((sum / self.trees.len() as f64).clamp(self.label_min, self.label_max))
    }
}

pub fn forest_predict(model: &ForestModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

/// Mean held-out MSE over a seeded `folds`-way partition.
pub fn kfold_cv(data: &TrainingSet, folds: usize, config: &ForestConfig) -> Result<f64> {
    data.validate()?;
    if folds < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    if data.len() < folds {
        return Err(Error::invalid(format!(
            "{} rows cannot fill {folds} folds",
            data.len()
        )));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
        config.seed,
        u64::MAX,
    )));
    let mut total = 0.0;
    for f in 0..folds {
        let (mut test, mut train) = (Vec::new(), Vec::new());
        for (pos, &i) in idx.iter().enumerate() {
            if pos % folds == f {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        let model = forest_fit(&data.subset(&train), config)?;
        let mut sse = 0.0;
        for &i in &test {
            sse += (model.predict(&data.features[i])? - data.labels[i]).powi(2);
        }
        let mse = sse / test.len() as f64;
        total += mse;
    }
    Ok(total / folds as f64)
}
