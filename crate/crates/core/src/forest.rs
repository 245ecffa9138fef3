//! From-scratch random forest: CART trees with Gini splits, bootstrap
//! sampling, and sqrt(p) feature subsampling, fully deterministic per seed.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{derive_seed, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    /// None = grow to purity.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// None = floor(sqrt(p)).
    pub mtry: Option<usize>,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        ForestHyperparams { n_trees: 200, max_depth: None, min_leaf: 1, mtry: None }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        /// Majority class at this leaf, ties to smaller id.
        class: usize,
    },
    Split {
        feature: usize,
        /// Strictly between two training values of the split feature.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class } => return *class,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Predict with one feature's value replaced, without copying the row.
    pub fn predict_row_with_override(&self, row: &[f64], f: usize, value: f64) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class } => return *class,
                Node::Split { feature, threshold, left, right } => {
                    let v = if *feature == f { value } else { row[*feature] };
                    i = if v <= *threshold { *left } else { *right };
                }
            }
        }
    }

    fn collect_features(&self, out: &mut Vec<bool>) {
        for n in &self.nodes {
            if let Node::Split { feature, .. } = n {
                out[*feature] = true;
            }
        }
    }

    pub fn uses_feature(&self, f: usize) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::Split { feature, .. } if *feature == f))
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub n_features: usize,
    pub hyperparams: ForestHyperparams,
    pub seed: u64,
    /// True when the training labels held a single class.
    pub degenerate: bool,
}

impl ForestModel {
    /// Majority vote over trees, ties to the smaller class id.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1;
        }
        argmax_tie_smallest(&votes)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        (0..x.nrows()).map(|i| self.predict_row(x.row(i).as_slice().unwrap())).collect()
    }

    pub fn accuracy(&self, x: ArrayView2<f64>, y: &[usize]) -> f64 {
        let pred = self.predict(x);
        pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64
    }

    /// Features appearing in at least one split, sorted.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used = vec![false; self.n_features];
        for t in &self.trees {
            t.collect_features(&mut used);
        }
        used.iter().enumerate().filter(|(_, &u)| u).map(|(i, _)| i).collect()
    }
}

pub fn argmax_tie_smallest(votes: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct TreeBuilder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    n_classes: usize,
    mtry: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &r in rows {
            counts[self.y[r]] += 1;
        }
        self.nodes.push(Node::Leaf { class: argmax_tie_smallest(&counts) });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &r in &rows {
            counts[self.y[r]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let too_deep = self.max_depth.map(|d| depth >= d).unwrap_or(false);
        if pure || too_deep || rows.len() < 2 * self.min_leaf {
            return self.leaf(&rows);
        }

        let p = self.x.ncols();
        let mut candidates: Vec<usize> = (0..p).collect();
        candidates.shuffle(rng);
        candidates.truncate(self.mtry);
        candidates.sort_unstable(); // feature scan order independent of shuffle tail

        let parent_gini = gini(&counts, rows.len());
        let mut best: Option<(f64, usize, f64)> = None; // (impurity, feature, threshold)
        let mut sortable: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for &f in &candidates {
            sortable.clear();
            for &r in &rows {
                sortable.push((self.x[[r, f]], self.y[r]));
            }
            sortable.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.clone();
            let n = rows.len();
            for i in 0..n - 1 {
                left[sortable[i].1] += 1;
                right[sortable[i].1] -= 1;
                let nl = i + 1;
                let nr = n - nl;
                if sortable[i].0 == sortable[i + 1].0 {
                    continue; // no threshold strictly between equal values
                }
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let w = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                if best.map(|(b, _, _)| w < b - 1e-15).unwrap_or(w < parent_gini - 1e-15) {
                    let threshold = 0.5 * (sortable[i].0 + sortable[i + 1].0);
                    best = Some((w, f, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return self.leaf(&rows);
        };
        let (lrows, rrows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| self.x[[r, feature]] <= threshold);

        self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
        let id = self.nodes.len() - 1;
        let left = self.grow(lrows, depth + 1, rng);
        let right = self.grow(rrows, depth + 1, rng);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[id] {
            *l = left;
            *r = right;
        }
        id
    }
}

/// Train a forest: `n_trees` CART trees on bootstrap samples (with
/// replacement, size n), Gini splits over floor(sqrt(p)) candidate features
/// per node. Deterministic given seed. Single-class labels yield a flagged
/// constant predictor.
pub fn train_forest<'a>(
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    n_classes: usize,
    hp: &ForestHyperparams,
    seed: u64,
) -> Result<ForestModel> {
    let n = x.nrows();
    if n == 0 || n != y.len() {
        return Err(Error::InvalidArgument(format!("rows {} vs labels {}", n, y.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite feature value".into()));
    }
    let p = x.ncols();
    let mtry = hp.mtry.unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1)).min(p);
    let degenerate = y.iter().collect::<std::collections::HashSet<_>>().len() < 2;

    let trees: Vec<Tree> = (0..hp.n_trees)
        .map(|t| {
            let mut rng = seeded_rng(derive_seed(seed, &[0x7265_65, t as u64]));
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x,
                y,
                n_classes,
                mtry,
                min_leaf: hp.min_leaf.max(1),
                max_depth: hp.max_depth,
                nodes: Vec::new(),
            };
            builder.grow(rows, 0, &mut rng);
            // root is pushed after its subtrees only when it is a split; for
            // the arena layout the entry point must be node 0, so grow()
            // pushes split nodes before recursing.
            Tree { nodes: builder.nodes }
        })
        .collect();

    Ok(ForestModel { trees, n_classes, n_features: p, hyperparams: *hp, seed, degenerate })
}
