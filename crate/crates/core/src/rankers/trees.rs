//! Regression trees, MART and LambdaMART.

use log::debug;

use super::lambda::{lambdas, ndcg_swap_deltas};
use super::{prepare, ModelParams, RankerKind, RankingModel, TrainConfig, TrainingQuery};
use crate::error::Result;
use crate::features::FEATURE_COUNT;
use crate::letor_io::Dataset;
use crate::metrics::ndcg_at_k;

const MIN_RELATIVE_GAIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn constant(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Index of the leaf node reached by `x`.
    pub fn leaf_index(&self, x: &[f64; FEATURE_COUNT]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn set_leaf(&mut self, index: usize, value: f64) {
        if let Node::Leaf { value: v } = &mut self.nodes[index] {
            *v = value;
        }
    }

    pub fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split(
    x: &[[f64; FEATURE_COUNT]],
    t: &[f64],
    samples: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Candidate> {
    let n = samples.len();
    if n < 2 * min_leaf {
        return None;
    }
    let total: f64 = samples.iter().map(|&i| t[i]).sum();
    let sum_sq: f64 = samples.iter().map(|&i| t[i] * t[i]).sum();
    let base = total * total / n as f64;
    let mut best: Option<Candidate> = None;
    let mut order = samples.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left = 0.0;
        for split in 1..n {
            left += t[order[split - 1]];
            let (lo, hi) = (x[order[split - 1]][f], x[order[split]][f]);
            if lo == hi || split < min_leaf || n - split < min_leaf {
                continue;
            }
            let right = total - left;
            let gain = left * left / split as f64 + right * right / (n - split) as f64 - base;
            if best.is_none_or(|b| gain > b.gain) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best.filter(|b| b.gain > MIN_RELATIVE_GAIN * sum_sq.max(f64::MIN_POSITIVE))
}

fn mean(t: &[f64], samples: &[usize]) -> f64 {
    samples.iter().map(|&i| t[i]).sum::<f64>() / samples.len() as f64
}

/// Best-first least-squares tree with at most `max_leaves` leaves; leaf
/// values are target means.
pub fn fit_tree(
    x: &[[f64; FEATURE_COUNT]],
    targets: &[f64],
    features: &[usize],
    max_leaves: usize,
    min_leaf: usize,
) -> RegressionTree {
    let all: Vec<usize> = (0..x.len()).collect();
    let mut tree = RegressionTree::constant(mean(targets, &all));
    let mut open: Vec<(usize, Vec<usize>, Option<Candidate>)> =
        vec![(0, all.clone(), best_split(x, targets, &all, features, min_leaf))];
    while tree.leaf_count() < max_leaves {
        let mut pick: Option<usize> = None;
        for (k, (_, _, c)) in open.iter().enumerate() {
            if let Some(c) = c {
                if pick.is_none_or(|p| c.gain > open[p].2.unwrap().gain) {
                    pick = Some(k);
                }
            }
        }
        let Some(k) = pick else { break };
        let (node, samples, cand) = open.swap_remove(k);
        let cand = cand.unwrap();
        let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&i| x[i][cand.feature] <= cand.threshold);
        let li = tree.nodes.len();
        tree.nodes.push(Node::Leaf {
            value: mean(targets, &l),
        });
        tree.nodes.push(Node::Leaf {
            value: mean(targets, &r),
        });
        tree.nodes[node] = Node::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: li,
            right: li + 1,
        };
        let lc = best_split(x, targets, &l, features, min_leaf);
        let rc = best_split(x, targets, &r, features, min_leaf);
        open.push((li, l, lc));
        open.push((li + 1, r, rc));
        // swap_remove perturbs order; keep ties resolved by node index
        open.sort_by_key(|e| e.0);
    }
    tree
}

/// `base + Σ trees`; shrinkage is already folded into the leaf values.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub base: f64,
    pub trees: Vec<RegressionTree>,
}

impl TreeEnsemble {
    pub fn score(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        self.base + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

fn flatten(queries: &[TrainingQuery]) -> (Vec<[f64; FEATURE_COUNT]>, Vec<f64>) {
    let x = queries.iter().flat_map(|q| q.features.iter().copied()).collect();
    let y = queries
        .iter()
        .flat_map(|q| q.labels.iter().map(|&l| f64::from(l)))
        .collect();
    (x, y)
}

/// MART with the training MSE after each stage.
pub fn train_mart_traced(dataset: &Dataset, cfg: &TrainConfig) -> Result<(RankingModel, Vec<f64>)> {
    let kind = RankerKind::Mart;
    let (mask, queries) = prepare(dataset, cfg, kind)?;
    let lr = cfg.learning_rate_for(kind);
    let features = mask.active_indices();
    let (x, y) = flatten(&queries);
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let mut f = vec![base; y.len()];
    let mse = |f: &[f64]| f.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
    let mut history = vec![mse(&f)];
    let mut trees = Vec::new();
    for stage in 1..=cfg.rounds_for(kind) {
        let residual: Vec<f64> = y.iter().zip(&f).map(|(a, b)| a - b).collect();
        let mut tree = fit_tree(&x, &residual, &features, cfg.leaves, cfg.min_leaf_support);
        tree.scale_leaves(lr);
        for (fi, xi) in f.iter_mut().zip(&x) {
            *fi += tree.predict(xi);
        }
        trees.push(tree);
        history.push(mse(&f));
        if stage % 50 == 0 {
            debug!("mart stage {stage}: mse {:.6e}", history[stage]);
        }
    }
    let model = RankingModel {
        kind,
        mask,
        meta: cfg.meta(kind),
        params: ModelParams::Trees(TreeEnsemble { base, trees }),
    };
    Ok((model, history))
}

pub fn train_mart(dataset: &Dataset, cfg: &TrainConfig) -> Result<RankingModel> {
    train_mart_traced(dataset, cfg).map(|(m, _)| m)
}

/// Newton leaf values `Σλ / Σw` over the samples reaching each leaf.
pub fn newton_leaf_values(
    tree: &RegressionTree,
    x: &[[f64; FEATURE_COUNT]],
    lambda: &[f64],
    weight: &[f64],
) -> Vec<(usize, f64)> {
    let mut num = vec![0.0; tree.nodes.len()];
    let mut den = vec![0.0; tree.nodes.len()];
    for ((xi, l), w) in x.iter().zip(lambda).zip(weight) {
        let leaf = tree.leaf_index(xi);
        num[leaf] += l;
        den[leaf] += w;
    }
    tree.nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n, Node::Leaf { .. }))
        .map(|(i, _)| (i, if den[i] > 0.0 { num[i] / den[i] } else { 0.0 }))
        .collect()
}

/// LambdaMART with mean training NDCG@cutoff after each stage.
pub fn train_lambdamart_traced(dataset: &Dataset, cfg: &TrainConfig) -> Result<(RankingModel, Vec<f64>)> {
    let kind = RankerKind::LambdaMart;
    let (mask, queries) = prepare(dataset, cfg, kind)?;
    let lr = cfg.learning_rate_for(kind);
    let k = cfg.lambda_cutoff;
    let features = mask.active_indices();
    let (x, _) = flatten(&queries);
    let mut f = vec![0.0; x.len()];
    let mut trees = Vec::new();
    let mut history = Vec::new();
    let offsets: Vec<usize> = queries
        .iter()
        .scan(0, |acc, q| {
            let o = *acc;
            *acc += q.len();
            Some(o)
        })
        .collect();
    for stage in 1..=cfg.rounds_for(kind) {
        let mut lam = Vec::with_capacity(x.len());
        let mut w = Vec::with_capacity(x.len());
        for (q, &o) in queries.iter().zip(&offsets) {
            let s = &f[o..o + q.len()];
            let pairs = ndcg_swap_deltas(s, &q.doc_ids, &q.labels, k);
            let (l, h) = lambdas(s, &pairs);
            lam.extend(l);
            w.extend(h);
        }
        let mut tree = fit_tree(&x, &lam, &features, cfg.leaves, cfg.min_leaf_support);
        for (leaf, v) in newton_leaf_values(&tree, &x, &lam, &w) {
            tree.set_leaf(leaf, lr * v);
        }
        for (fi, xi) in f.iter_mut().zip(&x) {
            *fi += tree.predict(xi);
        }
        trees.push(tree);
        let ndcg = queries
            .iter()
            .zip(&offsets)
            .map(|(q, &o)| ndcg_at_k(&q.labels_in_rank_order(&f[o..o + q.len()]), k))
            .sum::<f64>()
            / queries.len() as f64;
        history.push(ndcg);
        if stage % 50 == 0 {
            debug!("lambdamart stage {stage}: ndcg@{k} {ndcg:.6}");
        }
    }
    let model = RankingModel {
        kind,
        mask,
        meta: cfg.meta(kind),
        params: ModelParams::Trees(TreeEnsemble { base: 0.0, trees }),
    };
    Ok((model, history))
}

pub fn train_lambdamart(dataset: &Dataset, cfg: &TrainConfig) -> Result<RankingModel> {
    train_lambdamart_traced(dataset, cfg).map(|(m, _)| m)
}
