//! ListNet and LambdaRank: a linear or one-hidden-layer scorer trained by
//! full-batch gradient descent.
//!
//! Inputs are standardized with training-set moments stored in the model.
//! Parameter layout for hidden width h: `W1` (h×12, row-major), `b1` (h),
//! `w2` (h). With h = 0 the parameters are the 12 linear weights.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lambda::{lambdas, ndcg_swap_deltas, pairwise_cost, PairDelta};
use super::{prepare, ModelParams, RankerKind, RankingModel, TrainConfig, TrainingQuery};
use crate::error::{Error, Result};
use crate::features::FEATURE_COUNT;
use crate::letor_io::Dataset;

const D: usize = FEATURE_COUNT;

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralScorer {
    pub mean: [f64; D],
    pub scale: [f64; D],
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl NeuralScorer {
    pub fn param_count(hidden: usize) -> usize {
        if hidden == 0 {
            D
        } else {
            hidden * (D + 2)
        }
    }

    /// Zero linear weights or small random hidden weights.
    pub fn init(queries: &[TrainingQuery], hidden: usize, seed: u64) -> Self {
        let (mean, scale) = moments(queries);
        let mut params = vec![0.0; Self::param_count(hidden)];
        if hidden > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r1 = 1.0 / (D as f64).sqrt();
            let r2 = 1.0 / (hidden as f64).sqrt();
            for w in &mut params[..hidden * D] {
                *w = rng.gen_range(-r1..r1);
            }
            for w in &mut params[hidden * (D + 1)..] {
                *w = rng.gen_range(-r2..r2);
            }
        }
        Self {
            mean,
            scale,
            hidden,
            params,
        }
    }

    fn standardize(&self, x: &[f64; D]) -> [f64; D] {
        let mut z = [0.0; D];
        for f in 0..D {
            z[f] = (x[f] - self.mean[f]) / self.scale[f];
        }
        z
    }

    pub fn score(&self, x: &[f64; D]) -> f64 {
        let z = self.standardize(x);
        if self.hidden == 0 {
            return self.params.iter().zip(&z).map(|(w, v)| w * v).sum();
        }
        let h = self.hidden;
        let (w1, rest) = self.params.split_at(h * D);
        let (b1, w2) = rest.split_at(h);
        (0..h)
            .map(|j| {
                let a: f64 = w1[j * D..(j + 1) * D].iter().zip(&z).map(|(w, v)| w * v).sum();
                w2[j] * (a + b1[j]).tanh()
            })
            .sum()
    }

    /// Adds `ds · ∂s/∂θ` at input `x` into `grad`.
    fn accumulate(&self, x: &[f64; D], ds: f64, grad: &mut [f64]) {
        let z = self.standardize(x);
        if self.hidden == 0 {
            for (g, v) in grad.iter_mut().zip(&z) {
                *g += ds * v;
            }
            return;
        }
        let h = self.hidden;
        let (w1, rest) = self.params.split_at(h * D);
        let (b1, w2) = rest.split_at(h);
        for j in 0..h {
            let a: f64 = w1[j * D..(j + 1) * D].iter().zip(&z).map(|(w, v)| w * v).sum();
            let t = (a + b1[j]).tanh();
            grad[h * (D + 1) + j] += ds * t;
            let back = ds * w2[j] * (1.0 - t * t);
            grad[h * D + j] += back;
            for f in 0..D {
                grad[j * D + f] += back * z[f];
            }
        }
    }

    pub fn scores(&self, q: &TrainingQuery) -> Vec<f64> {
        q.features.iter().map(|x| self.score(x)).collect()
    }
}

fn moments(queries: &[TrainingQuery]) -> ([f64; D], [f64; D]) {
    let mut mean = [0.0; D];
    let mut scale = [1.0; D];
    let n: usize = queries.iter().map(|q| q.len()).sum();
    if n == 0 {
        return (mean, scale);
    }
    for x in queries.iter().flat_map(|q| &q.features) {
        for f in 0..D {
            mean[f] += x[f];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = [0.0; D];
    for x in queries.iter().flat_map(|q| &q.features) {
        for f in 0..D {
            var[f] += (x[f] - mean[f]).powi(2);
        }
    }
    for f in 0..D {
        let sd = (var[f] / n as f64).sqrt();
        scale[f] = if sd > 1e-12 { sd } else { 1.0 };
    }
    (mean, scale)
}

/// Softmax with max-shift.
pub fn top_one_probabilities(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Total ListNet cross-entropy over `queries` and its parameter gradient.
pub fn listnet_objective(scorer: &NeuralScorer, queries: &[TrainingQuery]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; scorer.params.len()];
    let mut loss = 0.0;
    for q in queries {
        let s = scorer.scores(q);
        let target: Vec<f64> = q.labels.iter().map(|&y| f64::from(y)).collect();
        let py = top_one_probabilities(&target);
        let ps = top_one_probabilities(&s);
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss -= py.iter().zip(&s).map(|(p, v)| p * (v - log_z)).sum::<f64>();
        for (i, x) in q.features.iter().enumerate() {
            scorer.accumulate(x, ps[i] - py[i], &mut grad);
        }
    }
    (loss, grad)
}

/// Pair deltas for every query under the scorer's current ranking.
pub fn frozen_pairs(scorer: &NeuralScorer, queries: &[TrainingQuery], k: usize) -> Vec<Vec<PairDelta>> {
    queries
        .iter()
        .map(|q| ndcg_swap_deltas(&scorer.scores(q), &q.doc_ids, &q.labels, k))
        .collect()
}

/// Pairwise lambda cost with fixed deltas and its parameter gradient.
pub fn lambdarank_objective(
    scorer: &NeuralScorer,
    queries: &[TrainingQuery],
    pairs: &[Vec<PairDelta>],
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; scorer.params.len()];
    let mut cost = 0.0;
    for (q, p) in queries.iter().zip(pairs) {
        let s = scorer.scores(q);
        cost += pairwise_cost(&s, p);
        let (lam, _) = lambdas(&s, p);
        for (x, l) in q.features.iter().zip(lam) {
            scorer.accumulate(x, -l, &mut grad);
        }
    }
    (cost, grad)
}

fn step(scorer: &mut NeuralScorer, grad: &[f64], lr: f64) {
    for (w, g) in scorer.params.iter_mut().zip(grad) {
        *w -= lr * g;
    }
}

/// ListNet with its per-epoch training loss.
pub fn train_listnet_traced(dataset: &Dataset, cfg: &TrainConfig) -> Result<(RankingModel, Vec<f64>)> {
    let kind = RankerKind::ListNet;
    let (mask, queries) = prepare(dataset, cfg, kind)?;
    let lr = cfg.learning_rate_for(kind);
    let mut scorer = NeuralScorer::init(&queries, cfg.hidden, cfg.seed);
    let mut history = Vec::new();
    for epoch in 1..=cfg.rounds_for(kind) {
        let (loss, grad) = listnet_objective(&scorer, &queries);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        history.push(loss);
        step(&mut scorer, &grad, lr);
        if epoch % 100 == 0 {
            debug!("listnet epoch {epoch}: loss {loss:.6}");
        }
    }
    Ok((finish(kind, mask, cfg, scorer), history))
}

pub fn train_listnet(dataset: &Dataset, cfg: &TrainConfig) -> Result<RankingModel> {
    train_listnet_traced(dataset, cfg).map(|(m, _)| m)
}

/// LambdaRank with its per-epoch pairwise cost.
pub fn train_lambdarank_traced(dataset: &Dataset, cfg: &TrainConfig) -> Result<(RankingModel, Vec<f64>)> {
    let kind = RankerKind::LambdaRank;
    let (mask, queries) = prepare(dataset, cfg, kind)?;
    let lr = cfg.learning_rate_for(kind);
    let mut scorer = NeuralScorer::init(&queries, cfg.hidden, cfg.seed);
    let mut history = Vec::new();
    for epoch in 1..=cfg.rounds_for(kind) {
        let pairs = frozen_pairs(&scorer, &queries, cfg.lambda_cutoff);
        let (cost, grad) = lambdarank_objective(&scorer, &queries, &pairs);
        if !cost.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        history.push(cost);
        step(&mut scorer, &grad, lr);
        if epoch % 100 == 0 {
            debug!("lambdarank epoch {epoch}: cost {cost:.6}");
        }
    }
    Ok((finish(kind, mask, cfg, scorer), history))
}

pub fn train_lambdarank(dataset: &Dataset, cfg: &TrainConfig) -> Result<RankingModel> {
    train_lambdarank_traced(dataset, cfg).map(|(m, _)| m)
}

fn finish(
    kind: RankerKind,
    mask: crate::features::FeatureMask,
    cfg: &TrainConfig,
    scorer: NeuralScorer,
) -> RankingModel {
    RankingModel {
        kind,
        mask,
        meta: cfg.meta(kind),
        params: ModelParams::Neural(scorer),
    }
}
