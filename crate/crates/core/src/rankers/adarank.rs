//! AdaRank over single-feature weak rankers.

use log::debug;

use super::{prepare, ModelParams, RankerKind, RankingModel, TrainConfig, TrainingQuery};
use crate::error::Result;
use crate::features::FEATURE_COUNT;
use crate::letor_io::Dataset;
use crate::metrics::Metric;

const ALPHA_FLOOR: f64 = 1e-12;

/// Scores `sign · x[feature]` (0-based feature index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakRanker {
    pub feature: usize,
    pub sign: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureEnsemble {
    pub rankers: Vec<WeakRanker>,
}

impl FeatureEnsemble {
    pub fn score(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        self.rankers.iter().map(|r| r.alpha * r.sign * x[r.feature]).sum()
    }
}

fn evaluate(q: &TrainingQuery, scores: &[f64], metric: Metric) -> f64 {
    metric.evaluate(&q.labels_in_rank_order(scores), 1)
}

/// Per-query metric of every candidate weak ranker `(feature, sign)`.
pub fn weak_ranker_table(queries: &[TrainingQuery], active: &[usize], metric: Metric) -> Vec<(usize, f64, Vec<f64>)> {
    let mut table = Vec::new();
    for &f in active {
        for sign in [1.0, -1.0] {
            let perf = queries
                .iter()
                .map(|q| {
                    let s: Vec<f64> = q.features.iter().map(|x| sign * x[f]).collect();
                    evaluate(q, &s, metric)
                })
                .collect();
            table.push((f, sign, perf));
        }
    }
    table
}

pub fn train_adarank(dataset: &Dataset, cfg: &TrainConfig) -> Result<RankingModel> {
    let kind = RankerKind::AdaRank;
    let (mask, queries) = prepare(dataset, cfg, kind)?;
    let metric = cfg.metric;
    let table = weak_ranker_table(&queries, &mask.active_indices(), metric);
    let n = queries.len() as f64;
    let mut weights = vec![1.0 / n; queries.len()];
    let mut ensemble = FeatureEnsemble::default();
    let mut best_mean = f64::NEG_INFINITY;

    for round in 1..=cfg.rounds_for(kind) {
        let mut pick: Option<(usize, f64)> = None;
        for (idx, (_, _, perf)) in table.iter().enumerate() {
            let w: f64 = perf.iter().zip(&weights).map(|(e, p)| e * p).sum();
            if pick.is_none_or(|(_, best)| w > best) {
                pick = Some((idx, w));
            }
        }
        let Some((idx, _)) = pick else { break };
        let (feature, sign, perf) = &table[idx];
        let num: f64 = weights.iter().zip(perf).map(|(p, e)| p * (1.0 + e)).sum();
        let den: f64 = weights.iter().zip(perf).map(|(p, e)| p * (1.0 - e)).sum();
        let alpha = 0.5 * (num / den.max(ALPHA_FLOOR)).ln();
        ensemble.rankers.push(WeakRanker {
            feature: *feature,
            sign: *sign,
            alpha,
        });

        let combined: Vec<f64> = queries
            .iter()
            .map(|q| {
                let s: Vec<f64> = q.features.iter().map(|x| ensemble.score(x)).collect();
                evaluate(q, &s, metric)
            })
            .collect();
        let mean = combined.iter().sum::<f64>() / n;
        debug!(
            "adarank round {round}: feature {} sign {sign} alpha {alpha:.6} train {metric} {mean:.6}",
            feature + 1
        );
        if mean <= best_mean {
            ensemble.rankers.pop();
            break;
        }
        best_mean = mean;
        if combined.iter().all(|&e| e >= 1.0) {
            break;
        }
        let raw: Vec<f64> = combined.iter().map(|e| (-e).exp()).collect();
        let z: f64 = raw.iter().sum();
        weights = raw.into_iter().map(|r| r / z).collect();
    }

    Ok(RankingModel {
        kind,
        mask,
        meta: cfg.meta(kind),
        params: ModelParams::Ensemble(ensemble),
    })
}
