//! The five rankers behind one model type.
//!
//! | kind       | parameters                                  |
//! |------------|---------------------------------------------|
//! | AdaRank    | weighted single-feature weak rankers        |
//! | ListNet    | linear or one-hidden-layer scorer           |
//! | LambdaRank | linear or one-hidden-layer scorer           |
//! | MART       | least-squares regression-tree ensemble      |
//! | LambdaMART | lambda-gradient tree ensemble, Newton leaves|
//!
//! Training is single-threaded and fully determined by the dataset and
//! [`TrainConfig`] (seed included).

pub mod adarank;
pub mod lambda;
mod model_io;
pub mod neural;
pub mod trees;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{FeatureMask, FeatureVector, Instance, FEATURE_COUNT};
use crate::letor_io::{Dataset, QueryGroup};
use crate::metrics::{Metric, RankedList};

pub use adarank::{train_adarank, FeatureEnsemble, WeakRanker};
pub use model_io::{load, load_expecting, save, MODEL_MAGIC};
pub use neural::{train_lambdarank, train_listnet, NeuralScorer};
pub use trees::{train_lambdamart, train_mart, Node, RegressionTree, TreeEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankerKind {
    AdaRank,
    ListNet,
    Mart,
    LambdaRank,
    LambdaMart,
}

impl RankerKind {
    /// Row order used by the comparison tables.
    pub const ALL: [RankerKind; 5] = [
        RankerKind::AdaRank,
        RankerKind::ListNet,
        RankerKind::Mart,
        RankerKind::LambdaMart,
        RankerKind::LambdaRank,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            RankerKind::AdaRank => "AdaRank",
            RankerKind::ListNet => "ListNet",
            RankerKind::Mart => "MART",
            RankerKind::LambdaRank => "LambdaRank",
            RankerKind::LambdaMart => "LambdaMART",
        }
    }

    fn default_rounds(self) -> usize {
        match self {
            RankerKind::AdaRank => 500,
            RankerKind::ListNet | RankerKind::LambdaRank => 1500,
            RankerKind::Mart | RankerKind::LambdaMart => 300,
        }
    }

    fn default_learning_rate(self) -> f64 {
        match self {
            RankerKind::Mart | RankerKind::LambdaMart => 0.1,
            _ => 1e-3,
        }
    }
}

impl fmt::Display for RankerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankerKind::AdaRank => "adarank",
            RankerKind::ListNet => "listnet",
            RankerKind::Mart => "mart",
            RankerKind::LambdaRank => "lambdarank",
            RankerKind::LambdaMart => "lambdamart",
        })
    }
}

impl FromStr for RankerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adarank" => Ok(RankerKind::AdaRank),
            "listnet" => Ok(RankerKind::ListNet),
            "mart" => Ok(RankerKind::Mart),
            "lambdarank" => Ok(RankerKind::LambdaRank),
            "lambdamart" => Ok(RankerKind::LambdaMart),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Boosting rounds, trees or epochs; `None` picks the per-algorithm default
    /// (500 AdaRank, 1500 ListNet/LambdaRank, 300 MART/LambdaMART).
    pub rounds: Option<usize>,
    /// `None` picks 0.1 for tree ensembles and 1e-3 for gradient methods.
    pub learning_rate: Option<f64>,
    pub leaves: usize,
    pub min_leaf_support: usize,
    /// AdaRank's target metric.
    pub metric: Metric,
    /// Cutoff of the NDCG whose swap deltas scale the lambda gradients.
    pub lambda_cutoff: usize,
    /// Hidden-layer width for ListNet/LambdaRank; 0 means linear.
    pub hidden: usize,
    pub seed: u64,
    /// Slots hidden on top of the dataset's own mask.
    pub extra_mask: FeatureMask,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rounds: None,
            learning_rate: None,
            leaves: 10,
            min_leaf_support: 1,
            metric: Metric::Map,
            lambda_cutoff: 10,
            hidden: 0,
            seed: 42,
            extra_mask: FeatureMask::NONE,
        }
    }
}

impl TrainConfig {
    pub fn rounds_for(&self, kind: RankerKind) -> usize {
        self.rounds.unwrap_or_else(|| kind.default_rounds())
    }

    pub fn learning_rate_for(&self, kind: RankerKind) -> f64 {
        self.learning_rate.unwrap_or_else(|| kind.default_learning_rate())
    }

    fn validate(&self, kind: RankerKind) -> Result<()> {
        if self.rounds_for(kind) == 0 {
            return Err(Error::Training(format!("{kind}: rounds must be positive")));
        }
        let lr = self.learning_rate_for(kind);
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Training(format!(
                "{kind}: learning rate must be positive, got {lr}"
            )));
        }
        if self.leaves == 0 || self.min_leaf_support == 0 {
            return Err(Error::Training("leaves and min_leaf_support must be positive".into()));
        }
        if !(1..=10).contains(&self.lambda_cutoff) {
            return Err(Error::Training("lambda cutoff must be in 1..10".into()));
        }
        Ok(())
    }

    fn meta(&self, kind: RankerKind) -> TrainingMeta {
        TrainingMeta {
            rounds: self.rounds_for(kind),
            learning_rate: self.learning_rate_for(kind),
            leaves: self.leaves,
            metric: self.metric,
            seed: self.seed,
            hidden: self.hidden,
        }
    }
}

/// Settings echoed into the model file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub rounds: usize,
    pub learning_rate: f64,
    pub leaves: usize,
    pub metric: Metric,
    pub seed: u64,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Ensemble(FeatureEnsemble),
    Neural(NeuralScorer),
    Trees(TreeEnsemble),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingModel {
    pub kind: RankerKind,
    pub mask: FeatureMask,
    pub meta: TrainingMeta,
    pub params: ModelParams,
}

impl RankingModel {
    pub fn score(&self, features: &FeatureVector) -> f64 {
        let x = self.mask.apply(features).0;
        match &self.params {
            ModelParams::Ensemble(e) => e.score(&x),
            ModelParams::Neural(n) => n.score(&x),
            ModelParams::Trees(t) => t.score(&x),
        }
    }

    /// Ranks the instances of one query (ties by ascending doc id).
    pub fn rank(&self, query_id: u32, instances: &[Instance]) -> RankedList {
        RankedList::from_triples(
            query_id,
            instances
                .iter()
                .map(|i| (i.doc_id.clone(), self.score(&i.features), i.label)),
        )
    }

    pub fn rank_dataset(&self, dataset: &Dataset) -> Vec<RankedList> {
        dataset
            .groups()
            .iter()
            .map(|g| self.rank(g.query_id, &g.instances))
            .collect()
    }
}

/// One query prepared for training: masked features, labels and doc ids.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingQuery {
    pub query_id: u32,
    pub doc_ids: Vec<String>,
    pub labels: Vec<u8>,
    pub features: Vec<[f64; FEATURE_COUNT]>,
}

impl TrainingQuery {
    pub fn from_group(group: &QueryGroup, mask: FeatureMask) -> Self {
        Self {
            query_id: group.query_id,
            doc_ids: group.instances.iter().map(|i| i.doc_id.clone()).collect(),
            labels: group.labels(),
            features: group.instances.iter().map(|i| mask.apply(&i.features).0).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels reordered by descending score, ties by doc id.
    pub fn labels_in_rank_order(&self, scores: &[f64]) -> Vec<u8> {
        rank_order(scores, &self.doc_ids)
            .into_iter()
            .map(|i| self.labels[i])
            .collect()
    }
}

/// Indices sorted by descending score, ties by ascending doc id.
pub fn rank_order(scores: &[f64], doc_ids: &[String]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| doc_ids[a].cmp(&doc_ids[b]))
    });
    idx
}

pub(crate) fn prepare(
    dataset: &Dataset,
    cfg: &TrainConfig,
    kind: RankerKind,
) -> Result<(FeatureMask, Vec<TrainingQuery>)> {
    cfg.validate(kind)?;
    let mask = dataset.header.mask.union(cfg.extra_mask);
    let queries: Vec<TrainingQuery> = dataset
        .groups()
        .iter()
        .map(|g| TrainingQuery::from_group(g, mask))
        .collect();
    if queries.is_empty() {
        return Err(Error::Training(format!("{kind}: empty training set")));
    }
    let mixed = queries.iter().any(|q| {
        let first = q.labels[0];
        q.labels.iter().any(|&y| y != first)
    });
    if !mixed {
        return Err(Error::Training(format!(
            "{kind}: degenerate training set, no query has both relevant and non-relevant documents"
        )));
    }
    Ok((mask, queries))
}

pub fn train(kind: RankerKind, dataset: &Dataset, cfg: &TrainConfig) -> Result<RankingModel> {
    match kind {
        RankerKind::AdaRank => train_adarank(dataset, cfg),
        RankerKind::ListNet => train_listnet(dataset, cfg),
        RankerKind::Mart => train_mart(dataset, cfg),
        RankerKind::LambdaRank => train_lambdarank(dataset, cfg),
        RankerKind::LambdaMart => train_lambdamart(dataset, cfg),
    }
}
