//! End-to-end comparison run: synthetic corpus, features, query split, all
//! five rankers, and MAP / NDCG@10 / ERR@10 / P@10 tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use log::info;

use crate::corpus::{compute_stats, split_query_ids};
use crate::error::Result;
use crate::features::{build_dataset, FeatureConfig, FeaturePreset};
use crate::metrics::{report, Metric, MetricReport};
use crate::rankers::{train, RankerKind, RankingModel, TrainConfig};
use crate::synth::{generate, SynthConfig};
use crate::text_pipeline::PipelineConfig;

pub const FOOTER: &str = "Training and test values come from the synthetic corpus. \
Test-side values are not comparable with the original news collection, which is not distributed.";

#[derive(Debug, Clone)]
pub struct ReproduceConfig {
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub split_fraction: f64,
    pub synth: SynthConfig,
    pub algorithms: Vec<RankerKind>,
}

impl ReproduceConfig {
    /// Paper-faithful features, 70/30 query split, every seed set to `seed`.
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            pipeline: PipelineConfig::default(),
            features: FeatureConfig {
                preset: FeaturePreset::PaperFaithful,
                ..FeatureConfig::default()
            },
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            split_fraction: 0.7,
            synth: SynthConfig::with_seed(seed),
            algorithms: RankerKind::ALL.to_vec(),
        }
    }

    pub fn with_preset(mut self, preset: FeaturePreset) -> Self {
        self.features.preset = preset;
        self
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmResult {
    pub kind: RankerKind,
    pub model: RankingModel,
    pub train: MetricReport,
    pub test: MetricReport,
}

#[derive(Debug, Clone)]
pub struct ReproduceReport {
    pub seed: u64,
    pub preset: FeaturePreset,
    pub train_queries: BTreeSet<u32>,
    pub test_queries: BTreeSet<u32>,
    pub results: Vec<AlgorithmResult>,
}

const TABLES: [(&str, Metric); 4] = [
    ("MAP", Metric::Map),
    ("NDCG@10", Metric::Ndcg(10)),
    ("ERR@10", Metric::Err(10)),
    ("P@10", Metric::Precision(10)),
];

impl ReproduceReport {
    pub fn get(&self, kind: RankerKind) -> Option<&AlgorithmResult> {
        self.results.iter().find(|r| r.kind == kind)
    }

    /// Training-side value of `metric` for `kind`.
    pub fn train_value(&self, kind: RankerKind, metric: Metric) -> Option<f64> {
        self.get(kind).and_then(|r| r.train.value(metric))
    }

    pub fn test_value(&self, kind: RankerKind, metric: Metric) -> Option<f64> {
        self.get(kind).and_then(|r| r.test.value(metric))
    }

    pub fn tables(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "seed {}, preset {}, {} training / {} test queries\n",
            self.seed,
            self.preset,
            self.train_queries.len(),
            self.test_queries.len()
        );
        for (n, (title, metric)) in TABLES.iter().enumerate() {
            let _ = writeln!(out, "Table {}. {title}", n + 1);
            let _ = writeln!(out, "{:<12}{:>10}{:>10}", "Algorithm", "Training", "Test");
            for r in &self.results {
                let _ = writeln!(
                    out,
                    "{:<12}{:>10.4}{:>10.4}",
                    r.kind.display_name(),
                    r.train.value(*metric).unwrap_or(f64::NAN),
                    r.test.value(*metric).unwrap_or(f64::NAN)
                );
            }
            out.push('\n');
        }
        out.push_str(FOOTER);
        out.push('\n');
        out
    }

    /// `algorithm,metric,split,value` rows for the four table metrics.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,metric,split,value\n");
        for r in &self.results {
            for (title, metric) in TABLES {
                for rep in [&r.train, &r.test] {
                    let _ = writeln!(
                        out,
                        "{},{title},{},{:.6}",
                        r.kind.display_name(),
                        rep.split,
                        rep.value(metric).unwrap_or(f64::NAN)
                    );
                }
            }
        }
        out
    }
}

pub fn run(cfg: &ReproduceConfig) -> Result<ReproduceReport> {
    let synth = generate(&cfg.synth, &cfg.pipeline).map_err(|e| e.in_stage("synth"))?;
    let stats = compute_stats(&synth.corpus).map_err(|e| e.in_stage("stats"))?;
    let mut dataset = build_dataset(&synth.corpus, &stats, &synth.queries, &synth.judgments, &cfg.features)
        .map_err(|e| e.in_stage("extract"))?;
    dataset.header.set("pipeline", cfg.pipeline.describe());
    let ids: BTreeSet<u32> = dataset.query_ids().into_iter().collect();
    let (train_ids, test_ids) = split_query_ids(&ids, cfg.split_fraction, cfg.seed).map_err(|e| e.in_stage("split"))?;
    let train_set = dataset.subset(&train_ids);
    let test_set = dataset.subset(&test_ids);
    let mut results = Vec::new();
    for &kind in &cfg.algorithms {
        let stage = format!("train {kind}");
        let model = train(kind, &train_set, &cfg.train).map_err(|e| e.in_stage(&stage))?;
        let stage = format!("evaluate {kind}");
        let train_rep = report(&model.rank_dataset(&train_set), "train").map_err(|e| e.in_stage(&stage))?;
        let test_rep = report(&model.rank_dataset(&test_set), "test").map_err(|e| e.in_stage(&stage))?;
        info!(
            "{kind}: train MAP {:.4} NDCG@10 {:.4}, test MAP {:.4}",
            train_rep.map,
            train_rep.ndcg_at(10).unwrap_or(f64::NAN),
            test_rep.map
        );
        results.push(AlgorithmResult {
            kind,
            model,
            train: train_rep,
            test: test_rep,
        });
    }
    Ok(ReproduceReport {
        seed: cfg.seed,
        preset: cfg.features.preset,
        train_queries: train_ids,
        test_queries: test_ids,
        results,
    })
}
