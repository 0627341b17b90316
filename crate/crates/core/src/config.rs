//! Run configuration read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [pipeline]
//! min_len = 2
//! max_len = 25
//! stemmer = "porter"      # or "none"
//! digits = "drop"         # or "keep"
//! stopwords = "english"   # "none", or a path to a word list
//!
//! [features]
//! preset = "paper-faithful"
//! bm25 = { k1 = 1.2, b = 0.75 }
//! smoothing = { method = "dirichlet", mu = 2000.0 }
//!
//! [train]
//! algorithm = "lambdamart"
//! rounds = 300
//! learning_rate = 0.1
//! leaves = 10
//! metric = "ndcg@10"
//! hidden = 0
//!
//! [split]
//! fraction = 0.7
//! ```
//!
//! Every key is optional. Command-line flags override the file.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::metrics::Metric;
use crate::rankers::{RankerKind, TrainConfig};
use crate::text_pipeline::{DigitPolicy, PipelineConfig, Stemmer, StopwordSet};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PipelineSection {
    min_len: Option<usize>,
    max_len: Option<usize>,
    stemmer: Option<Stemmer>,
    digits: Option<DigitPolicy>,
    stopwords: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainSection {
    algorithm: Option<String>,
    rounds: Option<usize>,
    learning_rate: Option<f64>,
    leaves: Option<usize>,
    min_leaf_support: Option<usize>,
    metric: Option<String>,
    lambda_cutoff: Option<usize>,
    hidden: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SplitSection {
    fraction: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfigFile {
    seed: Option<u64>,
    pipeline: PipelineSection,
    features: FeatureConfig,
    train: TrainSection,
    split: SplitSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub features: FeatureConfig,
    pub algorithm: RankerKind,
    pub train: TrainConfig,
    pub split_fraction: f64,
    pub split_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            pipeline: PipelineConfig::default(),
            features: FeatureConfig::default(),
            algorithm: RankerKind::LambdaMart,
            train: TrainConfig::default(),
            split_fraction: 0.7,
            split_seed: 42,
        }
    }
}

impl RunConfig {
    /// Relative stopword paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let file: RunConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg = RunConfig::default();
        if let Some(seed) = file.seed {
            cfg.set_seed(seed);
        }
        let p = file.pipeline;
        if let Some(v) = p.min_len {
            cfg.pipeline.min_len = v;
        }
        if let Some(v) = p.max_len {
            cfg.pipeline.max_len = v;
        }
        if let Some(v) = p.stemmer {
            cfg.pipeline.stemmer = v;
        }
        if let Some(v) = p.digits {
            cfg.pipeline.digit_policy = v;
        }
        if let Some(v) = p.stopwords {
            cfg.pipeline.stopwords = match v.as_str() {
                "english" => StopwordSet::english(),
                "none" => StopwordSet::empty(),
                path => StopwordSet::load(&base_dir.join(path))?,
            };
        }
        cfg.features = file.features;
        let t = file.train;
        if let Some(v) = t.algorithm {
            cfg.algorithm = v.parse()?;
        }
        cfg.train.rounds = t.rounds.or(cfg.train.rounds);
        cfg.train.learning_rate = t.learning_rate.or(cfg.train.learning_rate);
        if let Some(v) = t.leaves {
            cfg.train.leaves = v;
        }
        if let Some(v) = t.min_leaf_support {
            cfg.train.min_leaf_support = v;
        }
        if let Some(v) = t.metric {
            cfg.train.metric = v.parse::<Metric>()?;
        }
        if let Some(v) = t.lambda_cutoff {
            cfg.train.lambda_cutoff = v;
        }
        if let Some(v) = t.hidden {
            cfg.train.hidden = v;
        }
        if let Some(v) = t.seed {
            cfg.train.seed = v;
        }
        if let Some(v) = file.split.fraction {
            cfg.split_fraction = v;
        }
        if let Some(v) = file.split.seed {
            cfg.split_seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or_else(|| Path::new(".")))
    }

    /// Sets the global seed and the split and training seeds derived from it.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.split_seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.features.validate()?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeaturePreset, SmoothingMethod};

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::from_toml("", Path::new(".")).unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
            seed = 7
            [pipeline]
            stemmer = "none"
            stopwords = "none"
            [features]
            preset = "paper-faithful"
            smoothing = { method = "jelinek-mercer", lambda = 0.3 }
            [train]
            algorithm = "mart"
            rounds = 12
            metric = "ndcg@5"
            [split]
            fraction = 0.5
        "#;
        let cfg = RunConfig::from_toml(text, Path::new(".")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.pipeline.stemmer, Stemmer::None);
        assert!(cfg.pipeline.stopwords.is_empty());
        assert_eq!(cfg.features.preset, FeaturePreset::PaperFaithful);
        assert_eq!(cfg.features.smoothing.method, SmoothingMethod::JelinekMercer);
        assert_eq!(cfg.features.smoothing.lambda, 0.3);
        assert_eq!(cfg.algorithm, RankerKind::Mart);
        assert_eq!(cfg.train.rounds, Some(12));
        assert_eq!(cfg.train.metric, Metric::Ndcg(5));
        assert_eq!(cfg.split_fraction, 0.5);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            RunConfig::from_toml("[train]\ntrees = 3\n", Path::new(".")),
            Err(Error::Config(_))
        ));
        assert!(RunConfig::from_toml("[split]\nfraction = 1.5\n", Path::new(".")).is_err());
    }
}
