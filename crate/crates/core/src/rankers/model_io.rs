//! Text model files.
//!
//! ```text
//! # cof-model v1
//! kind: mart
//! mask: 1,2
//! rounds: 300
//! learning_rate: 0.1
//! leaves: 10
//! metric: map
//! seed: 42
//! hidden: 0
//! base: 0.6666666666666666
//! trees: 1
//! tree 3
//! split 7 2.5 1 2
//! leaf -0.06666666666666667
//! leaf 0.03333333333333333
//! end
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! bits, so a reloaded model scores identically.

use std::io::{BufRead, Write};

use super::{
    FeatureEnsemble, ModelParams, NeuralScorer, Node, RankerKind, RankingModel, RegressionTree, TrainingMeta,
    TreeEnsemble, WeakRanker,
};
use crate::error::{Error, Result};
use crate::features::{FeatureMask, FEATURE_COUNT};

pub const MODEL_MAGIC: &str = "# cof-model v1";

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn save<W: Write>(model: &RankingModel, mut out: W) -> Result<()> {
    let m = &model.meta;
    writeln!(out, "{MODEL_MAGIC}")?;
    writeln!(out, "kind: {}", model.kind)?;
    writeln!(out, "mask: {}", model.mask)?;
    writeln!(out, "rounds: {}", m.rounds)?;
    writeln!(out, "learning_rate: {}", m.learning_rate)?;
    writeln!(out, "leaves: {}", m.leaves)?;
    writeln!(out, "metric: {}", m.metric)?;
    writeln!(out, "seed: {}", m.seed)?;
    writeln!(out, "hidden: {}", m.hidden)?;
    match &model.params {
        ModelParams::Ensemble(e) => {
            writeln!(out, "rankers: {}", e.rankers.len())?;
            for r in &e.rankers {
                writeln!(out, "weak {} {} {}", r.feature, r.sign, r.alpha)?;
            }
        }
        ModelParams::Neural(n) => {
            writeln!(out, "mean: {}", join(&n.mean))?;
            writeln!(out, "scale: {}", join(&n.scale))?;
            writeln!(out, "params: {}", n.params.len())?;
            writeln!(out, "{}", join(&n.params))?;
        }
        ModelParams::Trees(t) => {
            writeln!(out, "base: {}", t.base)?;
            writeln!(out, "trees: {}", t.trees.len())?;
            for tree in &t.trees {
                writeln!(out, "tree {}", tree.nodes.len())?;
                for node in &tree.nodes {
                    match node {
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => writeln!(out, "split {feature} {threshold} {left} {right}")?,
                        Node::Leaf { value } => writeln!(out, "leaf {value}")?,
                    }
                }
            }
        }
    }
    writeln!(out, "end")?;
    Ok(())
}

struct Lines {
    lines: Vec<String>,
    pos: usize,
}

impl Lines {
    fn next(&mut self, what: &str) -> Result<&str> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::ModelFormat(format!("truncated file: expected {what}")))?;
        self.pos += 1;
        Ok(line.trim_end())
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::ModelFormat(format!("line {}: {msg}", self.pos))
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next(key)?.to_string();
        match line.split_once(": ").or_else(|| line.split_once(':')) {
            Some((k, v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(self.err(format!("expected `{key}:`, found `{line}`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| self.err(format!("bad value for {key}: `{v}`")))
    }

    fn floats(&self, text: &str, expected: usize) -> Result<Vec<f64>> {
        let v: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        if v.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", v.len())));
        }
        Ok(v)
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines, tok: Option<&str>) -> Result<T> {
    let tok = tok.ok_or_else(|| lines.err("missing field"))?;
    tok.parse().map_err(|_| lines.err(format!("bad number `{tok}`")))
}

fn array(v: Vec<f64>) -> [f64; FEATURE_COUNT] {
    let mut a = [0.0; FEATURE_COUNT];
    a.copy_from_slice(&v);
    a
}

pub fn load<R: BufRead>(source: R) -> Result<RankingModel> {
    let lines: Vec<String> = source.lines().collect::<std::io::Result<_>>()?;
    if lines.is_empty() {
        return Err(Error::ModelFormat("empty file".into()));
    }
    let mut l = Lines { lines, pos: 0 };
    if l.next("magic")? != MODEL_MAGIC {
        return Err(Error::ModelFormat(format!("missing `{MODEL_MAGIC}` header")));
    }
    let kind: RankerKind = l.field("kind")?.parse().map_err(|e: Error| l.err(e))?;
    let mask: FeatureMask = l.field("mask")?.parse().map_err(|e: Error| l.err(e))?;
    let meta = TrainingMeta {
        rounds: l.parsed("rounds")?,
        learning_rate: l.parsed("learning_rate")?,
        leaves: l.parsed("leaves")?,
        metric: l.field("metric")?.parse().map_err(|e: Error| l.err(e))?,
        seed: l.parsed("seed")?,
        hidden: l.parsed("hidden")?,
    };
    let params = match kind {
        RankerKind::AdaRank => {
            let n: usize = l.parsed("rankers")?;
            let mut rankers = Vec::with_capacity(n);
            for _ in 0..n {
                let line = l.next("weak ranker")?.to_string();
                let mut it = line.split_whitespace();
                if it.next() != Some("weak") {
                    return Err(l.err("expected `weak`"));
                }
                let feature: usize = parse_num(&l, it.next())?;
                if feature >= FEATURE_COUNT {
                    return Err(l.err(format!("feature index {feature} out of range")));
                }
                rankers.push(WeakRanker {
                    feature,
                    sign: parse_num(&l, it.next())?,
                    alpha: parse_num(&l, it.next())?,
                });
            }
            ModelParams::Ensemble(FeatureEnsemble { rankers })
        }
        RankerKind::ListNet | RankerKind::LambdaRank => {
            let mean = l.field("mean")?;
            let mean = array(l.floats(&mean, FEATURE_COUNT)?);
            let scale = l.field("scale")?;
            let scale = array(l.floats(&scale, FEATURE_COUNT)?);
            let n: usize = l.parsed("params")?;
            if n != NeuralScorer::param_count(meta.hidden) {
                return Err(l.err(format!("{n} parameters do not fit hidden width {}", meta.hidden)));
            }
            let line = l.next("parameters")?.to_string();
            let params = l.floats(&line, n)?;
            ModelParams::Neural(NeuralScorer {
                mean,
                scale,
                hidden: meta.hidden,
                params,
            })
        }
        RankerKind::Mart | RankerKind::LambdaMart => {
            let base: f64 = l.parsed("base")?;
            let n: usize = l.parsed("trees")?;
            let mut trees = Vec::with_capacity(n);
            for _ in 0..n {
                let header = l.next("tree")?.to_string();
                let count: usize = match header.split_once(' ') {
                    Some(("tree", c)) => parse_num(&l, Some(c))?,
                    _ => return Err(l.err("expected `tree <nodes>`")),
                };
                let mut nodes = Vec::with_capacity(count);
                for _ in 0..count {
                    let line = l.next("tree node")?.to_string();
                    let mut it = line.split_whitespace();
                    let node = match it.next() {
                        Some("leaf") => Node::Leaf {
                            value: parse_num(&l, it.next())?,
                        },
                        Some("split") => Node::Split {
                            feature: parse_num(&l, it.next())?,
                            threshold: parse_num(&l, it.next())?,
                            left: parse_num(&l, it.next())?,
                            right: parse_num(&l, it.next())?,
                        },
                        _ => return Err(l.err("expected `leaf` or `split`")),
                    };
                    nodes.push(node);
                }
                check_tree(&nodes).map_err(|m| l.err(m))?;
                trees.push(RegressionTree { nodes });
            }
            ModelParams::Trees(TreeEnsemble { base, trees })
        }
    };
    if l.next("end")? != "end" {
        return Err(l.err("expected `end`"));
    }
    Ok(RankingModel {
        kind,
        mask,
        meta,
        params,
    })
}

/// Children must point forward and features must be in range, so scoring
/// always terminates.
fn check_tree(nodes: &[Node]) -> std::result::Result<(), String> {
    if nodes.is_empty() {
        return Err("tree without nodes".into());
    }
    for (i, n) in nodes.iter().enumerate() {
        if let Node::Split {
            feature, left, right, ..
        } = *n
        {
            if feature >= FEATURE_COUNT {
                return Err(format!("feature index {feature} out of range"));
            }
            if left <= i || right <= i || left >= nodes.len() || right >= nodes.len() {
                return Err(format!("node {i} has invalid children"));
            }
        }
    }
    Ok(())
}

pub fn load_expecting<R: BufRead>(source: R, kind: RankerKind) -> Result<RankingModel> {
    let model = load(source)?;
    if model.kind != kind {
        return Err(Error::ModelFormat(format!(
            "kind mismatch: expected {kind}, file holds {}",
            model.kind
        )));
    }
    Ok(model)
}
