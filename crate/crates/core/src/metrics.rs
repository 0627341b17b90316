//! Ranking quality metrics: precision/recall, P@k, AP/MAP, NDCG@k, ERR@k.
//!
//! Per-list functions take relevance labels in rank order. A label of 1 or
//! more counts as relevant for the binary metrics.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::hash::Hash;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};

pub const DEFAULT_CUTOFFS: [usize; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
    pub label: u8,
}

/// Documents of one query sorted by descending score, ties by ascending
/// doc id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: u32,
    entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn new(query_id: u32, mut entries: Vec<RankedEntry>) -> Self {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        Self { query_id, entries }
    }

    pub fn from_triples<S: Into<String>>(query_id: u32, items: impl IntoIterator<Item = (S, f64, u8)>) -> Self {
        Self::new(
            query_id,
            items
                .into_iter()
                .map(|(doc_id, score, label)| RankedEntry {
                    doc_id: doc_id.into(),
                    score,
                    label,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn labels(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.label).collect()
    }

    /// 1-based position of `doc_id`.
    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.doc_id == doc_id).map(|p| p + 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_relevant(label: u8) -> bool {
    label > 0
}

/// Unordered precision and recall.
pub fn precision_recall<T: Eq + Hash>(retrieved: &HashSet<T>, relevant: &HashSet<T>) -> Result<(f64, f64)> {
    if retrieved.is_empty() {
        return Err(Error::UndefinedMetric("precision of an empty retrieved set".into()));
    }
    if relevant.is_empty() {
        return Err(Error::UndefinedMetric("recall with no relevant documents".into()));
    }
    let hits = retrieved.intersection(relevant).count() as f64;
    Ok((hits / retrieved.len() as f64, hits / relevant.len() as f64))
}

/// Relevant documents in the top `k`, divided by `k` (short lists count as
/// padded with non-relevant documents).
pub fn precision_at_k(labels: &[u8], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = labels.iter().take(k).filter(|&&y| is_relevant(y)).count();
    hits as f64 / k as f64
}

pub fn average_precision(labels: &[u8]) -> Result<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if is_relevant(y) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(Error::UndefinedMetric(
            "average precision with no relevant documents".into(),
        ));
    }
    Ok(sum / hits as f64)
}

/// Mean AP over the lists that have at least one relevant document.
pub fn mean_average_precision<L: AsRef<[u8]>>(lists: &[L]) -> Result<f64> {
    let aps: Vec<f64> = lists
        .iter()
        .filter_map(|l| average_precision(l.as_ref()).ok())
        .collect();
    if aps.is_empty() {
        return Err(Error::UndefinedMetric("no query has a relevant document".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

fn gain(label: u8) -> f64 {
    2f64.powi(i32::from(label)) - 1.0
}

fn discount(position: usize) -> f64 {
    1.0 / (1.0 + position as f64).log2()
}

pub fn dcg_at_k(labels: &[u8], k: usize) -> f64 {
    labels
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &y)| gain(y) * discount(i + 1))
        .sum()
}

/// NDCG@k with base-2 discount; 0 when no document has positive gain.
pub fn ndcg_at_k(labels: &[u8], k: usize) -> f64 {
    let mut ideal = labels.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg_at_k(&ideal, k);
    if idcg == 0.0 {
        return 0.0;
    }
    dcg_at_k(labels, k) / idcg
}

/// Expected reciprocal rank with R = (2^y - 1) / 2^y_max.
pub fn err_at_k(labels: &[u8], k: usize, y_max: u8) -> f64 {
    let denom = 2f64.powi(i32::from(y_max));
    let mut not_stopped = 1.0;
    let mut err = 0.0;
    for (i, &y) in labels.iter().take(k).enumerate() {
        let r = gain(y) / denom;
        err += not_stopped * r / (i + 1) as f64;
        not_stopped *= 1.0 - r;
    }
    err
}

/// A metric usable as an optimization target or report column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Map,
    Ndcg(usize),
    Err(usize),
    Precision(usize),
}

impl Metric {
    /// Per-query value; AP is taken as 0 for a query without relevant
    /// documents.
    pub fn evaluate(self, labels: &[u8], y_max: u8) -> f64 {
        match self {
            Metric::Map => average_precision(labels).unwrap_or(0.0),
            Metric::Ndcg(k) => ndcg_at_k(labels, k),
            Metric::Err(k) => err_at_k(labels, k, y_max),
            Metric::Precision(k) => precision_at_k(labels, k),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Map => write!(f, "map"),
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Err(k) => write!(f, "err@{k}"),
            Metric::Precision(k) => write!(f, "p@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "map" {
            return Ok(Metric::Map);
        }
        let (name, k) = match lower.split_once('@') {
            Some((name, k)) => (
                name.to_string(),
                k.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad cutoff in metric `{s}`")))?,
            ),
            None => (lower.clone(), 10),
        };
        if !(1..=10).contains(&k) {
            return Err(Error::Config(format!("metric cutoff must be in 1..10, got {k}")));
        }
        match name.as_str() {
            "ndcg" => Ok(Metric::Ndcg(k)),
            "err" => Ok(Metric::Err(k)),
            "p" | "precision" => Ok(Metric::Precision(k)),
            _ => Err(Error::Config(format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryMetrics {
    pub query_id: u32,
    /// `None` when the query has no relevant document.
    pub average_precision: Option<f64>,
    pub precision: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub err: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub split: String,
    pub cutoffs: Vec<usize>,
    pub per_query: Vec<QueryMetrics>,
    pub map: f64,
    pub precision: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub err: Vec<f64>,
    /// Queries without relevant documents (excluded from MAP).
    pub warnings: usize,
}

impl MetricReport {
    fn column(&self, values: &[f64], k: usize) -> Option<f64> {
        self.cutoffs.iter().position(|&c| c == k).map(|i| values[i])
    }

    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.column(&self.precision, k)
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.column(&self.ndcg, k)
    }

    pub fn err_at(&self, k: usize) -> Option<f64> {
        self.column(&self.err, k)
    }

    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Map => Some(self.map),
            Metric::Ndcg(k) => self.ndcg_at(k),
            Metric::Err(k) => self.err_at(k),
            Metric::Precision(k) => self.precision_at(k),
        }
    }

    /// CSV with header `metric,k,split,value`; MAP rows leave `k` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,k,split,value\n");
        let _ = writeln!(out, "MAP,,{},{:.6}", self.split, self.map);
        for (name, values) in [("P", &self.precision), ("NDCG", &self.ndcg), ("ERR", &self.err)] {
            for (k, v) in self.cutoffs.iter().zip(values.iter()) {
                let _ = writeln!(out, "{name},{k},{},{v:.6}", self.split);
            }
        }
        out
    }

    /// Aligned plain-text table, one row per metric family.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<8}", format!("[{}]", self.split));
        for k in &self.cutoffs {
            let _ = write!(out, "{:>9}", format!("@{k}"));
        }
        out.push('\n');
        for (name, values) in [("P", &self.precision), ("NDCG", &self.ndcg), ("ERR", &self.err)] {
            let _ = write!(out, "{name:<8}");
            for v in values {
                let _ = write!(out, "{v:>9.4}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "{:<8}{:>9.4}", "MAP", self.map);
        if self.warnings > 0 {
            let _ = writeln!(
                out,
                "({} queries without relevant documents excluded from MAP)",
                self.warnings
            );
        }
        out
    }
}

/// Report over cutoffs 1..10 with binary gains.
pub fn report(lists: &[RankedList], split: &str) -> Result<MetricReport> {
    report_with(lists, &DEFAULT_CUTOFFS, 1, split)
}

pub fn report_with(lists: &[RankedList], cutoffs: &[usize], y_max: u8, split: &str) -> Result<MetricReport> {
    if lists.is_empty() {
        return Err(Error::UndefinedMetric(
            "cannot report on an empty set of rankings".into(),
        ));
    }
    let mut per_query = Vec::with_capacity(lists.len());
    let mut warnings = 0;
    for list in lists {
        let labels = list.labels();
        let ap = average_precision(&labels).ok();
        if ap.is_none() {
            warnings += 1;
            warn!("query {} has no relevant documents; excluded from MAP", list.query_id);
        }
        per_query.push(QueryMetrics {
            query_id: list.query_id,
            average_precision: ap,
            precision: cutoffs.iter().map(|&k| precision_at_k(&labels, k)).collect(),
            ndcg: cutoffs.iter().map(|&k| ndcg_at_k(&labels, k)).collect(),
            err: cutoffs.iter().map(|&k| err_at_k(&labels, k, y_max)).collect(),
        });
    }
    let aps: Vec<f64> = per_query.iter().filter_map(|q| q.average_precision).collect();
    let map = if aps.is_empty() {
        0.0
    } else {
        aps.iter().sum::<f64>() / aps.len() as f64
    };
    let n = per_query.len() as f64;
    let mean = |f: &dyn Fn(&QueryMetrics) -> &Vec<f64>| -> Vec<f64> {
        (0..cutoffs.len())
            .map(|i| per_query.iter().map(|q| f(q)[i]).sum::<f64>() / n)
            .collect()
    };
    let precision = mean(&|q| &q.precision);
    let ndcg = mean(&|q| &q.ndcg);
    let err = mean(&|q| &q.err);
    Ok(MetricReport {
        split: split.to_string(),
        cutoffs: cutoffs.to_vec(),
        per_query,
        map,
        precision,
        ndcg,
        err,
        warnings,
    })
}
