//! The twelve query-document features.
//!
//! Slot order (1-based): query id, raw relevance code, query scope, TF, IDF,
//! TF-IDF, ICF, BM25, LM score, document length, query length, category code.
//!
//! All logarithms here are natural. Sums over "query terms" run over the
//! distinct processed query terms; the LM query model alone weights terms by
//! their multiplicity.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusStats, Document, Judgment, Query};
use crate::error::{Error, Result};
use crate::letor_io::{Dataset, DatasetHeader};

pub const FEATURE_COUNT: usize = 12;

pub const SLOT_QUERY_ID: usize = 1;
pub const SLOT_IS_REL: usize = 2;
pub const SLOT_QUERY_SCOPE: usize = 3;
pub const SLOT_TF: usize = 4;
pub const SLOT_IDF: usize = 5;
pub const SLOT_TF_IDF: usize = 6;
pub const SLOT_ICF: usize = 7;
pub const SLOT_BM25: usize = 8;
pub const SLOT_LM: usize = 9;
pub const SLOT_DL: usize = 10;
pub const SLOT_QL: usize = 11;
pub const SLOT_DOC_TYPE: usize = 12;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "query_term_id",
    "is_rel",
    "query_scope",
    "tf",
    "idf",
    "tf_idf",
    "icf",
    "bm25",
    "lm",
    "dl",
    "ql",
    "doc_type_id",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0) || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!(
                "bm25 requires k1 >= 0 and b in [0, 1], got k1={} b={}",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingMethod {
    #[default]
    Dirichlet,
    JelinekMercer,
    AbsoluteDiscount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingConfig {
    pub method: SmoothingMethod,
    pub mu: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            method: SmoothingMethod::Dirichlet,
            mu: 2000.0,
            lambda: 0.1,
            delta: 0.7,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.method {
            SmoothingMethod::Dirichlet => self.mu > 0.0,
            SmoothingMethod::JelinekMercer => self.lambda > 0.0 && self.lambda < 1.0,
            SmoothingMethod::AbsoluteDiscount => self.delta > 0.0 && self.delta < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid smoothing parameters: {}",
                self.describe()
            )))
        }
    }

    pub fn describe(&self) -> String {
        match self.method {
            SmoothingMethod::Dirichlet => format!("dirichlet mu={}", self.mu),
            SmoothingMethod::JelinekMercer => format!("jelinek-mercer lambda={}", self.lambda),
            SmoothingMethod::AbsoluteDiscount => format!("absolute-discount delta={}", self.delta),
        }
    }
}

/// Set of feature slots hidden from training and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FeatureMask(u16);

impl FeatureMask {
    pub const NONE: FeatureMask = FeatureMask(0);

    pub fn from_slots(slots: &[usize]) -> Result<Self> {
        let mut bits = 0u16;
        for &s in slots {
            if !(1..=FEATURE_COUNT).contains(&s) {
                return Err(Error::Validation(format!("feature slot {s} out of range 1..12")));
            }
            bits |= 1 << (s - 1);
        }
        Ok(Self(bits))
    }

    pub fn is_masked(self, slot: usize) -> bool {
        self.0 & (1 << (slot - 1)) != 0
    }

    pub fn slots(self) -> Vec<usize> {
        (1..=FEATURE_COUNT).filter(|&s| self.is_masked(s)).collect()
    }

    /// Zero-based indices of the features left visible.
    pub fn active_indices(self) -> Vec<usize> {
        (0..FEATURE_COUNT).filter(|&i| !self.is_masked(i + 1)).collect()
    }

    pub fn union(self, other: FeatureMask) -> FeatureMask {
        FeatureMask(self.0 | other.0)
    }

    pub fn apply(self, v: &FeatureVector) -> FeatureVector {
        let mut out = *v;
        for s in self.slots() {
            out.0[s - 1] = 0.0;
        }
        out
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let slots = self.slots();
        if slots.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = slots.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(FeatureMask::NONE);
        }
        let slots = s
            .split([',', ' '])
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| Error::Validation(format!("bad feature slot `{p}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureMask::from_slots(&slots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturePreset {
    /// All twelve features, including the label-carrying relevance code.
    PaperFaithful,
    /// Hides the query id and the relevance code.
    #[default]
    LeakageSafe,
}

impl FeaturePreset {
    pub fn mask(self) -> FeatureMask {
        match self {
            FeaturePreset::PaperFaithful => FeatureMask::NONE,
            FeaturePreset::LeakageSafe => FeatureMask((1 << 0) | (1 << 1)),
        }
    }
}

impl fmt::Display for FeaturePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeaturePreset::PaperFaithful => "paper-faithful",
            FeaturePreset::LeakageSafe => "leakage-safe",
        })
    }
}

impl FromStr for FeaturePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-faithful" => Ok(FeaturePreset::PaperFaithful),
            "leakage-safe" => Ok(FeaturePreset::LeakageSafe),
            other => Err(Error::Config(format!("unknown feature preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub bm25: Bm25Params,
    pub smoothing: SmoothingConfig,
    pub preset: FeaturePreset,
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.bm25.validate()?;
        self.smoothing.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    /// 1-based slot access.
    pub fn slot(&self, slot: usize) -> f64 {
        self.0[slot - 1]
    }

    pub fn set_slot(&mut self, slot: usize, value: f64) {
        self.0[slot - 1] = value;
    }

    pub fn as_array(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub query_id: u32,
    pub doc_id: String,
    pub label: u8,
    pub features: FeatureVector,
}

/// TF(q, d) = sum over shared terms of ln(c(t, d) + 1).
pub fn tf(query: &Query, doc: &Document) -> f64 {
    query
        .distinct_terms()
        .into_iter()
        .map(|t| doc.term_count(t))
        .filter(|&c| c > 0)
        .map(|c| (f64::from(c) + 1.0).ln())
        .sum()
}

/// ln(N / df(t)); zero for terms the corpus has never seen.
pub fn idf_term(term: &str, stats: &CorpusStats) -> f64 {
    match stats.df(term) {
        0 => 0.0,
        df => (stats.n_docs as f64 / df as f64).ln(),
    }
}

pub fn idf(query: &Query, stats: &CorpusStats) -> f64 {
    query.distinct_terms().into_iter().map(|t| idf_term(t, stats)).sum()
}

pub fn tf_idf(query: &Query, doc: &Document, stats: &CorpusStats) -> f64 {
    query
        .distinct_terms()
        .into_iter()
        .filter_map(|t| match doc.term_count(t) {
            0 => None,
            c => Some((f64::from(c) + 1.0).ln() * idf_term(t, stats)),
        })
        .sum()
}

/// ICF(q) = sum of ln(|C| / cf(t)) over query terms with cf > 0.
pub fn icf(query: &Query, stats: &CorpusStats) -> f64 {
    query
        .distinct_terms()
        .into_iter()
        .filter_map(|t| match stats.cf(t) {
            0 => None,
            cf => Some((stats.total_tokens as f64 / cf as f64).ln()),
        })
        .sum()
}

/// Contribution of one term with in-document count `count` to BM25.
pub fn bm25_term_weight(idf: f64, count: u32, doc_len: usize, avgdl: f64, params: &Bm25Params) -> Result<f64> {
    if !(avgdl > 0.0) {
        return Err(Error::EmptyCorpus);
    }
    if count == 0 {
        return Ok(0.0);
    }
    let c = f64::from(count);
    let norm = params.k1 * (1.0 - params.b + params.b * doc_len as f64 / avgdl);
    Ok(idf * c * (params.k1 + 1.0) / (c + norm))
}

pub fn bm25(query: &Query, doc: &Document, stats: &CorpusStats, params: &Bm25Params) -> Result<f64> {
    let mut total = 0.0;
    for t in query.distinct_terms() {
        total += bm25_term_weight(
            idf_term(t, stats),
            doc.term_count(t),
            doc.length_tokens,
            stats.avgdl,
            params,
        )?;
    }
    Ok(total)
}

/// p(t|C) = cf(t) / |C|, floored at 1 / (|C| + |V|) for unseen terms.
pub fn collection_prob(term: &str, stats: &CorpusStats) -> f64 {
    match stats.cf(term) {
        0 => 1.0 / (stats.total_tokens as f64 + stats.vocabulary_size() as f64),
        cf => cf as f64 / stats.total_tokens as f64,
    }
}

/// Smoothed document language model p(t|θ_d).
///
/// For an empty document the Jelinek-Mercer and absolute-discount forms have
/// no maximum-likelihood part and fall back to p(t|C), matching what the
/// Dirichlet form gives.
pub fn doc_model_prob(term: &str, doc: &Document, stats: &CorpusStats, smoothing: &SmoothingConfig) -> f64 {
    let p_c = collection_prob(term, stats);
    let c = f64::from(doc.term_count(term));
    let len = doc.length_tokens as f64;
    match smoothing.method {
        SmoothingMethod::Dirichlet => (c + smoothing.mu * p_c) / (len + smoothing.mu),
        _ if doc.length_tokens == 0 => p_c,
        SmoothingMethod::JelinekMercer => (1.0 - smoothing.lambda) * c / len + smoothing.lambda * p_c,
        SmoothingMethod::AbsoluteDiscount => {
            let unique = doc.distinct_terms() as f64;
            (c - smoothing.delta).max(0.0) / len + smoothing.delta * unique / len * p_c
        }
    }
}

/// Query-likelihood score: sum over query terms of p(t|θ_q) ln p(t|θ_d)
/// with the maximum-likelihood query model. Always <= 0.
pub fn lm_score(query: &Query, doc: &Document, stats: &CorpusStats, smoothing: &SmoothingConfig) -> Result<f64> {
    if query.terms.is_empty() {
        return Err(Error::Validation(format!(
            "query {} has no terms after preprocessing",
            query.query_id
        )));
    }
    let ql = query.length_terms() as f64;
    Ok(query
        .distinct_terms()
        .into_iter()
        .map(|t| {
            let p_q = query.terms.iter().filter(|q| q.as_str() == t).count() as f64 / ql;
            p_q * doc_model_prob(t, doc, stats, smoothing).ln()
        })
        .sum())
}

/// Number of parts (subject, lead, body) containing at least one query term.
pub fn query_scope(query: &Query, doc: &Document) -> u8 {
    let terms = query.distinct_terms();
    doc.parts
        .iter()
        .filter(|p| p.tokens.iter().any(|t| terms.contains(t.as_str())))
        .count() as u8
}

/// All twelve features for one judged pair. The mask is not applied here.
pub fn extract(
    query: &Query,
    doc: &Document,
    judgment: &Judgment,
    stats: &CorpusStats,
    cfg: &FeatureConfig,
) -> Result<Instance> {
    if judgment.query_id != query.query_id || judgment.doc_id != doc.doc_id {
        return Err(Error::Validation(format!(
            "judgment ({}, {}) does not match pair ({}, {})",
            judgment.query_id, judgment.doc_id, query.query_id, doc.doc_id
        )));
    }
    let mut v = [0.0; FEATURE_COUNT];
    v[SLOT_QUERY_ID - 1] = f64::from(query.query_id);
    v[SLOT_IS_REL - 1] = f64::from(judgment.is_rel_raw);
    v[SLOT_QUERY_SCOPE - 1] = f64::from(query_scope(query, doc));
    v[SLOT_TF - 1] = tf(query, doc);
    v[SLOT_IDF - 1] = idf(query, stats);
    v[SLOT_TF_IDF - 1] = tf_idf(query, doc, stats);
    v[SLOT_ICF - 1] = icf(query, stats);
    v[SLOT_BM25 - 1] = bm25(query, doc, stats, &cfg.bm25)?;
    v[SLOT_LM - 1] = lm_score(query, doc, stats, &cfg.smoothing)?;
    v[SLOT_DL - 1] = doc.length_tokens as f64;
    v[SLOT_QL - 1] = query.length_terms() as f64;
    v[SLOT_DOC_TYPE - 1] = f64::from(doc.category.code());
    Ok(Instance {
        query_id: query.query_id,
        doc_id: doc.doc_id.clone(),
        label: judgment.label(),
        features: FeatureVector(v),
    })
}

/// Feature rows for every judgment, with the preset's slots zeroed and the
/// configuration recorded in the header.
pub fn build_dataset(
    corpus: &Corpus,
    stats: &CorpusStats,
    queries: &[Query],
    judgments: &[Judgment],
    cfg: &FeatureConfig,
) -> Result<Dataset> {
    cfg.validate()?;
    let by_id: BTreeMap<u32, &Query> = queries.iter().map(|q| (q.query_id, q)).collect();
    let mask = cfg.preset.mask();
    let mut instances = Vec::with_capacity(judgments.len());
    for j in judgments {
        let query = by_id
            .get(&j.query_id)
            .ok_or_else(|| Error::Validation(format!("judgment references unknown query {}", j.query_id)))?;
        let doc = corpus
            .get(&j.doc_id)
            .ok_or_else(|| Error::Validation(format!("judgment references unknown document `{}`", j.doc_id)))?;
        let mut inst = extract(query, doc, j, stats, cfg)?;
        inst.features = mask.apply(&inst.features);
        instances.push(inst);
    }
    let mut header = DatasetHeader::with_mask(mask);
    header.set("preset", cfg.preset.to_string());
    header.set("bm25", format!("k1={} b={}", cfg.bm25.k1, cfg.bm25.b));
    header.set("smoothing", cfg.smoothing.describe());
    header.set("corpus", corpus.content_hash());
    Ok(Dataset::from_instances(instances, header))
}
