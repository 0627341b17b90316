//! Documents, queries, relevance judgments and the global statistics the
//! feature formulas read (N, df, cf, |C|, avgdl).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text_pipeline::{process, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Political = 0,
    Sports = 1,
    Economic = 2,
    Artistic = 3,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Political,
        Category::Sports,
        Category::Economic,
        Category::Artistic,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Political => "political",
            Category::Sports => "sports",
            Category::Economic => "economic",
            Category::Artistic => "artistic",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Ok(code) = lower.parse::<u8>() {
            return Category::from_code(code).ok_or_else(|| Error::Validation(format!("unknown category code {code}")));
        }
        Category::ALL
            .into_iter()
            .find(|c| c.name() == lower)
            .ok_or_else(|| Error::Validation(format!("unknown category `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartKind {
    Subject,
    Lead,
    Body,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentPart {
    pub kind: PartKind,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

impl DocumentPart {
    pub fn new(kind: PartKind, raw_text: &str, cfg: &PipelineConfig) -> Self {
        Self {
            kind,
            raw_text: raw_text.to_string(),
            tokens: process(raw_text, cfg),
        }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.tokens.iter().any(|t| t == term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    /// Subject, lead and body, in that order.
    pub parts: [DocumentPart; 3],
    pub category: Category,
    pub length_tokens: usize,
    term_counts: BTreeMap<String, u32>,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        subject: &str,
        lead: &str,
        body: &str,
        category: Category,
        cfg: &PipelineConfig,
    ) -> Self {
        Self::from_parts(
            doc_id,
            [
                DocumentPart::new(PartKind::Subject, subject, cfg),
                DocumentPart::new(PartKind::Lead, lead, cfg),
                DocumentPart::new(PartKind::Body, body, cfg),
            ],
            category,
        )
    }

    /// Builds a document from already processed parts.
    pub fn from_parts(doc_id: impl Into<String>, parts: [DocumentPart; 3], category: Category) -> Self {
        let mut term_counts = BTreeMap::new();
        for part in &parts {
            for t in &part.tokens {
                *term_counts.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let length_tokens = parts.iter().map(|p| p.tokens.len()).sum();
        Self {
            doc_id: doc_id.into(),
            parts,
            category,
            length_tokens,
            term_counts,
        }
    }

    /// Occurrences of `term` over all three parts.
    pub fn term_count(&self, term: &str) -> u32 {
        self.term_counts.get(term).copied().unwrap_or(0)
    }

    pub fn term_counts(&self) -> &BTreeMap<String, u32> {
        &self.term_counts
    }

    pub fn distinct_terms(&self) -> usize {
        self.term_counts.len()
    }

    pub fn part(&self, kind: PartKind) -> &DocumentPart {
        &self.parts[kind as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub query_id: u32,
    pub text: String,
    pub terms: Vec<String>,
}

impl Query {
    pub fn new(query_id: u32, text: &str, cfg: &PipelineConfig) -> Self {
        Self {
            query_id,
            text: text.to_string(),
            terms: process(text, cfg),
        }
    }

    pub fn from_terms(query_id: u32, terms: &[&str]) -> Self {
        Self {
            query_id,
            text: terms.join(" "),
            terms: terms.iter().map(|t| t.to_string()).collect(),
        }
    }

    /// QL: processed terms, duplicates included.
    pub fn length_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn distinct_terms(&self) -> BTreeSet<&str> {
        self.terms.iter().map(String::as_str).collect()
    }
}

/// `is_rel_raw` uses the original coding: 1 = related, 2 = non-related.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Judgment {
    pub query_id: u32,
    pub doc_id: String,
    #[serde(rename = "is_rel")]
    pub is_rel_raw: u8,
}

impl Judgment {
    pub fn new(query_id: u32, doc_id: impl Into<String>, relevant: bool) -> Self {
        Self {
            query_id,
            doc_id: doc_id.into(),
            is_rel_raw: if relevant { 1 } else { 2 },
        }
    }

    /// Binary relevance: 1 for related, 0 otherwise.
    pub fn label(&self) -> u8 {
        u8::from(self.is_rel_raw == 1)
    }

    fn validate(&self) -> Result<()> {
        if self.is_rel_raw == 1 || self.is_rel_raw == 2 {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "judgment ({}, {}) has is_rel {} (expected 1 or 2)",
                self.query_id, self.doc_id, self.is_rel_raw
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate doc_id `{}`", d.doc_id)));
            }
        }
        Ok(Self { docs, by_id })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    /// SHA-256 over doc ids, categories and processed tokens (hex, first 16 chars).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for d in &self.docs {
            h.update(d.doc_id.as_bytes());
            h.update([0xff, d.category.code()]);
            for p in &d.parts {
                for t in &p.tokens {
                    h.update(t.as_bytes());
                    h.update([0]);
                }
                h.update([0xfe]);
            }
        }
        hex::encode(h.finalize())[..16].to_string()
    }
}

#[derive(Debug, Deserialize)]
struct DocumentRecord {
    doc_id: String,
    subject: String,
    lead: String,
    body: String,
    category: serde_json::Value,
}

/// Reads a JSON Lines corpus (`doc_id`, `subject`, `lead`, `body`,
/// `category`). Blank lines are skipped.
pub fn ingest<R: BufRead>(reader: R, cfg: &PipelineConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut docs = Vec::new();
    let mut seen = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocumentRecord = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let category = match &rec.category {
            serde_json::Value::String(s) => s.parse::<Category>(),
            serde_json::Value::Number(n) => n
                .as_u64()
                .and_then(|c| u8::try_from(c).ok())
                .and_then(Category::from_code)
                .ok_or_else(|| Error::Validation(format!("unknown category code {n}"))),
            other => Err(Error::Validation(format!("unknown category {other}"))),
        }
        .map_err(|e| Error::Validation(format!("line {lineno}: {e}")))?;
        if let Some(prev) = seen.insert(rec.doc_id.clone(), lineno) {
            return Err(Error::Validation(format!(
                "line {lineno}: duplicate doc_id `{}` (first seen on line {prev})",
                rec.doc_id
            )));
        }
        docs.push(Document::new(
            rec.doc_id,
            &rec.subject,
            &rec.lead,
            &rec.body,
            category,
            cfg,
        ));
    }
    Corpus::from_documents(docs)
}

#[derive(Debug, Serialize)]
struct DocumentRecordOut<'a> {
    doc_id: &'a str,
    subject: &'a str,
    lead: &'a str,
    body: &'a str,
    category: &'a str,
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for d in corpus.documents() {
        let rec = DocumentRecordOut {
            doc_id: &d.doc_id,
            subject: &d.parts[0].raw_text,
            lead: &d.parts[1].raw_text,
            body: &d.parts[2].raw_text,
            category: d.category.name(),
        };
        serde_json::to_writer(&mut out, &rec).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct QueryRecord {
    query_id: u32,
    text: String,
}

/// JSON Lines with `query_id` and `text`.
pub fn read_queries<R: BufRead>(reader: R, cfg: &PipelineConfig) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: QueryRecord = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if !seen.insert(rec.query_id) {
            return Err(Error::Validation(format!(
                "line {}: duplicate query_id {}",
                i + 1,
                rec.query_id
            )));
        }
        out.push(Query::new(rec.query_id, &rec.text, cfg));
    }
    Ok(out)
}

pub fn write_queries<W: Write>(queries: &[Query], mut out: W) -> Result<()> {
    for q in queries {
        let rec = QueryRecord {
            query_id: q.query_id,
            text: q.text.clone(),
        };
        serde_json::to_writer(&mut out, &rec).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

/// JSON Lines with `query_id`, `doc_id` and `is_rel` (1 or 2).
pub fn read_judgments<R: BufRead>(reader: R) -> Result<Vec<Judgment>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let j: Judgment = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        j.validate()
            .map_err(|e| Error::Validation(format!("line {}: {e}", i + 1)))?;
        out.push(j);
    }
    Ok(out)
}

pub fn write_judgments<W: Write>(judgments: &[Judgment], mut out: W) -> Result<()> {
    for j in judgments {
        serde_json::to_writer(&mut out, j).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// N.
    pub n_docs: u64,
    pub df: BTreeMap<String, u64>,
    pub cf: BTreeMap<String, u64>,
    /// |C|.
    pub total_tokens: u64,
    pub avgdl: f64,
}

impl CorpusStats {
    pub fn df(&self, term: &str) -> u64 {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn cf(&self, term: &str) -> u64 {
        self.cf.get(term).copied().unwrap_or(0)
    }

    /// |V|.
    pub fn vocabulary_size(&self) -> usize {
        self.cf.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.cf.keys().map(String::as_str)
    }

    pub fn to_json<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct TermStats {
            df: u64,
            cf: u64,
        }
        #[derive(Serialize)]
        struct Export<'a> {
            n_docs: u64,
            total_tokens: u64,
            avgdl: f64,
            vocabulary_size: usize,
            terms: BTreeMap<&'a str, TermStats>,
        }
        let terms = self
            .cf
            .iter()
            .map(|(t, &cf)| (t.as_str(), TermStats { df: self.df(t), cf }))
            .collect();
        let export = Export {
            n_docs: self.n_docs,
            total_tokens: self.total_tokens,
            avgdl: self.avgdl,
            vocabulary_size: self.vocabulary_size(),
            terms,
        };
        serde_json::to_writer_pretty(out, &export).map_err(std::io::Error::from)?;
        Ok(())
    }
}

pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    let mut cf: BTreeMap<String, u64> = BTreeMap::new();
    let mut total_tokens = 0u64;
    for doc in corpus.documents() {
        for (term, &count) in doc.term_counts() {
            *df.entry(term.clone()).or_insert(0) += 1;
            *cf.entry(term.clone()).or_insert(0) += u64::from(count);
        }
        total_tokens += doc.length_tokens as u64;
    }
    let n_docs = corpus.len() as u64;
    Ok(CorpusStats {
        n_docs,
        df,
        cf,
        total_tokens,
        avgdl: total_tokens as f64 / n_docs as f64,
    })
}

/// Partitions query ids into (train, test). The train side receives
/// `round(train_fraction * #queries)` ids, clamped so both sides are non-empty.
pub fn split_query_ids(ids: &BTreeSet<u32>, train_fraction: f64, seed: u64) -> Result<(BTreeSet<u32>, BTreeSet<u32>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::CannotSplit(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if ids.len() < 2 {
        return Err(Error::CannotSplit(format!(
            "need at least 2 distinct queries, found {}",
            ids.len()
        )));
    }
    let n = ids.len();
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<u32> = ids.iter().copied().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = order[..n_train].iter().copied().collect();
    let test = order[n_train..].iter().copied().collect();
    Ok((train, test))
}

pub fn split_by_query(
    judgments: &[Judgment],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<Judgment>, Vec<Judgment>)> {
    let ids: BTreeSet<u32> = judgments.iter().map(|j| j.query_id).collect();
    let (train_ids, _) = split_query_ids(&ids, train_fraction, seed)?;
    Ok(judgments.iter().cloned().partition(|j| train_ids.contains(&j.query_id)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_pipeline::StopwordSet;

    fn cfg_no_stop() -> PipelineConfig {
        PipelineConfig {
            stopwords: StopwordSet::empty(),
            ..PipelineConfig::default()
        }
    }

    fn doc_with_len(id: &str, len: usize) -> Document {
        let body = vec!["word"; len].join(" ");
        Document::new(id, "", "", &body, Category::Sports, &cfg_no_stop())
    }

    #[test]
    fn empty_stream_gives_empty_corpus() {
        let corpus = ingest("".as_bytes(), &PipelineConfig::default()).unwrap();
        assert_eq!(corpus.len(), 0);
        assert!(matches!(compute_stats(&corpus), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn hand_counted_document() {
        let line = r#"{"doc_id":"d1","subject":"Cats run","lead":"","body":"cats","category":"Sports"}"#;
        let corpus = ingest(line.as_bytes(), &cfg_no_stop()).unwrap();
        let stats = compute_stats(&corpus).unwrap();
        assert_eq!(corpus.documents()[0].length_tokens, 3);
        assert_eq!(stats.cf("cat"), 2);
        assert_eq!(stats.df("cat"), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "{\"doc_id\":\"a\",\"subject\":\"\",\"lead\":\"\",\"body\":\"\",\"category\":0}\n{oops\n";
        match ingest(input.as_bytes(), &PipelineConfig::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_category_and_duplicate_id_rejected() {
        let bad_cat = r#"{"doc_id":"a","subject":"","lead":"","body":"","category":"weather"}"#;
        assert!(matches!(
            ingest(bad_cat.as_bytes(), &PipelineConfig::default()),
            Err(Error::Validation(_))
        ));
        let dup = "{\"doc_id\":\"a\",\"subject\":\"\",\"lead\":\"\",\"body\":\"\",\"category\":\"ARTISTIC\"}\n\
                   {\"doc_id\":\"a\",\"subject\":\"\",\"lead\":\"\",\"body\":\"\",\"category\":\"sports\"}";
        assert!(matches!(
            ingest(dup.as_bytes(), &PipelineConfig::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn avgdl_is_mean_length() {
        let docs = [2, 4, 6, 8]
            .iter()
            .enumerate()
            .map(|(i, &l)| doc_with_len(&format!("d{i}"), l))
            .collect();
        let stats = compute_stats(&Corpus::from_documents(docs).unwrap()).unwrap();
        assert_eq!(stats.avgdl, 5.0);
    }

    #[test]
    fn df_cf_by_construction() {
        let cfg = cfg_no_stop();
        let docs = (0..10)
            .map(|i| {
                let body = if i < 3 { "target filler" } else { "filler" };
                Document::new(format!("d{i}"), "", "", body, Category::Political, &cfg)
            })
            .collect();
        let stats = compute_stats(&Corpus::from_documents(docs).unwrap()).unwrap();
        assert_eq!(stats.df("target"), 3);
        assert_eq!(stats.cf("target"), 3);
    }

    #[test]
    fn split_examples() {
        let judgments: Vec<Judgment> = (0..10)
            .flat_map(|q| (0..3).map(move |d| Judgment::new(q, format!("d{q}_{d}"), d == 0)))
            .collect();
        let (train, test) = split_by_query(&judgments, 0.7, 42).unwrap();
        let train_q: BTreeSet<u32> = train.iter().map(|j| j.query_id).collect();
        let test_q: BTreeSet<u32> = test.iter().map(|j| j.query_id).collect();
        assert_eq!(train_q.len(), 7);
        assert_eq!(test_q.len(), 3);
        assert!(train_q.is_disjoint(&test_q));
        assert_eq!(train.len() + test.len(), judgments.len());
        let mut union: Vec<Judgment> = train.iter().chain(&test).cloned().collect();
        union.sort();
        let mut orig = judgments.clone();
        orig.sort();
        assert_eq!(union, orig);
        assert_eq!(split_by_query(&judgments, 0.7, 42).unwrap(), (train, test));
    }

    #[test]
    fn split_needs_two_queries() {
        let judgments = vec![Judgment::new(0, "a", true), Judgment::new(0, "b", false)];
        assert!(matches!(split_by_query(&judgments, 0.7, 1), Err(Error::CannotSplit(_))));
    }

    #[test]
    fn judgment_label_coding() {
        assert_eq!(Judgment::new(0, "a", true).is_rel_raw, 1);
        assert_eq!(Judgment::new(0, "a", true).label(), 1);
        assert_eq!(Judgment::new(0, "a", false).is_rel_raw, 2);
        assert_eq!(Judgment::new(0, "a", false).label(), 0);
    }
}
