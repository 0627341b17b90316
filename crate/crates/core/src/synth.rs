//! Synthetic news corpus with ten queries of ten relevant and five
//! non-relevant documents each.
//!
//! Words are consonant-vowel pseudo-words that survive preprocessing
//! unchanged. Background text is Zipf-distributed over 490 of them; the other
//! ten are reserved, one per query. A relevant document carries its query's
//! reserved term in the subject, lead and body. Two of every five
//! non-relevant documents are twins of a relevant one: same category, same
//! part lengths and same query-term counts per part, so only the relevance
//! code tells them apart.

use std::collections::{BTreeSet, HashSet};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Category, Corpus, Document, Judgment, Query};
use crate::error::{Error, Result};
use crate::text_pipeline::{process, PipelineConfig};

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aiou";
const VOCABULARY_SEED: u64 = 0x00c0_ffee;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub queries: usize,
    pub relevant_per_query: usize,
    pub non_relevant_per_query: usize,
    pub twins_per_query: usize,
    pub background_docs: usize,
    pub vocabulary: usize,
    pub zipf_exponent: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            queries: 10,
            relevant_per_query: 10,
            non_relevant_per_query: 5,
            twins_per_query: 2,
            background_docs: 250,
            vocabulary: 500,
            zipf_exponent: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.queries == 0 || self.relevant_per_query == 0 {
            return Err(Error::Config(
                "synthetic corpus needs queries with relevant documents".into(),
            ));
        }
        if self.twins_per_query > self.non_relevant_per_query.min(self.relevant_per_query) {
            return Err(Error::Config(
                "twins_per_query exceeds the judged documents available".into(),
            ));
        }
        if self.vocabulary < self.queries + 20 {
            return Err(Error::Config(format!(
                "vocabulary of {} is too small for {} queries",
                self.vocabulary, self.queries
            )));
        }
        if !(self.zipf_exponent > 0.0) {
            return Err(Error::Config("zipf exponent must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub corpus: Corpus,
    pub queries: Vec<Query>,
    pub judgments: Vec<Judgment>,
    /// The reserved term of each query, by query id.
    pub query_terms: Vec<String>,
}

/// `size` distinct pseudo-words, each a fixpoint of the default pipeline.
/// Independent of any seed.
pub fn vocabulary(size: usize) -> Vec<String> {
    let syllables: Vec<String> = CONSONANTS
        .iter()
        .flat_map(|&c| VOWELS.iter().map(move |&v| String::from_utf8(vec![c, v]).unwrap()))
        .collect();
    let mut candidates: Vec<String> = Vec::new();
    for a in &syllables {
        for b in &syllables {
            candidates.push(format!("{a}{b}"));
            for c in &syllables {
                candidates.push(format!("{a}{b}{c}"));
            }
        }
    }
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(VOCABULARY_SEED));
    let cfg = PipelineConfig::default();
    candidates
        .into_iter()
        .filter(|w| process(w, &cfg) == [w.as_str()])
        .take(size)
        .collect()
}

#[derive(Debug, Clone)]
struct PartSpec {
    len: usize,
    counts: Vec<(String, u32)>,
}

#[derive(Debug, Clone)]
struct DocSpec {
    category: Category,
    parts: [PartSpec; 3],
    /// Query terms background filler must avoid.
    reserved: Vec<String>,
}

enum Role {
    Judged { query: u32, relevant: bool },
    Background,
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    background: &'a [String],
    zipf: WeightedIndex<f64>,
}

impl Generator<'_> {
    fn category(&mut self) -> Category {
        Category::ALL[self.rng.gen_range(0..4)]
    }

    fn lengths(&mut self) -> [usize; 3] {
        [
            self.rng.gen_range(4..=8),
            self.rng.gen_range(12..=24),
            self.rng.gen_range(40..=120),
        ]
    }

    fn filler(&mut self, avoid: &HashSet<&str>) -> String {
        loop {
            let w = &self.background[self.zipf.sample(&mut self.rng)];
            if !avoid.contains(w.as_str()) {
                return w.clone();
            }
        }
    }

    fn render(&mut self, spec: &DocSpec) -> [String; 3] {
        let avoid: HashSet<&str> = spec.reserved.iter().map(String::as_str).collect();
        let mut out: [String; 3] = Default::default();
        for (p, part) in spec.parts.iter().enumerate() {
            let mut words: Vec<String> = part
                .counts
                .iter()
                .flat_map(|(t, c)| std::iter::repeat_n(t.clone(), *c as usize))
                .collect();
            while words.len() < part.len {
                words.push(self.filler(&avoid));
            }
            words.shuffle(&mut self.rng);
            out[p] = if p == 0 {
                sentence(&words, false)
            } else {
                let mut sentences = Vec::new();
                let mut rest = words.as_slice();
                while !rest.is_empty() {
                    let n = self.rng.gen_range(6..=12).min(rest.len());
                    sentences.push(sentence(&rest[..n], true));
                    rest = &rest[n..];
                }
                sentences.join(" ")
            };
        }
        out
    }
}

fn sentence(words: &[String], period: bool) -> String {
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    if period {
        s.push('.');
    }
    s
}

pub fn generate(cfg: &SynthConfig, pipeline: &PipelineConfig) -> Result<SynthData> {
    cfg.validate()?;
    let words = vocabulary(cfg.vocabulary);
    if words.len() < cfg.vocabulary {
        return Err(Error::Config(format!(
            "only {} pseudo-words available, {} requested",
            words.len(),
            cfg.vocabulary
        )));
    }
    let (reserved, background) = words.split_at(cfg.queries);
    let weights: Vec<f64> = (1..=background.len())
        .map(|r| (r as f64).powf(-cfg.zipf_exponent))
        .collect();
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        background,
        zipf: WeightedIndex::new(weights).expect("positive weights"),
    };

    let mut query_texts = Vec::new();
    let mut specs: Vec<(DocSpec, Role)> = Vec::new();
    for (q, main) in reserved.iter().take(cfg.queries).cloned().enumerate() {
        let mut extras = BTreeSet::new();
        let n_extra = g.rng.gen_range(0..=2);
        while extras.len() < n_extra {
            extras.insert(background[g.rng.gen_range(20..100)].clone());
        }
        let extras: Vec<String> = extras.into_iter().collect();
        let mut text = vec![main.clone()];
        text.extend(extras.iter().cloned());
        query_texts.push(text.join(" "));
        let reserved_terms: Vec<String> = text.clone();

        let mut relevant = Vec::new();
        for _ in 0..cfg.relevant_per_query {
            let lens = g.lengths();
            let main_counts = [1, g.rng.gen_range(1..=2), g.rng.gen_range(1..=4)];
            let parts = [0, 1, 2].map(|p| {
                let mut counts = vec![(main.clone(), main_counts[p])];
                for e in &extras {
                    let c = if p == 0 { 0 } else { g.rng.gen_range(0..=1) };
                    counts.push((e.clone(), c));
                }
                PartSpec { len: lens[p], counts }
            });
            let spec = DocSpec {
                category: g.category(),
                parts,
                reserved: reserved_terms.clone(),
            };
            relevant.push(spec.clone());
            specs.push((
                spec,
                Role::Judged {
                    query: q as u32,
                    relevant: true,
                },
            ));
        }
        let originals: Vec<usize> =
            rand::seq::index::sample(&mut g.rng, relevant.len(), cfg.twins_per_query).into_vec();
        for &o in &originals {
            specs.push((
                relevant[o].clone(),
                Role::Judged {
                    query: q as u32,
                    relevant: false,
                },
            ));
        }
        for _ in cfg.twins_per_query..cfg.non_relevant_per_query {
            let lens = g.lengths();
            let main_counts = [0, u32::from(g.rng.gen_bool(0.25)), u32::from(g.rng.gen_bool(0.5))];
            let parts = [0, 1, 2].map(|p| {
                let mut counts = vec![(main.clone(), main_counts[p])];
                for e in &extras {
                    let c = if p == 0 { 0 } else { g.rng.gen_range(0..=1) };
                    counts.push((e.clone(), c));
                }
                PartSpec { len: lens[p], counts }
            });
            let spec = DocSpec {
                category: g.category(),
                parts,
                reserved: reserved_terms.clone(),
            };
            specs.push((
                spec,
                Role::Judged {
                    query: q as u32,
                    relevant: false,
                },
            ));
        }
    }
    for _ in 0..cfg.background_docs {
        let lens = g.lengths();
        let mut body = Vec::new();
        if g.rng.gen_bool(0.1) {
            body.push((reserved[g.rng.gen_range(0..cfg.queries)].clone(), 1));
        }
        let parts = [
            PartSpec {
                len: lens[0],
                counts: vec![],
            },
            PartSpec {
                len: lens[1],
                counts: vec![],
            },
            PartSpec {
                len: lens[2],
                counts: body,
            },
        ];
        let spec = DocSpec {
            category: g.category(),
            parts,
            reserved: reserved.to_vec(),
        };
        specs.push((spec, Role::Background));
    }

    let mut slots: Vec<usize> = (0..specs.len()).collect();
    slots.shuffle(&mut g.rng);
    let width = specs.len().to_string().len().max(4);
    let mut docs = Vec::with_capacity(specs.len());
    let mut judgments = Vec::new();
    for (i, (spec, role)) in specs.iter().enumerate() {
        let id = format!("n{:0width$}", slots[i]);
        let [subject, lead, body] = g.render(spec);
        docs.push(Document::new(
            id.clone(),
            &subject,
            &lead,
            &body,
            spec.category,
            pipeline,
        ));
        if let Role::Judged { query, relevant } = role {
            judgments.push(Judgment::new(*query, id, *relevant));
        }
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    judgments.sort_by(|a, b| (a.query_id, &a.doc_id).cmp(&(b.query_id, &b.doc_id)));
    let queries = query_texts
        .iter()
        .enumerate()
        .map(|(q, t)| Query::new(q as u32, t, pipeline))
        .collect();
    Ok(SynthData {
        corpus: Corpus::from_documents(docs)?,
        queries,
        judgments,
        query_terms: reserved.to_vec(),
    })
}
