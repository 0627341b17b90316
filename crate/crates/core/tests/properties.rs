mod common;

use std::collections::{BTreeMap, BTreeSet};

use cof_rank::corpus::{compute_stats, ingest, split_query_ids, write_corpus, Category, Corpus, Document, Query};
use cof_rank::features::{
    bm25, doc_model_prob, icf, idf, lm_score, tf, tf_idf, Bm25Params, FeatureMask, FeatureVector, Instance,
    SmoothingConfig, SmoothingMethod, FEATURE_COUNT,
};
use cof_rank::letor_io::{self, normalize_per_query, Dataset, DatasetHeader};
use cof_rank::metrics::{average_precision, err_at_k, ndcg_at_k, precision_at_k, RankedList};
use cof_rank::text_pipeline::{PipelineConfig, StopwordSet};
use proptest::prelude::*;

fn plain() -> PipelineConfig {
    PipelineConfig {
        stopwords: StopwordSet::empty(),
        ..PipelineConfig::default()
    }
}

fn body() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!["alpha", "beta", "gamma", "delta", "kappa", "sigma", "omega"]),
        0..15,
    )
    .prop_map(|w| w.join(" "))
}

fn corpus() -> impl Strategy<Value = Corpus> {
    prop::collection::vec((body(), body(), body(), 0u8..4), 1..10).prop_map(|docs| {
        let cfg = plain();
        Corpus::from_documents(
            docs.iter()
                .enumerate()
                .map(|(i, (s, l, b, c))| {
                    Document::new(format!("d{i}"), s, l, b, Category::from_code(*c).unwrap(), &cfg)
                })
                .collect(),
        )
        .unwrap()
    })
}

fn query() -> impl Strategy<Value = Query> {
    prop::collection::vec(
        prop::sample::select(vec!["alpha", "beta", "zeta", "omega", "kappa"]),
        1..4,
    )
    .prop_map(|t| Query::from_terms(1, &t))
}

fn labels() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 1..12)
}

proptest! {
    #[test]
    fn stats_match_naive_recount(c in corpus()) {
        let s = compute_stats(&c).unwrap();
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        let mut cf: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0u64;
        for d in c.documents() {
            let mut seen = BTreeSet::new();
            for p in &d.parts {
                for t in &p.tokens {
                    *cf.entry(t.clone()).or_default() += 1;
                    total += 1;
                    if seen.insert(t.clone()) {
                        *df.entry(t.clone()).or_default() += 1;
                    }
                }
            }
        }
        prop_assert_eq!(&s.df, &df);
        prop_assert_eq!(&s.cf, &cf);
        prop_assert_eq!(s.total_tokens, total);
        prop_assert_eq!(s.cf.values().sum::<u64>(), total);
        prop_assert!(s.df.iter().all(|(t, &d)| d >= 1 && d <= s.n_docs && d <= s.cf[t]));
        prop_assert_eq!(s.avgdl, total as f64 / c.len() as f64);
    }

    #[test]
    fn reingest_is_bit_identical(c in corpus()) {
        let mut first = Vec::new();
        write_corpus(&c, &mut first).unwrap();
        let again = ingest(first.as_slice(), &plain()).unwrap();
        let mut second = Vec::new();
        write_corpus(&again, &mut second).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(again.content_hash(), c.content_hash());
        prop_assert_eq!(again.documents(), c.documents());
    }

    #[test]
    fn split_is_a_partition(ids in prop::collection::btree_set(0u32..500, 2..60), frac in 0.05f64..0.95, seed: u64) {
        let (train, test) = split_query_ids(&ids, frac, seed).unwrap();
        prop_assert!(!train.is_empty() && !test.is_empty());
        prop_assert!(train.is_disjoint(&test));
        prop_assert_eq!(train.union(&test).copied().collect::<BTreeSet<_>>(), ids.clone());
        prop_assert_eq!(split_query_ids(&ids, frac, seed).unwrap(), (train, test));
    }

    #[test]
    fn feature_invariants(c in corpus(), q in query()) {
        let s = compute_stats(&c).unwrap();
        prop_assume!(s.total_tokens > 0);
        prop_assert!(idf(&q, &s) >= 0.0);
        prop_assert!(icf(&q, &s) >= 0.0);
        for d in c.documents() {
            let overlap = q.terms.iter().any(|t| d.term_count(t) > 0);
            let b = bm25(&q, d, &s, &Bm25Params::default()).unwrap();
            if !overlap {
                prop_assert_eq!(tf(&q, d), 0.0);
                prop_assert_eq!(tf_idf(&q, d, &s), 0.0);
                prop_assert_eq!(b, 0.0);
            }
            prop_assert!(b >= 0.0);
            for method in [SmoothingMethod::Dirichlet, SmoothingMethod::JelinekMercer, SmoothingMethod::AbsoluteDiscount] {
                let sm = SmoothingConfig { method, ..SmoothingConfig::default() };
                prop_assert!(lm_score(&q, d, &s, &sm).unwrap() <= 0.0);
            }
        }
    }

    #[test]
    fn bm25_without_length_normalization_ignores_length(c in corpus(), q in query(), pad in 1usize..20) {
        let s = compute_stats(&c).unwrap();
        prop_assume!(s.total_tokens > 0);
        let p = Bm25Params { k1: 1.2, b: 0.0 };
        let d = &c.documents()[0];
        let longer = Document::new("x", &d.parts[0].raw_text, &d.parts[1].raw_text,
            &format!("{} {}", d.parts[2].raw_text, "filler ".repeat(pad)), d.category, &plain());
        prop_assert_eq!(bm25(&q, d, &s, &p).unwrap(), bm25(&q, &longer, &s, &p).unwrap());
    }

    #[test]
    fn duplicating_the_corpus_keeps_idf_and_icf(c in corpus(), q in query()) {
        let s = compute_stats(&c).unwrap();
        prop_assume!(s.total_tokens > 0);
        let mut docs: Vec<Document> = c.documents().to_vec();
        for d in c.documents() {
            let mut copy = d.clone();
            copy.doc_id = format!("{}-copy", d.doc_id);
            docs.push(copy);
        }
        let s2 = compute_stats(&Corpus::from_documents(docs).unwrap()).unwrap();
        prop_assert!((idf(&q, &s) - idf(&q, &s2)).abs() < 1e-12);
        prop_assert!((icf(&q, &s) - icf(&q, &s2)).abs() < 1e-12);
    }

    #[test]
    fn smoothed_models_are_distributions(c in corpus()) {
        let s = compute_stats(&c).unwrap();
        prop_assume!(s.total_tokens > 0);
        for method in [SmoothingMethod::Dirichlet, SmoothingMethod::JelinekMercer, SmoothingMethod::AbsoluteDiscount] {
            let sm = SmoothingConfig { method, ..SmoothingConfig::default() };
            for d in c.documents() {
                let total: f64 = s.vocabulary().map(|t| doc_model_prob(t, d, &s, &sm)).sum();
                prop_assert!((total - 1.0).abs() < 1e-9, "{:?} {}", method, total);
            }
        }
    }

    #[test]
    fn letor_roundtrip_and_normalization(rows in prop::collection::vec((1u32..5, 0u8..2, prop::array::uniform12(-1e4f64..1e4)), 1..30)) {
        let instances: Vec<Instance> = rows
            .iter()
            .enumerate()
            .map(|(i, (q, y, v))| Instance { query_id: *q, doc_id: format!("doc{i}"), label: *y, features: FeatureVector(*v) })
            .collect();
        let mask = FeatureMask::from_slots(&[2]).unwrap();
        let data = Dataset::from_instances(instances, DatasetHeader::with_mask(mask));
        let mut buf = Vec::new();
        letor_io::write(&data, &mut buf).unwrap();
        let back = letor_io::read(buf.as_slice()).unwrap();
        prop_assert_eq!(back.header.mask, mask);
        prop_assert_eq!(back.len(), data.len());
        for (a, b) in data.instances().zip(back.instances()) {
            prop_assert_eq!((&a.doc_id, a.label, a.query_id), (&b.doc_id, b.label, b.query_id));
            for f in 0..FEATURE_COUNT {
                let x = a.features.0[f];
                prop_assert!((x - b.features.0[f]).abs() <= 1e-5 * x.abs().max(1e-300), "{} vs {}", x, b.features.0[f]);
            }
        }
        let n1 = normalize_per_query(&data);
        prop_assert_eq!(normalize_per_query(&n1), n1.clone());
        for (g, h) in data.groups().iter().zip(n1.groups()) {
            for f in 0..FEATURE_COUNT {
                for a in 0..g.instances.len() {
                    for c in 0..g.instances.len() {
                        let raw = g.instances[a].features.0[f].partial_cmp(&g.instances[c].features.0[f]).unwrap();
                        let norm = h.instances[a].features.0[f].partial_cmp(&h.instances[c].features.0[f]).unwrap();
                        prop_assert_eq!(raw, norm);
                    }
                }
                prop_assert!(h.instances.iter().all(|i| (0.0..=1.0).contains(&i.features.0[f])));
            }
        }
    }

    #[test]
    fn metrics_lie_in_unit_interval(y in labels(), k in 1usize..=10) {
        for v in [precision_at_k(&y, k), ndcg_at_k(&y, k), err_at_k(&y, k, 1)] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if let Ok(ap) = average_precision(&y) {
            prop_assert!((0.0..=1.0).contains(&ap));
            prop_assert!((ap - common::ap_oracle(&y).unwrap()).abs() < 1e-12);
        } else {
            prop_assert!(y.iter().all(|&l| l == 0));
        }
    }

    #[test]
    fn metrics_ignore_affine_score_changes(y in labels(), scale in 0.1f64..10.0, shift in -5.0f64..5.0, seed: u64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = y.iter().map(|_| f64::from(rng.gen_range(0..6u8))).collect();
        let a = RankedList::from_triples(1, y.iter().zip(&scores).enumerate().map(|(i, (l, s))| (format!("d{i:02}"), *s, *l)));
        let b = RankedList::from_triples(1, y.iter().zip(&scores).enumerate().map(|(i, (l, s))| (format!("d{i:02}"), s * scale + shift, *l)));
        prop_assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn promoting_a_relevant_document_never_hurts(y in labels(), k in 1usize..=10) {
        for i in 1..y.len() {
            if y[i] > y[i - 1] {
                let mut better = y.clone();
                better.swap(i, i - 1);
                prop_assert!(ndcg_at_k(&better, k) >= ndcg_at_k(&y, k));
                prop_assert!(err_at_k(&better, k, 1) >= err_at_k(&y, k, 1));
                prop_assert!(precision_at_k(&better, k) >= precision_at_k(&y, k));
                prop_assert!(average_precision(&better).unwrap() > average_precision(&y).unwrap());
            }
        }
    }
}
