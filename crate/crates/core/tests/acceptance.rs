//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use cof_rank::corpus::{compute_stats, ingest, write_corpus, Category, Corpus, Document, Query};
use cof_rank::features::{
    bm25_term_weight, doc_model_prob, icf, idf, tf, tf_idf, Bm25Params, FeatureMask, FeaturePreset, FeatureVector,
    Instance, SmoothingConfig, SmoothingMethod, FEATURE_COUNT,
};
use cof_rank::letor_io::{self, Dataset, DatasetHeader};
use cof_rank::metrics::{average_precision, err_at_k, ndcg_at_k, precision_at_k, report, Metric};
use cof_rank::rankers::neural::{frozen_pairs, lambdarank_objective, listnet_objective};
use cof_rank::rankers::{load, save, train, NeuralScorer, RankerKind, TrainConfig, TrainingQuery};
use cof_rank::reproduce::{self, ReproduceConfig, ReproduceReport, FOOTER};
use cof_rank::synth::{generate, SynthConfig};
use cof_rank::text_pipeline::{porter_stem, tokenize, PipelineConfig, Stemmer, StopwordSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn precision_oracle(labels: &[u8], k: usize) -> f64 {
    labels.iter().take(k).filter(|&&y| y > 0).count() as f64 / k as f64
}

fn err_oracle(labels: &[u8], k: usize, y_max: u8) -> f64 {
    let r = |y: u8| (2f64.powi(i32::from(y)) - 1.0) / 2f64.powi(i32::from(y_max));
    (0..labels.len().min(k))
        .map(|i| r(labels[i]) / (i + 1) as f64 * labels[..i].iter().map(|&y| 1.0 - r(y)).product::<f64>())
        .sum()
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.4))).collect();
        labels[rng.gen_range(0..n)] = 1;
        labels.sort_unstable_by(|a, b| b.cmp(a));
        for k in 1..=10 {
            let v = ndcg_at_k(&labels, k);
            check(v == 1.0, || format!("ideal NDCG@{k} = {v} for {labels:?}"))?;
        }
    }
    let mut evaluated = 0usize;
    for n in 1..=8 {
        for trial in 0..4 {
            let base: Vec<u8> = (0..n)
                .map(|i| {
                    if trial == 3 {
                        rng.gen_range(0..=2)
                    } else {
                        u8::from(i == 0 || rng.gen_bool(0.5))
                    }
                })
                .collect();
            let y_max = *base.iter().max().unwrap();
            for p in permutations(&base) {
                if let Some(ap) = common::ap_oracle(&p) {
                    let got = average_precision(&p).map_err(|e| e.to_string())?;
                    check((got - ap).abs() < 1e-9, || format!("AP {p:?}: {got} vs {ap}"))?;
                }
                for k in 1..=10 {
                    let (pk, po) = (precision_at_k(&p, k), precision_oracle(&p, k));
                    check((pk - po).abs() < 1e-9, || format!("P@{k} {p:?}: {pk} vs {po}"))?;
                    let (e, eo) = (err_at_k(&p, k, y_max.max(1)), err_oracle(&p, k, y_max.max(1)));
                    check((e - eo).abs() < 1e-9, || format!("ERR@{k} {p:?}: {e} vs {eo}"))?;
                }
                evaluated += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "1000 ideal lists, {evaluated} permutations, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

/// (query, documents); the first document is the one scored.
const FIXTURES: [(&str, &[&str]); 20] = [
    ("apple", &["apple banana", "banana cherry"]),
    ("apple banana", &["apple apple banana", "banana", "cherry date"]),
    ("cherry", &["apple", "cherry cherry cherry", "cherry"]),
    ("date fig", &["date fig fig", "fig", "date", "grape"]),
    ("grape", &["grape", "grape", "grape"]),
    ("apple kiwi", &["apple", "kiwi kiwi", "lemon apple kiwi"]),
    ("lemon", &["mango", "lemon", "lemon lemon lemon lemon"]),
    (
        "mango apple",
        &["mango mango mango apple", "apple", "apple", "apple mango"],
    ),
    ("melon", &["apple", "banana"]),
    (
        "nut olive pear",
        &["nut olive pear", "nut", "olive olive", "pear pear pear"],
    ),
    ("apple apple", &["apple", "apple banana", "banana"]),
    (
        "quince",
        &["quince quince", "quince raisin", "raisin raisin raisin", "apple"],
    ),
    ("banana date", &["apple", "banana date banana", "date"]),
    (
        "fig",
        &["fig fig fig fig fig", "fig grape", "grape grape", "apple", "kiwi"],
    ),
    ("kiwi lemon", &["kiwi", "lemon", "kiwi lemon"]),
    ("olive", &["olive pear quince raisin", "olive", "pear", "quince"]),
    ("pear raisin", &["raisin", "pear raisin pear", "apple pear"]),
    (
        "apple cherry melon",
        &["cherry melon", "apple", "cherry apple melon melon"],
    ),
    (
        "grape",
        &["grape lemon mango", "grape", "lemon", "mango", "grape mango"],
    ),
    ("date", &["date", "date date", "date date date"]),
];

fn raw_pipeline() -> PipelineConfig {
    PipelineConfig {
        stopwords: StopwordSet::empty(),
        stemmer: Stemmer::None,
        ..PipelineConfig::default()
    }
}

fn feature_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let params = Bm25Params {
            k1: rng.gen_range(0.01..5.0),
            b: rng.gen_range(0.0..=1.0),
        };
        let len = rng.gen_range(1..500usize);
        let idf = rng.gen_range(0.0..10.0);
        let w = bm25_term_weight(idf, 1, len, len as f64, &params).map_err(|e| e.to_string())?;
        check((w - idf).abs() < 1e-12, || {
            format!("BM25 weight {w} vs IDF {idf} ({params:?})")
        })?;
    }

    let cfg = raw_pipeline();
    for (n, (q, bodies)) in FIXTURES.iter().enumerate() {
        let docs: Vec<Document> = bodies
            .iter()
            .enumerate()
            .map(|(i, b)| Document::new(format!("d{i}"), "", "", b, Category::Political, &cfg))
            .collect();
        let corpus = Corpus::from_documents(docs).map_err(|e| e.to_string())?;
        let stats = compute_stats(&corpus).map_err(|e| e.to_string())?;
        let query = Query::new(1, q, &cfg);
        let target = corpus.get("d0").unwrap();

        let words: Vec<Vec<&str>> = bodies.iter().map(|b| b.split(' ').collect()).collect();
        let n_docs = words.len() as f64;
        let total: f64 = words.iter().map(|w| w.len() as f64).sum();
        let terms: BTreeSet<&str> = q.split(' ').collect();
        let (mut e_tf, mut e_idf, mut e_tfidf, mut e_icf) = (0.0, 0.0, 0.0, 0.0);
        for t in terms {
            let c = words[0].iter().filter(|w| **w == t).count() as f64;
            let df = words.iter().filter(|d| d.contains(&t)).count() as f64;
            let cf: f64 = words.iter().map(|d| d.iter().filter(|w| **w == t).count() as f64).sum();
            let idf_t = if df > 0.0 { (n_docs / df).ln() } else { 0.0 };
            if c > 0.0 {
                e_tf += (c + 1.0).ln();
                e_tfidf += (c + 1.0).ln() * idf_t;
            }
            e_idf += idf_t;
            if cf > 0.0 {
                e_icf += (total / cf).ln();
            }
        }
        for (name, got, want) in [
            ("TF", tf(&query, target), e_tf),
            ("IDF", idf(&query, &stats), e_idf),
            ("TF-IDF", tf_idf(&query, target, &stats), e_tfidf),
            ("ICF", icf(&query, &stats), e_icf),
        ] {
            check((got - want).abs() < 1e-12, || {
                format!("fixture {n} {name}: {got} vs {want}")
            })?;
        }
    }

    let synth = generate(&SynthConfig::with_seed(7), &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let stats = compute_stats(&synth.corpus).map_err(|e| e.to_string())?;
    let empty = Document::new("empty", "", "", "", Category::Sports, &PipelineConfig::default());
    let mut checked = 0;
    for method in [
        SmoothingMethod::Dirichlet,
        SmoothingMethod::JelinekMercer,
        SmoothingMethod::AbsoluteDiscount,
    ] {
        let sm = SmoothingConfig {
            method,
            ..SmoothingConfig::default()
        };
        for d in synth.corpus.documents().iter().step_by(10).chain([&empty]) {
            let sum: f64 = stats.vocabulary().map(|t| doc_model_prob(t, d, &stats, &sm)).sum();
            check((sum - 1.0).abs() < 1e-9, || {
                format!("{method:?} on {}: mass {sum}", d.doc_id)
            })?;
            checked += 1;
        }
    }
    Ok(format!("1000 BM25 identities, 20 fixtures, {checked} smoothed models"))
}

fn pipeline_suite() -> Outcome {
    let fixture = include_str!("data/news_fixture.jsonl");
    let cfg = PipelineConfig::default();
    let corpus = ingest(fixture.as_bytes(), &cfg).map_err(|e| e.to_string())?;
    check(corpus.len() == 100, || format!("{} documents", corpus.len()))?;
    let stop = StopwordSet::english();
    let mut emitted = 0;
    for d in corpus.documents() {
        for part in &d.parts {
            let raw: Vec<&str> = tokenize(&part.raw_text, cfg.digit_policy)
                .into_iter()
                .filter(|r| !stop.contains(r) && (2..=25).contains(&r.chars().count()))
                .collect();
            check(raw.len() == part.tokens.len(), || {
                format!("{}: token count mismatch", d.doc_id)
            })?;
            for (term, r) in part.tokens.iter().zip(raw) {
                check(!term.chars().any(char::is_uppercase), || {
                    format!("{term} not lowercase")
                })?;
                check(*term == porter_stem(&r.to_lowercase()), || {
                    format!("{term} is not the stem of {r}")
                })?;
                check(!stop.contains(term), || format!("{term} (from {r}) is a stopword"))?;
                emitted += 1;
            }
        }
    }
    let render = |c: &Corpus| {
        let mut out = Vec::new();
        write_corpus(c, &mut out).map(|_| out).map_err(|e| e.to_string())
    };
    let again = ingest(fixture.as_bytes(), &cfg).map_err(|e| e.to_string())?;
    check(render(&corpus)? == render(&again)?, || {
        "second ingestion differs".into()
    })?;
    check(corpus.content_hash() == again.content_hash(), || {
        "content hash differs".into()
    })?;
    let from_output = ingest(render(&corpus)?.as_slice(), &cfg).map_err(|e| e.to_string())?;
    check(render(&from_output)? == render(&corpus)?, || {
        "re-ingesting the output differs".into()
    })?;
    Ok(format!("{emitted} terms checked"))
}

fn reproduction(report: &ReproduceReport, elapsed: Duration) -> Outcome {
    let v = |k, m| report.train_value(k, m).unwrap_or(f64::NAN);
    for kind in [RankerKind::Mart, RankerKind::LambdaMart] {
        let (map, ndcg) = (v(kind, Metric::Map), v(kind, Metric::Ndcg(10)));
        check(map == 1.0 && ndcg == 1.0, || {
            format!("{kind}: MAP {map}, NDCG@10 {ndcg}")
        })?;
    }
    let ada = v(RankerKind::AdaRank, Metric::Map);
    check(ada >= 0.95, || format!("AdaRank MAP {ada}"))?;
    check(report.tables().contains(FOOTER), || "footer missing".into())?;
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("AdaRank MAP {ada:.4}, {:.2}s", elapsed.as_secs_f64()))
}

fn leakage(faithful: &ReproduceReport, safe: &ReproduceReport) -> Outcome {
    let mut parts = Vec::new();
    for kind in RankerKind::ALL {
        let f = faithful.train_value(kind, Metric::Map).unwrap_or(f64::NAN);
        let s = safe.train_value(kind, Metric::Map).unwrap_or(f64::NAN);
        check(s < f, || format!("{kind}: leakage-safe {s} vs paper-faithful {f}"))?;
        parts.push(format!("{} {s:.4}<{f:.4}", kind.display_name()));
    }
    Ok(parts.join(", "))
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn gradient_checks() -> Outcome {
    let mut worst: f64 = 0.0;
    for problem in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + problem);
        let data = common::random_dataset(
            rng.gen_range(1..=3),
            rng.gen_range(3..=6),
            4,
            problem,
            FeatureMask::NONE,
        );
        let queries: Vec<TrainingQuery> = data
            .groups()
            .iter()
            .map(|g| TrainingQuery::from_group(g, FeatureMask::NONE))
            .collect();
        let hidden = if problem % 2 == 0 { 0 } else { 3 };
        let mut scorer = NeuralScorer::init(&queries, hidden, problem);
        scorer.params.iter_mut().for_each(|w| *w = rng.gen_range(-0.5..0.5));
        let pairs = frozen_pairs(&scorer, &queries, 10);
        type Objective<'a> = Box<dyn Fn(&NeuralScorer) -> (f64, Vec<f64>) + 'a>;
        let objectives: [(&str, Objective); 2] = [
            ("ListNet", Box::new(|s: &NeuralScorer| listnet_objective(s, &queries))),
            (
                "LambdaRank",
                Box::new(|s: &NeuralScorer| lambdarank_objective(s, &queries, &pairs)),
            ),
        ];
        for (name, f) in &objectives {
            let (_, grad) = f(&scorer);
            for (i, &gi) in grad.iter().enumerate() {
                let h = 1e-3;
                let at = |offset: f64| {
                    let mut moved = scorer.clone();
                    moved.params[i] += offset;
                    f(&moved).0
                };
                // five-point central difference
                let numeric = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
                if numeric.abs() < 1e-9 && gi.abs() < 1e-9 {
                    continue;
                }
                let err = relative_error(gi, numeric);
                worst = worst.max(err);
                check(err < 1e-5, || {
                    format!("{name} problem {problem} param {i}: {gi} vs {numeric}")
                })?;
            }
        }
    }
    Ok(format!("50 problems, worst relative error {worst:.2e}"))
}

fn synthetic_dataset(preset: FeaturePreset) -> Result<Dataset, String> {
    let pipeline = PipelineConfig::default();
    let synth = generate(&SynthConfig::with_seed(7), &pipeline).map_err(|e| e.to_string())?;
    let stats = compute_stats(&synth.corpus).map_err(|e| e.to_string())?;
    let cfg = cof_rank::features::FeatureConfig {
        preset,
        ..Default::default()
    };
    cof_rank::features::build_dataset(&synth.corpus, &stats, &synth.queries, &synth.judgments, &cfg)
        .map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let data = synthetic_dataset(FeaturePreset::LeakageSafe)?;
    let cfg = TrainConfig {
        seed: 11,
        hidden: 4,
        ..TrainConfig::default()
    };
    for kind in RankerKind::ALL {
        let mut files = Vec::new();
        let mut reports = Vec::new();
        for _ in 0..2 {
            let model = train(kind, &data, &cfg).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            save(&model, &mut buf).map_err(|e| e.to_string())?;
            files.push(buf);
            reports.push(report(&model.rank_dataset(&data), "train").map_err(|e| e.to_string())?);
        }
        check(files[0] == files[1], || format!("{kind}: model files differ"))?;
        check(reports[0] == reports[1], || format!("{kind}: reports differ"))?;
        check(reports[0].to_csv() == reports[1].to_csv(), || {
            format!("{kind}: report CSV differs")
        })?;
    }
    let a = reproduce::run(&ReproduceConfig::new(5)).map_err(|e| e.to_string())?;
    let b = reproduce::run(&ReproduceConfig::new(5)).map_err(|e| e.to_string())?;
    check(a.to_csv() == b.to_csv(), || "reproduce output differs".into())?;
    Ok("five rankers and one reproduce run, twice each".into())
}

fn roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut values = 0;
    for fixture in 0..20 {
        let mut instances = Vec::new();
        for q in 1..=rng.gen_range(1..5u32) {
            for d in 0..rng.gen_range(1..8) {
                let mut v = [0.0; FEATURE_COUNT];
                for x in v.iter_mut() {
                    let mag = 10f64.powi(rng.gen_range(-6..7));
                    *x = *[0.0, rng.gen_range(-1.0..1.0) * mag].choose(&mut rng).unwrap();
                }
                instances.push(Instance {
                    query_id: q,
                    doc_id: format!("f{fixture}q{q}d{d}"),
                    label: rng.gen_range(0..2),
                    features: FeatureVector(v),
                });
            }
        }
        let slots: Vec<usize> = (1..=FEATURE_COUNT).filter(|_| rng.gen_bool(0.2)).collect();
        let mask = FeatureMask::from_slots(&slots).map_err(|e| e.to_string())?;
        let data = Dataset::from_instances(instances, DatasetHeader::with_mask(mask));
        let mut buf = Vec::new();
        letor_io::write(&data, &mut buf).map_err(|e| e.to_string())?;
        let back = letor_io::read(buf.as_slice()).map_err(|e| e.to_string())?;
        check(back.header.mask == mask, || format!("fixture {fixture}: mask lost"))?;
        let pairs: Vec<(&Instance, &Instance)> = data.instances().zip(back.instances()).collect();
        check(pairs.len() == data.len() && back.len() == data.len(), || {
            format!("fixture {fixture}: row count")
        })?;
        for (a, b) in pairs {
            check(
                a.doc_id == b.doc_id && a.label == b.label && a.query_id == b.query_id,
                || format!("fixture {fixture}: identity"),
            )?;
            for f in 0..FEATURE_COUNT {
                let (x, y) = (a.features.0[f], b.features.0[f]);
                check((x - y).abs() <= 5e-6 * x.abs(), || {
                    format!("fixture {fixture}: {x} read back as {y}")
                })?;
                values += 1;
            }
        }
    }

    let data = synthetic_dataset(FeaturePreset::PaperFaithful)?;
    let cfg = TrainConfig {
        rounds: Some(40),
        hidden: 3,
        ..TrainConfig::default()
    };
    for kind in RankerKind::ALL {
        let model = train(kind, &data, &cfg).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        save(&model, &mut buf).map_err(|e| e.to_string())?;
        let back = load(buf.as_slice()).map_err(|e| e.to_string())?;
        for _ in 0..200 {
            let mut v = [0.0; FEATURE_COUNT];
            v.iter_mut().for_each(|x| *x = rng.gen_range(-50.0..50.0));
            let v = FeatureVector(v);
            check(model.score(&v).to_bits() == back.score(&v).to_bits(), || {
                format!("{kind}: score changed after reload")
            })?;
        }
    }
    Ok(format!("{values} LETOR values, 5 models x 200 vectors"))
}

fn main() {
    let mut results: BTreeMap<usize, (&str, Outcome)> = BTreeMap::new();
    results.insert(1, ("metric oracles", metric_oracles()));
    results.insert(2, ("feature algebra", feature_algebra()));
    results.insert(3, ("pipeline", pipeline_suite()));

    let start = Instant::now();
    let faithful = reproduce::run(&ReproduceConfig::new(7));
    let elapsed = start.elapsed();
    let safe = reproduce::run(&ReproduceConfig::new(7).with_preset(FeaturePreset::LeakageSafe));
    match (&faithful, &safe) {
        (Ok(f), Ok(s)) => {
            results.insert(4, ("reproduction, seed 7", reproduction(f, elapsed)));
            results.insert(5, ("leakage sanity", leakage(f, s)));
        }
        (Err(e), _) | (_, Err(e)) => {
            results.insert(4, ("reproduction, seed 7", Err(e.to_string())));
            results.insert(5, ("leakage sanity", Err(e.to_string())));
        }
    }
    results.insert(6, ("gradient checks", gradient_checks()));
    results.insert(7, ("determinism", determinism()));
    results.insert(8, ("roundtrips", roundtrips()));

    let mut failed = 0;
    for (n, (name, outcome)) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
