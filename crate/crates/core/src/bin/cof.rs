use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cof_rank::config::RunConfig;
use cof_rank::corpus::{self, compute_stats, split_query_ids};
use cof_rank::error::{Error, Result};
use cof_rank::features::{build_dataset, FeaturePreset};
use cof_rank::letor_io::{self, Dataset};
use cof_rank::metrics::{report_with, Metric};
use cof_rank::rankers::{self, RankerKind};
use cof_rank::reproduce::{self, ReproduceConfig};
use cof_rank::synth::{self, SynthConfig};
use cof_rank::text_pipeline::top_terms;

#[derive(Parser)]
#[command(name = "cof", version, about = "Learning to rank over news documents")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// paper-faithful or leakage-safe.
    #[arg(long, global = true)]
    preset: Option<FeaturePreset>,
    /// adarank, listnet, mart, lambdarank or lambdamart.
    #[arg(long, global = true)]
    algorithm: Option<RankerKind>,
    /// map, ndcg@k, err@k or p@k.
    #[arg(long, global = true)]
    metric: Option<Metric>,
    /// Largest reported cutoff.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=10))]
    k: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and preprocess a JSONL corpus.
    Ingest {
        corpus: PathBuf,
        /// Write the validated corpus back out, sorted by doc id.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write corpus statistics as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Print corpus statistics and the most frequent terms.
    Stats {
        corpus: PathBuf,
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Compute feature vectors for judged pairs.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Min-max scale each feature within each query.
        #[arg(long)]
        normalize: bool,
    },
    /// Split a dataset by query into train and test files.
    Split {
        dataset: PathBuf,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Train a ranking model.
    Train {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        leaves: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
    },
    /// Evaluate a model on a dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print ranked lists.
    Rank {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        query: Option<u32>,
    },
    /// Write a synthetic corpus, queries and judgments.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train and evaluate all five rankers on a synthetic corpus.
    Reproduce {
        #[arg(long)]
        rounds: Option<usize>,
        /// Write the results as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot open {}: {e}", path.display()),
        ))
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create {}: {e}", path.display()),
        ))
    })
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    letor_io::read(open(path)?)
}

fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    letor_io::write(dataset, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(p) = cli.preset {
        cfg.features.preset = p;
    }
    if let Some(a) = cli.algorithm {
        cfg.algorithm = a;
    }
    if let Some(m) = cli.metric {
        cfg.train.metric = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cutoffs(cli: &Cli) -> Vec<usize> {
    (1..=cli.k.unwrap_or(10) as usize).collect()
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = run_config(cli)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Ingest {
            corpus: path,
            out: dest,
            stats,
        } => {
            let c = corpus::ingest(open(path)?, &cfg.pipeline)?;
            let s = compute_stats(&c)?;
            if let Some(dest) = dest {
                let mut w = create(dest)?;
                corpus::write_corpus(&c, &mut w)?;
                w.flush()?;
            }
            if let Some(p) = stats {
                let mut w = create(p)?;
                s.to_json(&mut w)?;
                w.flush()?;
            }
            writeln!(
                out,
                "documents={} tokens={} vocabulary={} avgdl={:.4} hash={}",
                s.n_docs,
                s.total_tokens,
                s.vocabulary_size(),
                s.avgdl,
                c.content_hash()
            )?;
        }
        Command::Stats { corpus: path, top } => {
            let c = corpus::ingest(open(path)?, &cfg.pipeline)?;
            let s = compute_stats(&c)?;
            writeln!(out, "N      {}", s.n_docs)?;
            writeln!(out, "|C|    {}", s.total_tokens)?;
            writeln!(out, "|V|    {}", s.vocabulary_size())?;
            writeln!(out, "avgdl  {:.4}", s.avgdl)?;
            writeln!(out, "{:<26}{:>8}{:>8}", "term", "cf", "df")?;
            for term in top_terms(&s, *top) {
                writeln!(out, "{term:<26}{:>8}{:>8}", s.cf(&term), s.df(&term))?;
            }
        }
        Command::Extract {
            corpus: cpath,
            queries,
            judgments,
            out: dest,
            normalize,
        } => {
            let c = corpus::ingest(open(cpath)?, &cfg.pipeline)?;
            let s = compute_stats(&c)?;
            let q = corpus::read_queries(open(queries)?, &cfg.pipeline)?;
            let j = corpus::read_judgments(open(judgments)?)?;
            let mut d = build_dataset(&c, &s, &q, &j, &cfg.features)?;
            d.header.set("pipeline", cfg.pipeline.describe());
            if *normalize {
                d = letor_io::normalize_per_query(&d);
            }
            write_dataset(&d, dest)?;
            writeln!(
                out,
                "wrote {} instances over {} queries to {}",
                d.len(),
                d.groups().len(),
                dest.display()
            )?;
        }
        Command::Split {
            dataset,
            fraction,
            train_out,
            test_out,
        } => {
            let d = read_dataset(dataset)?;
            let ids: BTreeSet<u32> = d.query_ids().into_iter().collect();
            let (tr, te) = split_query_ids(&ids, fraction.unwrap_or(cfg.split_fraction), cfg.split_seed)?;
            write_dataset(&d.subset(&tr), train_out)?;
            write_dataset(&d.subset(&te), test_out)?;
            writeln!(out, "train queries {tr:?}\ntest queries {te:?}")?;
        }
        Command::Train {
            dataset,
            out: dest,
            rounds,
            learning_rate,
            leaves,
            hidden,
        } => {
            cfg.train.rounds = rounds.or(cfg.train.rounds);
            cfg.train.learning_rate = learning_rate.or(cfg.train.learning_rate);
            if let Some(v) = leaves {
                cfg.train.leaves = *v;
            }
            if let Some(v) = hidden {
                cfg.train.hidden = *v;
            }
            let d = read_dataset(dataset)?;
            let model = rankers::train(cfg.algorithm, &d, &cfg.train)?;
            let mut w = create(dest)?;
            rankers::save(&model, &mut w)?;
            w.flush()?;
            writeln!(
                out,
                "trained {} on {} queries, model written to {}",
                model.kind,
                d.groups().len(),
                dest.display()
            )?;
        }
        Command::Evaluate { model, dataset, csv } => {
            let m = rankers::load(open(model)?)?;
            let d = read_dataset(dataset)?;
            let split = dataset.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
            let rep = report_with(&m.rank_dataset(&d), &cutoffs(cli), 1, split)?;
            write!(out, "{}", rep.to_table())?;
            if let Some(metric) = cli.metric {
                let v = rep
                    .value(metric)
                    .ok_or_else(|| Error::Config(format!("{metric} is beyond the reported cutoffs")))?;
                writeln!(out, "{metric}={v:.6}")?;
            }
            if let Some(p) = csv {
                let mut w = create(p)?;
                w.write_all(rep.to_csv().as_bytes())?;
                w.flush()?;
            }
        }
        Command::Rank { model, dataset, query } => {
            let m = rankers::load(open(model)?)?;
            let d = read_dataset(dataset)?;
            writeln!(out, "qid\trank\tdoc_id\tscore\tlabel")?;
            for list in m.rank_dataset(&d) {
                if query.is_some_and(|q| q != list.query_id) {
                    continue;
                }
                for (r, e) in list.entries().iter().enumerate() {
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}",
                        list.query_id,
                        r + 1,
                        e.doc_id,
                        e.score,
                        e.label
                    )?;
                }
            }
        }
        Command::Synth { out_dir } => {
            std::fs::create_dir_all(out_dir)?;
            let data = synth::generate(&SynthConfig::with_seed(cfg.seed), &cfg.pipeline)?;
            let mut w = create(&out_dir.join("corpus.jsonl"))?;
            corpus::write_corpus(&data.corpus, &mut w)?;
            w.flush()?;
            let mut w = create(&out_dir.join("queries.jsonl"))?;
            corpus::write_queries(&data.queries, &mut w)?;
            w.flush()?;
            let mut w = create(&out_dir.join("judgments.jsonl"))?;
            corpus::write_judgments(&data.judgments, &mut w)?;
            w.flush()?;
            writeln!(
                out,
                "wrote {} documents, {} queries, {} judgments to {}",
                data.corpus.len(),
                data.queries.len(),
                data.judgments.len(),
                out_dir.display()
            )?;
        }
        Command::Reproduce { rounds, csv } => {
            let preset = cli.preset.unwrap_or(FeaturePreset::PaperFaithful);
            let mut rc = ReproduceConfig::new(cfg.seed).with_preset(preset);
            rc.pipeline = cfg.pipeline.clone();
            rc.features.bm25 = cfg.features.bm25;
            rc.features.smoothing = cfg.features.smoothing;
            rc.split_fraction = cfg.split_fraction;
            rc.train = cfg.train.clone();
            rc.train.rounds = rounds.or(cfg.train.rounds);
            let rep = reproduce::run(&rc)?;
            write!(out, "{}", rep.tables())?;
            if let Some(p) = csv {
                let mut w = create(p)?;
                w.write_all(rep.to_csv().as_bytes())?;
                w.flush()?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COF_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
