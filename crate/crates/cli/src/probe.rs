//! Evaluation and word-level probes of trained checkpoints.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::Args;
use hcrn::corpus::{preprocess_text, word_inventory, CharId, CharVocab, Corpus};
use hcrn::metrics::{classification_error, nearest_neighbors, relative_improvement, ClassificationReport, ReconstructionReport};
use hcrn::model::{Hcrn, SentenceClassifier, Stage};
use hcrn::train::eval::{labels, sentence_pass};
use hcrn::train::{evaluate, load_model, peek_manifest, AnyModel};
use hcrn::Real;
use serde::Serialize;

use crate::config::RunConfig;
use crate::data::{load_corpus, load_splits, require_file, select_split};
use crate::manifest::RunManifest;
use crate::{with_dtype, UsageError};

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// train, valid, test or all; without split lists the whole corpus is used
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Also write the report as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Model to report a relative improvement against
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Words to spell back, whitespace separated
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Training corpus; its words count as in-vocabulary
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args)]
pub struct NnArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(short, default_value_t = 3)]
    pub k: usize,
    /// Candidate words: every word of this corpus
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Candidate words from a whitespace-separated list
    #[arg(long)]
    pub words: Option<PathBuf>,
}

pub fn classify<T: Real>(model: &AnyModel<T>, corpus: &Corpus) -> anyhow::Result<ClassificationReport> {
    Ok(match model {
        AnyModel::Hcrn(m) => evaluate(m, corpus)?,
        AnyModel::Flat(m) => {
            let sentences: Vec<_> = corpus.sentences().cloned().collect();
            let (_, preds) = sentence_pass(m, &sentences)?;
            classification_error(&preds, &labels(corpus), corpus.tagset.len())?
        }
    })
}

/// Reference and greedy reconstruction for every word.
pub fn reconstruction_pairs<T: Real>(model: &Hcrn<T>, words: &[Vec<CharId>]) -> anyhow::Result<Vec<(Vec<CharId>, Vec<CharId>)>> {
    words.iter().map(|w| Ok((w.clone(), model.reconstruct(w, 2 * w.len() + 2)?))).collect()
}

fn model_dtype(path: &Path) -> anyhow::Result<hcrn::DType> {
    require_file(path, "model")?;
    Ok(peek_manifest(path)?.dtype)
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    split: &'a str,
    report: &'a ClassificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_improvement: Option<f64>,
}

pub fn eval(args: &EvalArgs, cfg: &RunConfig, command: &str) -> anyhow::Result<()> {
    let dtype = model_dtype(&args.model)?;
    require_file(&args.corpus, "corpus")?;
    let splits_given = cfg.train_ids.is_some() || cfg.valid_ids.is_some() || cfg.test_ids.is_some();
    let split_name = if splits_given { args.split.as_str() } else { "all" };
    let corpus = select_split(load_splits(cfg, &args.corpus)?, split_name)?;
    if corpus.dialogues.is_empty() {
        return Err(UsageError(format!("the {split_name} split has no dialogues")).into());
    }
    let report = with_dtype!(dtype, eval_model(&args.model, &corpus))?;
    let baseline = match &args.baseline {
        Some(p) => Some(with_dtype!(model_dtype(p)?, eval_model(p, &corpus))?.error_rate),
        None => None,
    };
    print!("{}", report.table(corpus.tagset.names()));
    let relative = baseline.map(|b| relative_improvement(b, report.error_rate));
    if let (Some(b), Some(r)) = (baseline, relative) {
        println!("baseline error {b:.2}%  relative improvement {r:.2}%");
    }

    let mut m = RunManifest::new(command, cfg);
    m.input(&args.model)?;
    m.input(&args.corpus)?;
    if let Some(p) = &args.baseline {
        m.input(p)?;
    }
    m.config_inputs()?;
    if let Some(path) = &args.json {
        let out = EvalOutput { split: split_name, report: &report, baseline_error_rate: baseline, relative_improvement: relative };
        std::fs::write(path, serde_json::to_string_pretty(&out)? + "\n")?;
        m.output(path);
        m.write_next_to(path)?;
    }
    Ok(())
}

fn eval_model<T: Real>(path: &Path, corpus: &Corpus) -> anyhow::Result<ClassificationReport> {
    let model: AnyModel<T> = load_model(path)?;
    if model.num_classes() != corpus.tagset.len() {
        return Err(UsageError(format!(
            "model predicts {} classes but the corpus tag list has {}",
            model.num_classes(),
            corpus.tagset.len()
        ))
        .into());
    }
    classify(&model, corpus)
}

fn read_words(vocab: &CharVocab, path: &Path) -> anyhow::Result<Vec<Vec<CharId>>> {
    require_file(path, "word list")?;
    let text = std::fs::read_to_string(path)?;
    let set: BTreeSet<Vec<CharId>> = preprocess_text(&text).split_whitespace().map(|w| vocab.encode_word(w)).collect();
    Ok(set.into_iter().collect())
}

/// The model must be a hierarchical one; any stage with a word encoder.
fn load_hcrn<T: Real>(path: &Path) -> anyhow::Result<Hcrn<T>> {
    match load_model::<T, AnyModel<T>>(path)? {
        AnyModel::Hcrn(m) => Ok(m),
        AnyModel::Flat(_) => Err(UsageError("the flat baseline has no word vectors".into()).into()),
    }
}

#[derive(Serialize)]
struct NamedReport {
    name: &'static str,
    report: ReconstructionReport,
}

pub fn reconstruct(args: &ReconstructArgs, cfg: &RunConfig, command: &str) -> anyhow::Result<()> {
    if args.words.is_none() && args.corpus.is_none() {
        return Err(UsageError("give --words, --corpus, or both".into()).into());
    }
    let dtype = model_dtype(&args.model)?;
    let corpus = args.corpus.as_deref().map(|p| load_corpus(cfg, p)).transpose()?;
    let rows = with_dtype!(dtype, reconstruct_typed(args, corpus.as_ref()))?;
    println!("{}", ReconstructionReport::header());
    for r in &rows {
        println!("{}", r.report.row(r.name));
    }

    let mut m = RunManifest::new(command, cfg);
    m.input(&args.model)?;
    for p in [&args.words, &args.corpus].into_iter().flatten() {
        m.input(p)?;
    }
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&rows)? + "\n")?;
        m.output(path);
        m.write_next_to(path)?;
    }
    Ok(())
}

fn reconstruct_typed<T: Real>(args: &ReconstructArgs, corpus: Option<&Corpus>) -> anyhow::Result<Vec<NamedReport>> {
    let model = load_hcrn::<T>(&args.model)?;
    if model.stage() != Stage::Word {
        return Err(UsageError(format!("reconstruction needs a word-stage model, got a {}-stage one", model.stage())).into());
    }
    let known: Option<BTreeSet<Vec<CharId>>> = corpus.map(|c| word_inventory(c).into_keys().collect());
    let words = match &args.words {
        Some(p) => read_words(model.vocab(), p)?,
        None => known.iter().flatten().cloned().collect(),
    };
    let pairs = reconstruction_pairs(&model, &words)?;
    let mut rows = Vec::new();
    if let (Some(known), Some(_)) = (&known, &args.words) {
        let (inv, oov): (Vec<_>, Vec<_>) = pairs.iter().cloned().partition(|(w, _)| known.contains(w));
        for (name, part) in [("in-vocabulary", inv), ("out-of-vocabulary", oov)] {
            if !part.is_empty() {
                rows.push(NamedReport { name, report: ReconstructionReport::from_pairs(&part)? });
            }
        }
    }
    if pairs.is_empty() {
        return Err(UsageError("no words to reconstruct".into()).into());
    }
    rows.push(NamedReport { name: "all", report: ReconstructionReport::from_pairs(&pairs)? });
    Ok(rows)
}

pub fn nn(args: &NnArgs, cfg: &RunConfig, _command: &str) -> anyhow::Result<()> {
    if args.words.is_none() && args.corpus.is_none() {
        return Err(UsageError("give --corpus or --words as the candidate set".into()).into());
    }
    if args.k == 0 {
        return Err(UsageError("-k must be positive".into()).into());
    }
    let dtype = model_dtype(&args.model)?;
    let corpus = args.corpus.as_deref().map(|p| load_corpus(cfg, p)).transpose()?;
    for n in with_dtype!(dtype, nn_typed(args, corpus.as_ref()))? {
        println!("{}\t{:.4}", n.word, n.distance);
    }
    Ok(())
}

fn nn_typed<T: Real>(args: &NnArgs, corpus: Option<&Corpus>) -> anyhow::Result<Vec<hcrn::metrics::Neighbor>> {
    let model = load_hcrn::<T>(&args.model)?;
    let vocab = model.vocab();
    let mut candidates: BTreeSet<Vec<CharId>> = corpus.map(|c| word_inventory(c).into_keys().collect()).unwrap_or_default();
    if let Some(p) = &args.words {
        candidates.extend(read_words(vocab, p)?);
    }
    let entries = candidates
        .iter()
        .map(|w| Ok((vocab.decode(w), model.word_vector(w)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let query = preprocess_text(&args.query);
    if query.split_whitespace().count() != 1 {
        return Err(UsageError(format!("--query must be a single word, got {:?}", args.query)).into());
    }
    let qv = model.word_vector(&vocab.encode_word(&query))?;
    Ok(nearest_neighbors(&entries, &query, &qv, args.k)?)
}
