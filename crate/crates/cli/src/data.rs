//! Corpus files: preprocessing, synthetic corpora, and split selection.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use hcrn::corpus::synth::{synth_dialogues, SynthKind, SynthSpec};
use hcrn::corpus::{corpus_stats, read_id_list, read_raw_jsonl, split, Corpus, Split};

use crate::config::{tags_path, RunConfig};
use crate::manifest::RunManifest;
use crate::UsageError;

#[derive(Args)]
pub struct PreprocessArgs {
    /// Raw transcripts, one JSON dialogue per line
    #[arg(long)]
    pub input: PathBuf,
    /// Cleaned corpus file
    #[arg(long)]
    pub output: PathBuf,
    /// Tag list, one class name per line (default: SWBD-DAMSL)
    #[arg(long)]
    pub tagset: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    /// context-free, context-bound, speaker-bound or long-sentence
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 40)]
    pub dialogues: usize,
    /// Sentences per dialogue
    #[arg(long, default_value_t = 10)]
    pub sentences: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn require_file(path: &Path, what: &str) -> Result<(), UsageError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(UsageError(format!("{what} {} does not exist", path.display())))
    }
}

pub fn preprocess(args: &PreprocessArgs, cfg: &RunConfig, command: &str) -> anyhow::Result<()> {
    require_file(&args.input, "input")?;
    let tagset = match &args.tagset {
        Some(p) => {
            require_file(p, "tag list")?;
            hcrn::corpus::TagSet::load(p)?
        }
        None => cfg.tagset_for(None)?,
    };
    let file = File::open(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let raw = read_raw_jsonl(BufReader::new(file))?;
    let corpus = Corpus::preprocess(tagset, raw)?;
    corpus.save(&args.output)?;
    let tags = tags_path(&args.output);
    std::fs::write(&tags, corpus.tagset.to_text())?;
    println!("{}", corpus_stats(&corpus));

    let mut m = RunManifest::new(command, cfg);
    m.input(&args.input)?;
    if let Some(p) = &args.tagset {
        m.input(p)?;
    }
    m.output(&args.output);
    m.output(&tags);
    m.write_next_to(&args.output)?;
    Ok(())
}

pub fn synth(args: &SynthArgs, cfg: &RunConfig, command: &str) -> anyhow::Result<()> {
    let kind: SynthKind = args.kind.parse().map_err(UsageError)?;
    if args.dialogues == 0 || args.sentences == 0 {
        return Err(UsageError("--dialogues and --sentences must be positive".into()).into());
    }
    let spec = SynthSpec::new(kind, args.dialogues, args.sentences);
    let corpus = synth_dialogues(&spec, cfg.seed);
    corpus.save(&args.out)?;
    let tags = tags_path(&args.out);
    std::fs::write(&tags, corpus.tagset.to_text())?;
    println!("{}", corpus_stats(&corpus));
    println!("sentence-only ceiling {:.4}  speaker-blind ceiling {:.4}", spec.sentence_ceiling(), spec.speaker_blind_ceiling());

    let mut m = RunManifest::new(command, cfg);
    m.output(&args.out);
    m.output(&tags);
    m.write_next_to(&args.out)?;
    Ok(())
}

pub fn load_corpus(cfg: &RunConfig, path: &Path) -> anyhow::Result<Corpus> {
    require_file(path, "corpus")?;
    let tagset = cfg.tagset_for(Some(path))?;
    Corpus::load(tagset, path).with_context(|| format!("loading corpus {}", path.display()))
}

/// Train, valid and test parts of a corpus as named by the `*_ids` keys.
/// With no id lists the whole corpus is the training set.
pub fn load_splits(cfg: &RunConfig, path: &Path) -> anyhow::Result<Split> {
    let corpus = load_corpus(cfg, path)?;
    if cfg.train_ids.is_none() && cfg.valid_ids.is_none() && cfg.test_ids.is_none() {
        let empty = Corpus::new(corpus.tagset.clone());
        return Ok(Split { train: corpus, valid: empty.clone(), test: empty });
    }
    let ids = |p: &Option<PathBuf>| -> anyhow::Result<Vec<String>> {
        match p {
            Some(p) => {
                require_file(p, "split list")?;
                Ok(read_id_list(p)?)
            }
            None => Ok(Vec::new()),
        }
    };
    Ok(split(&corpus, &ids(&cfg.train_ids)?, &ids(&cfg.valid_ids)?, &ids(&cfg.test_ids)?)?)
}

/// `Some` only for a non-empty corpus.
pub fn non_empty(c: &Corpus) -> Option<&Corpus> {
    (!c.dialogues.is_empty()).then_some(c)
}

pub fn select_split(s: Split, name: &str) -> anyhow::Result<Corpus> {
    let c = match name {
        "train" => s.train,
        "valid" => s.valid,
        "test" => s.test,
        "all" => {
            let mut all = s.train;
            all.dialogues.extend(s.valid.dialogues);
            all.dialogues.extend(s.test.dialogues);
            all
        }
        other => return Err(UsageError(format!("--split must be train, valid, test or all, got {other:?}")).into()),
    };
    Ok(c)
}
