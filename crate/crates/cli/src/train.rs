//! The three training phases and the initialization comparison.

use std::path::{Path, PathBuf};

use clap::Args;
use hcrn::corpus::{word_inventory, Corpus};
use hcrn::metrics::{relative_improvement, ReconstructionReport};
use hcrn::model::{build_word_list, FlatRnn, Hcrn, HcrnConfig, Stage, WordEncoderConfig};
use hcrn::rng::{stream, Stream};
use hcrn::train::{
    compare_init, curves_csv, final_train_loss, history_csv, load_model, peek_manifest, save_model, stack_on, CompareConfig,
    DiscourseObjective, EpochRecord, Objective, SentenceObjective, Session, WordObjective, PRETRAINED, RANDOM,
};
use hcrn::{DType, Real};

use crate::config::RunConfig;
use crate::data::{load_corpus, load_splits, non_empty, require_file};
use crate::manifest::{sibling, RunManifest};
use crate::probe::{classify, reconstruction_pairs};
use crate::{with_dtype, UsageError};

#[derive(Args)]
pub struct PretrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Continue from a `<model-out>.session` checkpoint
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// sentence or discourse
    #[arg(long)]
    pub phase: String,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Checkpoint of the previous stage to build on
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Continue from a `<model-out>.session` checkpoint
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Separate corpus for the test-loss curve (default: the test split,
    /// else the training corpus)
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Number of seeds, counting up from --seed
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Discourse epochs per arm
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long)]
    pub word_epochs: Option<usize>,
    #[arg(long)]
    pub sentence_epochs: Option<usize>,
    /// Learning-curve CSV
    #[arg(long)]
    pub out: PathBuf,
}

/// dtype of a resumed session wins over the configured one.
fn session_dtype(cfg: &RunConfig, resume: Option<&Path>) -> anyhow::Result<DType> {
    match resume {
        Some(p) => {
            require_file(p, "session checkpoint")?;
            let dtype = peek_manifest(p)?.dtype;
            if dtype != cfg.dtype {
                log::warn!("resuming a {dtype:?} session; dtype setting ignored");
            }
            Ok(dtype)
        }
        None => Ok(cfg.dtype),
    }
}

/// Runs the session to completion, checkpointing after every epoch, then
/// writes the model and its history.
fn drive<T: Real, M: hcrn::train::Restore<T>, O: Objective<T, M>>(
    mut session: Session<T, M>,
    objective: &O,
    out: &Path,
) -> anyhow::Result<(M, Vec<EpochRecord>)> {
    let session_path = sibling(out, "session");
    while !session.is_done() {
        let r = session.run_epoch(objective)?;
        eprintln!("epoch {} train loss {:.5}{}", r.epoch, r.train_loss, r.valid_loss.map_or(String::new(), |v| format!(" valid loss {v:.5}")));
        session.save(&session_path)?;
    }
    let (model, history) = session.finish();
    save_model(&model, out)?;
    std::fs::write(sibling(out, "history.csv"), history_csv(&history))?;
    Ok((model, history))
}

fn write_manifest(command: &str, cfg: &RunConfig, inputs: &[&Path], out: &Path) -> anyhow::Result<()> {
    let mut m = RunManifest::new(command, cfg);
    for p in inputs {
        m.input(p)?;
    }
    m.config_inputs()?;
    for o in [out.to_path_buf(), sibling(out, "history.csv"), sibling(out, "session")] {
        m.output(&o);
    }
    m.write_next_to(out)?;
    Ok(())
}

pub fn pretrain_word(args: &PretrainArgs, cfg: &RunConfig, command: &str) -> anyhow::Result<()> {
    if cfg.word_encoder != "chars" {
        return Err(UsageError("only the character encoder is pre-trained; set word_encoder=chars".into()).into());
    }
    let dtype = session_dtype(cfg, args.resume.as_deref())?;
    with_dtype!(dtype, pretrain_typed(args, cfg))?;
    let mut inputs = vec![args.corpus.as_path()];
    inputs.extend(args.resume.as_deref());
    write_manifest(command, cfg, &inputs, &args.model_out)
}

fn pretrain_typed<T: Real>(args: &PretrainArgs, cfg: &RunConfig) -> anyhow::Result<()> {
    let train = load_splits(cfg, &args.corpus)?.train;
    let phase = cfg.phase_config(Stage::Word, false)?;
    let objective = WordObjective::from_inventory(&word_inventory(&train), phase.valid_fraction, cfg.seed)?;
    let session = match &args.resume {
        Some(p) => Session::<T, Hcrn<T>>::resume(p)?,
        None => {
            let model = Hcrn::<T>::new(cfg.hcrn_config(Stage::Word, train.tagset.len())?, &mut stream(cfg.seed, Stream::Init))?;
            Session::new(model, phase)?
        }
    };
    let (model, _) = drive(session, &objective, &args.model_out)?;

    println!("{}", ReconstructionReport::header());
    for (name, words) in [("train words", &objective.train), ("held-out words", &objective.valid)] {
        if !words.is_empty() {
            let pairs = reconstruction_pairs(&model, words)?;
            println!("{}", ReconstructionReport::from_pairs(&pairs)?.row(name));
        }
    }
    Ok(())
}

pub fn train(args: &TrainArgs, cfg: &RunConfig, command: &str) -> anyhow::Result<()> {
    let stage: Stage = match args.phase.as_str() {
        "sentence" => Stage::Sentence,
        "discourse" => Stage::Discourse,
        other => return Err(UsageError(format!("--phase must be sentence or discourse, got {other:?}")).into()),
    };
    require_file(&args.corpus, "corpus")?;
    if let Some(p) = &args.init {
        require_file(p, "initial checkpoint")?;
    }
    if cfg.model == "flat" && (stage != Stage::Sentence || args.init.is_some()) {
        return Err(UsageError("the flat baseline trains only in the sentence phase, from scratch".into()).into());
    }
    let dtype = session_dtype(cfg, args.resume.as_deref())?;
    with_dtype!(dtype, train_typed(args, cfg, stage))?;
    let mut inputs = vec![args.corpus.as_path()];
    inputs.extend(args.init.as_deref());
    inputs.extend(args.resume.as_deref());
    write_manifest(command, cfg, &inputs, &args.model_out)
}

/// Lookup word lists come from the training corpus.
fn model_config(cfg: &RunConfig, stage: Stage, train: &Corpus) -> anyhow::Result<HcrnConfig> {
    let mut c = cfg.hcrn_config(stage, train.tagset.len())?;
    if let WordEncoderConfig::Lookup { cutoff, words, .. } = &mut c.word {
        *words = build_word_list(&word_inventory(train), &train.vocab, *cutoff);
        log::info!("lookup table holds {} words seen at least {cutoff} times", words.len());
    }
    Ok(c)
}

/// Settings of `cfg`, with the encoders `previous` already trained.
fn stacked_config(cfg: &RunConfig, stage: Stage, train: &Corpus, previous: &HcrnConfig) -> anyhow::Result<HcrnConfig> {
    let mut c = cfg.hcrn_config(stage, train.tagset.len())?;
    c.word = previous.word.clone();
    if previous.stage != Stage::Word {
        c.cw = previous.cw.clone();
    }
    Ok(c)
}

fn train_typed<T: Real>(args: &TrainArgs, cfg: &RunConfig, stage: Stage) -> anyhow::Result<()> {
    let data = load_splits(cfg, &args.corpus)?;
    let (train, valid, test) = (&data.train, non_empty(&data.valid), non_empty(&data.test));
    let phase = cfg.phase_config(stage, args.init.is_some())?;

    if cfg.model == "flat" {
        let session = match &args.resume {
            Some(p) => Session::<T, FlatRnn<T>>::resume(p)?,
            None => {
                let model = FlatRnn::<T>::new(cfg.flat_config(train.tagset.len())?, &mut stream(cfg.seed, Stream::Init))?;
                Session::new(model, phase)?
            }
        };
        let (model, _) = drive(session, &SentenceObjective::new(train, valid, test), &args.model_out)?;
        return report(&hcrn::train::AnyModel::Flat(model), train, test);
    }

    let session = match (&args.resume, &args.init) {
        (Some(p), _) => Session::<T, Hcrn<T>>::resume(p)?,
        (None, Some(init)) => {
            let previous: Hcrn<T> = load_model(init)?;
            let c = stacked_config(cfg, stage, train, previous.config())?;
            Session::new(stack_on(c, &previous, cfg.seed)?, phase)?
        }
        (None, None) => {
            let model = Hcrn::<T>::new(model_config(cfg, stage, train)?, &mut stream(cfg.seed, Stream::Init))?;
            Session::new(model, phase)?
        }
    };
    if session.model.stage() != stage {
        return Err(UsageError(format!("session holds a {}-stage model, not {stage}", session.model.stage())).into());
    }
    let model = match stage {
        Stage::Sentence => drive(session, &SentenceObjective::new(train, valid, test), &args.model_out)?.0,
        _ => {
            let truncate = session.config.truncate;
            drive(session, &DiscourseObjective::new(train, valid, test, truncate), &args.model_out)?.0
        }
    };
    report(&hcrn::train::AnyModel::Hcrn(model), train, test)
}

fn report<T: Real>(model: &hcrn::train::AnyModel<T>, train: &Corpus, test: Option<&Corpus>) -> anyhow::Result<()> {
    println!("train error {:.2}%", classify(model, train)?.error_rate);
    if let Some(test) = test {
        println!("test error {:.2}%", classify(model, test)?.error_rate);
    }
    Ok(())
}

pub fn compare(args: &CompareArgs, cfg: &RunConfig, command: &str) -> anyhow::Result<()> {
    if cfg.word_encoder != "chars" || cfg.model != "hcrn" {
        return Err(UsageError("compare-init needs model=hcrn with word_encoder=chars".into()).into());
    }
    if args.seeds == 0 || args.epochs == 0 {
        return Err(UsageError("--seeds and --epochs must be positive".into()).into());
    }
    require_file(&args.corpus, "corpus")?;
    let data = load_splits(cfg, &args.corpus)?;
    let test = match (&args.test, non_empty(&data.test)) {
        (Some(p), _) => load_corpus(cfg, p)?,
        (None, Some(t)) => t.clone(),
        (None, None) => {
            log::warn!("no test corpus; the test-loss curve uses the training corpus");
            data.train.clone()
        }
    };
    let mut config = CompareConfig {
        model: cfg.hcrn_config(Stage::Discourse, data.train.tagset.len())?,
        word: cfg.phase_config(Stage::Word, false)?,
        sentence: cfg.phase_config(Stage::Sentence, true)?,
        discourse: cfg.phase_config(Stage::Discourse, true)?,
        epochs: args.epochs,
    };
    if let Some(e) = args.word_epochs {
        config.word.max_epochs = e;
    }
    if let Some(e) = args.sentence_epochs {
        config.sentence.max_epochs = e;
    }
    let seeds: Vec<u64> = (cfg.seed..cfg.seed + args.seeds).collect();
    let points = with_dtype!(cfg.dtype, compare_init(&data.train, &test, &config, &seeds))?;
    std::fs::write(&args.out, curves_csv(&points, &seeds))?;

    if let (Some(p), Some(r)) = (final_train_loss(&points, PRETRAINED), final_train_loss(&points, RANDOM)) {
        println!("final mean train loss: {PRETRAINED} {p:.4}  {RANDOM} {r:.4}  relative improvement {:.2}%", relative_improvement(r, p));
    }

    let mut m = RunManifest::new(command, cfg);
    m.input(&args.corpus)?;
    if let Some(p) = &args.test {
        m.input(p)?;
    }
    m.config_inputs()?;
    m.output(&args.out);
    m.write_next_to(&args.out)?;
    Ok(())
}
