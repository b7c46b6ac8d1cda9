//! Level-by-level training: spelling pre-training of the character encoder,
//! then sentence classification, then classification in dialogue context.
//!
//! A [`Session`] owns a model, an Adadelta state, and a shuffle stream, and
//! runs one epoch at a time over an [`Objective`]. Parameter groups named in
//! [`PhaseConfig::freeze_prefixes`] are frozen for the first
//! [`PhaseConfig::freeze_epochs`] epochs.

mod checkpoint;
mod compare;
pub mod eval;
mod objective;
mod optim;
mod stopping;

use log::{info, warn};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{make_batches, DIALOGUE_BATCH, SENTENCE_BATCH, WORD_BATCH};
use crate::error::{Error, Result};
use crate::model::{Hcrn, HcrnConfig, Model, Stage};
use crate::real::Real;
use crate::rng::{stream, RngState, Stream};
use crate::tape::Tape;
use crate::tensor::Tensor;

pub use checkpoint::{
    load_model, model_checkpoint, peek_manifest, save_model, AnyModel, Checkpoint, Manifest, Restore, TensorEntry,
    TrainingState, FORMAT_VERSION, MAGIC,
};
pub use compare::{compare_init, curves_csv, final_train_loss, CompareConfig, CurvePoint, PRETRAINED, RANDOM};
pub use objective::{DiscourseObjective, Objective, SentenceObjective, WordObjective};
pub use optim::{clip_global_norm, Adadelta, AdadeltaConfig};
pub use eval::{accuracy, evaluate};
pub use stopping::{Stopper, StoppingRule, Verdict};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub phase: Stage,
    pub batch_size: usize,
    pub freeze_epochs: usize,
    pub freeze_prefixes: Vec<String>,
    pub max_epochs: usize,
    pub stopping: StoppingRule,
    /// Put back the parameters of the best monitored epoch when finishing.
    pub restore_best: bool,
    pub seed: u64,
    pub clip: f64,
    pub optimizer: AdadeltaConfig,
    /// Discourse phase only: gradient truncation through the context state.
    pub truncate: Option<usize>,
    /// Word phase only: share of the inventory held out for validation.
    pub valid_fraction: f64,
}

impl PhaseConfig {
    fn base(phase: Stage, batch_size: usize, seed: u64) -> Self {
        PhaseConfig {
            phase,
            batch_size,
            freeze_epochs: 0,
            freeze_prefixes: Vec::new(),
            max_epochs: 1000,
            stopping: StoppingRule::supervised_default(),
            restore_best: true,
            seed,
            clip: 5.0,
            optimizer: AdadeltaConfig::default(),
            truncate: None,
            valid_fraction: 0.0,
        }
    }

    /// Minibatches of 10 words; stop when validation loss improves by less
    /// than 0.1% for three epochs.
    pub fn word(seed: u64) -> Self {
        PhaseConfig {
            stopping: StoppingRule::word_default(),
            restore_best: false,
            valid_fraction: 0.05,
            ..Self::base(Stage::Word, WORD_BATCH, seed)
        }
    }

    /// Minibatches of 64 sentences; with a pre-trained character encoder it
    /// stays frozen for the first epoch.
    pub fn sentence(seed: u64, pretrained: bool) -> Self {
        PhaseConfig {
            freeze_epochs: if pretrained { 1 } else { 0 },
            freeze_prefixes: vec!["char.".into(), "cc.".into()],
            ..Self::base(Stage::Sentence, SENTENCE_BATCH, seed)
        }
    }

    /// Minibatches of 8 dialogues; pre-trained character and word encoders
    /// stay frozen for the first five epochs.
    pub fn discourse(seed: u64, pretrained: bool) -> Self {
        PhaseConfig {
            freeze_epochs: if pretrained { 5 } else { 0 },
            freeze_prefixes: vec!["char.".into(), "cc.".into(), "cw.".into()],
            ..Self::base(Stage::Discourse, DIALOGUE_BATCH, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config("clip threshold must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.valid_fraction) {
            return Err(Error::Config("valid_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One row of the training history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Stage,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
    pub test_error: Option<f64>,
}

/// `epoch,phase,train_loss,valid_loss,test_error`, blank cells for missing
/// values.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("epoch,phase,train_loss,valid_loss,test_error\n");
    for r in history {
        out.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.phase, r.train_loss, opt(r.valid_loss), opt(r.test_error)));
    }
    out
}

/// A model plus everything needed to continue training it.
#[derive(Clone, Debug)]
pub struct Session<T, M> {
    pub model: M,
    pub config: PhaseConfig,
    pub optimizer: Adadelta<T>,
    shuffle: ChaCha8Rng,
    epoch: usize,
    history: Vec<EpochRecord>,
    stopper: Stopper,
    best: Option<Vec<Tensor<T>>>,
    stopped: bool,
}

impl<T: Real, M: Model<T>> Session<T, M> {
    pub fn new(model: M, config: PhaseConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = Adadelta::new(config.optimizer, model.params());
        Ok(Session {
            shuffle: stream(config.seed, Stream::Shuffle),
            stopper: Stopper::new(config.stopping),
            model,
            config,
            optimizer,
            epoch: 0,
            history: Vec::new(),
            best: None,
            stopped: false,
        })
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    pub fn is_done(&self) -> bool {
        self.stopped || self.epoch >= self.config.max_epochs
    }

    pub fn stopper(&self) -> &Stopper {
        &self.stopper
    }

    fn apply_freeze_schedule(&mut self) {
        if self.config.freeze_prefixes.is_empty() || self.config.freeze_epochs == 0 {
            return;
        }
        let prefixes: Vec<&str> = self.config.freeze_prefixes.iter().map(String::as_str).collect();
        let frozen = self.epoch < self.config.freeze_epochs;
        let n = self.model.params_mut().set_frozen(&prefixes, frozen);
        if n == 0 && self.epoch == 0 {
            warn!("freeze prefixes {prefixes:?} match no parameters");
        }
    }

    /// One pass over the shuffled training items.
    pub fn run_epoch<O: Objective<T, M>>(&mut self, objective: &O) -> Result<EpochRecord> {
        if objective.is_empty() {
            return Err(Error::Input("no training items".into()));
        }
        self.apply_freeze_schedule();
        let batches = make_batches(objective.len(), self.config.batch_size, &mut self.shuffle)?;
        let mut tape = Tape::new();
        let mut total = 0.0;
        for batch in &batches {
            tape.reset();
            let losses = batch.iter().map(|&i| objective.item_loss(&self.model, &mut tape, i)).collect::<Result<Vec<_>>>()?;
            let sum = tape.add_all(&losses)?;
            let batch_total = tape.scalar_value(sum)?.as_f64();
            if !batch_total.is_finite() {
                return Err(Error::Numeric(format!("epoch {}: loss is {batch_total}", self.epoch)));
            }
            total += batch_total;
            let mean = tape.scale(sum, T::of(1.0 / batch.len() as f64));
            let params = self.model.params_mut();
            params.zero_grads();
            tape.backward(mean, params)?;
            clip_global_norm(params, self.config.clip)?;
            self.optimizer.step(params)?;
        }
        let train_loss = total / objective.len() as f64;
        let valid_loss = objective.valid_loss(&self.model)?;
        let test_error = objective.test_error(&self.model)?;
        let record = EpochRecord { epoch: self.epoch, phase: objective.phase(), train_loss, valid_loss, test_error };
        let verdict = self.stopper.observe(self.epoch, valid_loss.unwrap_or(train_loss));
        if self.config.restore_best && verdict == Verdict::Improved {
            self.best = Some(self.model.params().iter().map(|p| p.value.clone()).collect());
        }
        if verdict == Verdict::Stop {
            self.stopped = true;
        }
        info!(
            "{} epoch {}: train {:.5} valid {:?} test error {:?}",
            record.phase, record.epoch, train_loss, valid_loss, test_error
        );
        self.history.push(record.clone());
        self.epoch += 1;
        Ok(record)
    }

    /// Runs epochs until the stopping rule fires or the epoch limit.
    pub fn run<O: Objective<T, M>>(&mut self, objective: &O) -> Result<()> {
        while !self.is_done() {
            self.run_epoch(objective)?;
        }
        Ok(())
    }

    /// Unfreezes everything and, if configured, puts back the best epoch's
    /// parameters.
    pub fn finish(mut self) -> (M, Vec<EpochRecord>) {
        if self.config.restore_best {
            if let Some(best) = self.best.take() {
                for (p, v) in self.model.params_mut().iter_mut().zip(best) {
                    p.value = v;
                }
            }
        }
        for p in self.model.params_mut().iter_mut() {
            p.frozen = false;
        }
        (self.model, self.history)
    }

    pub fn rng_state(&self) -> RngState {
        RngState::capture(self.config.seed, Stream::Shuffle, &self.shuffle)
    }
}

/// Builds a model for the next stage from `config`, copying every parameter
/// group the previous stage trained: the word encoder from a word-stage
/// model, the word and sentence encoders from a sentence-stage model.
pub fn stack_on<T: Real>(config: HcrnConfig, previous: &Hcrn<T>, seed: u64) -> Result<Hcrn<T>> {
    let target = config.stage;
    let mut prefixes: Vec<&str> = previous.word_prefixes().to_vec();
    match (previous.stage(), target) {
        (Stage::Word, Stage::Sentence) => {}
        (Stage::Sentence, Stage::Discourse) | (Stage::Discourse, Stage::Discourse) => prefixes.push("cw."),
        (from, to) => {
            return Err(Error::Dimension(format!(
                "a {to}-stage model is initialized from a {} checkpoint, not a {from}-stage one",
                if to == Stage::Discourse { "sentence-stage" } else { "word-stage" }
            )))
        }
    }
    let mut model = Hcrn::new(config, &mut stream(seed, Stream::Init))?;
    let n = model.params_mut().copy_from(previous.params(), &prefixes)?;
    info!("initialized {n} tensors from the {}-stage model", previous.stage());
    Ok(model)
}
