use rand::seq::SliceRandom;

use super::eval::{dialogue_pass, par_map, sentence_pass};
use crate::corpus::{CharId, Corpus, Dialogue, Sentence, WordInventory};
use crate::error::{Error, Result};
use crate::metrics::classification_error;
use crate::model::{Hcrn, Model, SentenceClassifier, Stage};
use crate::real::Real;
use crate::rng::{stream, Stream};
use crate::tape::{Tape, Var};

/// A training loss over indexed items, plus the numbers reported each epoch.
pub trait Objective<T: Real, M: Model<T>>: Sync {
    fn phase(&self) -> Stage;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Loss of one training item, summed over its time steps.
    fn item_loss(&self, model: &M, tape: &mut Tape<T>, item: usize) -> Result<Var>;
    /// Mean per-item loss on held-out data, if there is any.
    fn valid_loss(&self, model: &M) -> Result<Option<f64>>;
    /// Test error in percent, if a test set was given.
    fn test_error(&self, model: &M) -> Result<Option<f64>>;
}

/// Spelling reconstruction over distinct words.
#[derive(Clone, Debug)]
pub struct WordObjective {
    pub train: Vec<Vec<CharId>>,
    pub valid: Vec<Vec<CharId>>,
}

impl WordObjective {
    /// Holds out `valid_fraction` of the inventory (rounded up, but never
    /// the whole inventory), chosen by `seed`.
    pub fn from_inventory(inventory: &WordInventory, valid_fraction: f64, seed: u64) -> Result<Self> {
        if inventory.is_empty() {
            return Err(Error::Input("word inventory is empty".into()));
        }
        let mut words: Vec<Vec<CharId>> = inventory.keys().cloned().collect();
        let n_valid = ((words.len() as f64 * valid_fraction).ceil() as usize).min(words.len() - 1);
        if n_valid == 0 {
            return Ok(WordObjective { train: words, valid: Vec::new() });
        }
        words.shuffle(&mut stream(seed, Stream::Split));
        let valid = words.split_off(words.len() - n_valid);
        words.sort();
        let mut valid = valid;
        valid.sort();
        Ok(WordObjective { train: words, valid })
    }
}

impl<T: Real> Objective<T, Hcrn<T>> for WordObjective {
    fn phase(&self) -> Stage {
        Stage::Word
    }

    fn len(&self) -> usize {
        self.train.len()
    }

    fn item_loss(&self, model: &Hcrn<T>, tape: &mut Tape<T>, item: usize) -> Result<Var> {
        model.word_loss(tape, &self.train[item])
    }

    fn valid_loss(&self, model: &Hcrn<T>) -> Result<Option<f64>> {
        if self.valid.is_empty() {
            return Ok(None);
        }
        let losses = par_map(&self.valid, |w| {
            let mut tape = Tape::new();
            let l = model.word_loss(&mut tape, w)?;
            Ok(tape.scalar_value(l)?.as_f64())
        })?;
        Ok(Some(losses.iter().sum::<f64>() / losses.len() as f64))
    }

    fn test_error(&self, _: &Hcrn<T>) -> Result<Option<f64>> {
        Ok(None)
    }
}

/// Per-sentence classification.
#[derive(Clone, Debug)]
pub struct SentenceObjective {
    pub train: Vec<Sentence>,
    pub valid: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub num_classes: usize,
}

impl SentenceObjective {
    pub fn new(train: &Corpus, valid: Option<&Corpus>, test: Option<&Corpus>) -> Self {
        let flat = |c: Option<&Corpus>| c.map(|c| c.sentences().cloned().collect()).unwrap_or_default();
        SentenceObjective {
            train: train.sentences().cloned().collect(),
            valid: flat(valid),
            test: flat(test),
            num_classes: train.tagset.len(),
        }
    }
}

impl<T: Real, M: SentenceClassifier<T>> Objective<T, M> for SentenceObjective {
    fn phase(&self) -> Stage {
        Stage::Sentence
    }

    fn len(&self) -> usize {
        self.train.len()
    }

    fn item_loss(&self, model: &M, tape: &mut Tape<T>, item: usize) -> Result<Var> {
        let s = &self.train[item];
        let logits = model.sentence_logits(tape, s)?;
        tape.softmax_nll(logits, s.label).map_err(|_| label_error(s.label, model.num_classes()))
    }

    fn valid_loss(&self, model: &M) -> Result<Option<f64>> {
        if self.valid.is_empty() {
            return Ok(None);
        }
        Ok(Some(sentence_pass(model, &self.valid)?.0))
    }

    fn test_error(&self, model: &M) -> Result<Option<f64>> {
        if self.test.is_empty() {
            return Ok(None);
        }
        let (_, preds) = sentence_pass(model, &self.test)?;
        let labels: Vec<usize> = self.test.iter().map(|s| s.label).collect();
        Ok(Some(classification_error(&preds, &labels, self.num_classes)?.error_rate))
    }
}

fn label_error(label: usize, classes: usize) -> Error {
    Error::Data(format!("label {label} is outside the {classes}-class tagset"))
}

/// Classification of every sentence with context carried through the
/// dialogue.
#[derive(Clone, Debug)]
pub struct DiscourseObjective {
    pub train: Vec<Dialogue>,
    pub valid: Vec<Dialogue>,
    pub test: Vec<Dialogue>,
    pub num_classes: usize,
    /// Cut the gradient path through the context state every this many
    /// sentences.
    pub truncate: Option<usize>,
}

impl DiscourseObjective {
    pub fn new(train: &Corpus, valid: Option<&Corpus>, test: Option<&Corpus>, truncate: Option<usize>) -> Self {
        let dialogues = |c: Option<&Corpus>| -> Vec<Dialogue> {
            c.map(|c| c.dialogues.iter().filter(|d| !d.sentences.is_empty()).cloned().collect()).unwrap_or_default()
        };
        let skipped = train.dialogues.iter().filter(|d| d.sentences.is_empty()).count();
        if skipped > 0 {
            log::warn!("skipping {skipped} empty dialogues");
        }
        DiscourseObjective {
            train: dialogues(Some(train)),
            valid: dialogues(valid),
            test: dialogues(test),
            num_classes: train.tagset.len(),
            truncate,
        }
    }
}

impl<T: Real> Objective<T, Hcrn<T>> for DiscourseObjective {
    fn phase(&self) -> Stage {
        Stage::Discourse
    }

    fn len(&self) -> usize {
        self.train.len()
    }

    fn item_loss(&self, model: &Hcrn<T>, tape: &mut Tape<T>, item: usize) -> Result<Var> {
        let d = &self.train[item];
        if let Some(s) = d.sentences.iter().find(|s| s.label >= model.config().num_classes) {
            return Err(label_error(s.label, model.config().num_classes));
        }
        model.dialogue_loss(tape, &d.sentences, self.truncate)
    }

    fn valid_loss(&self, model: &Hcrn<T>) -> Result<Option<f64>> {
        if self.valid.is_empty() {
            return Ok(None);
        }
        let losses = par_map(&self.valid, |d| {
            let mut tape = Tape::new();
            let l = model.dialogue_loss(&mut tape, &d.sentences, None)?;
            Ok(tape.scalar_value(l)?.as_f64())
        })?;
        Ok(Some(losses.iter().sum::<f64>() / losses.len() as f64))
    }

    fn test_error(&self, model: &Hcrn<T>) -> Result<Option<f64>> {
        if self.test.is_empty() {
            return Ok(None);
        }
        let (_, preds) = dialogue_pass(model, &self.test)?;
        let labels: Vec<usize> = self.test.iter().flat_map(|d| d.sentences.iter().map(|s| s.label)).collect();
        Ok(Some(classification_error(&preds, &labels, self.num_classes)?.error_rate))
    }
}
