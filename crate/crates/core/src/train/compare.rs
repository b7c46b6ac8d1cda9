//! Paired learning curves: the full network trained in context from a
//! level-by-level initialization versus from random weights.

use serde::{Deserialize, Serialize};

use super::eval::dialogue_pass;
use super::{stack_on, DiscourseObjective, PhaseConfig, SentenceObjective, Session, StoppingRule, WordObjective};
use crate::corpus::{word_inventory, Corpus};
use crate::error::Result;
use crate::model::{Hcrn, HcrnConfig, Stage};
use crate::real::Real;
use crate::rng::{stream, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub model: HcrnConfig,
    pub word: PhaseConfig,
    pub sentence: PhaseConfig,
    /// Freeze settings apply to the pre-initialized arm only.
    pub discourse: PhaseConfig,
    /// Epochs per arm; both arms share this grid.
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub seed: u64,
    pub arm: String,
    pub epoch: usize,
    /// Mean per-sentence loss after the epoch.
    pub train_loss: f64,
    pub test_loss: f64,
}

pub const PRETRAINED: &str = "pretrained";
pub const RANDOM: &str = "random";

/// For every seed, trains the context model twice with the same data order:
/// once stacked on word- and sentence-phase training, once from random
/// initialization. Returns one point per seed, arm, and epoch.
pub fn compare_init<T: Real>(train: &Corpus, test: &Corpus, config: &CompareConfig, seeds: &[u64]) -> Result<Vec<CurvePoint>> {
    let mut points = Vec::new();
    for &seed in seeds {
        let pretrained = pretrained_start::<T>(train, config, seed)?;
        let random = Hcrn::<T>::new(config.model.clone().at_stage(Stage::Discourse), &mut stream(seed, Stream::Init))?;
        for (arm, model, freeze) in [(PRETRAINED, pretrained, config.discourse.freeze_epochs), (RANDOM, random, 0)] {
            let phase = PhaseConfig {
                seed,
                freeze_epochs: freeze,
                max_epochs: config.epochs,
                stopping: StoppingRule::Never,
                restore_best: false,
                ..config.discourse.clone()
            };
            let objective = DiscourseObjective::new(train, None, None, phase.truncate);
            let mut session = Session::new(model, phase)?;
            while !session.is_done() {
                session.run_epoch(&objective)?;
                let (train_loss, _) = dialogue_pass(&session.model, &train.dialogues)?;
                let (test_loss, _) = dialogue_pass(&session.model, &test.dialogues)?;
                points.push(CurvePoint { seed, arm: arm.into(), epoch: session.epoch() - 1, train_loss, test_loss });
            }
        }
    }
    Ok(points)
}

fn pretrained_start<T: Real>(train: &Corpus, config: &CompareConfig, seed: u64) -> Result<Hcrn<T>> {
    let word_cfg = PhaseConfig { seed, ..config.word.clone() };
    let word_model = Hcrn::<T>::new(config.model.clone().at_stage(Stage::Word), &mut stream(seed, Stream::Init))?;
    let objective = WordObjective::from_inventory(&word_inventory(train), word_cfg.valid_fraction, seed)?;
    let mut session = Session::new(word_model, word_cfg)?;
    session.run(&objective)?;
    let (word_model, _) = session.finish();

    let sentence_model = stack_on(config.model.clone().at_stage(Stage::Sentence), &word_model, seed)?;
    let mut session = Session::new(sentence_model, PhaseConfig { seed, ..config.sentence.clone() })?;
    session.run(&SentenceObjective::new(train, None, None))?;
    let (sentence_model, _) = session.finish();

    stack_on(config.model.clone().at_stage(Stage::Discourse), &sentence_model, seed)
}

/// Mean final-epoch train loss of `arm` across seeds.
pub fn final_train_loss(points: &[CurvePoint], arm: &str) -> Option<f64> {
    let last = points.iter().filter(|p| p.arm == arm).map(|p| p.epoch).max()?;
    let finals: Vec<f64> = points.iter().filter(|p| p.arm == arm && p.epoch == last).map(|p| p.train_loss).collect();
    Some(finals.iter().sum::<f64>() / finals.len() as f64)
}

/// CSV with a `# seeds:` comment line, then
/// `seed,arm,epoch,train_loss,test_loss`.
pub fn curves_csv(points: &[CurvePoint], seeds: &[u64]) -> String {
    let seed_list: Vec<String> = seeds.iter().map(u64::to_string).collect();
    let mut out = format!("# seeds: {}\nseed,arm,epoch,train_loss,test_loss\n", seed_list.join(","));
    for p in points {
        out.push_str(&format!("{},{},{},{},{}\n", p.seed, p.arm, p.epoch, p.train_loss, p.test_loss));
    }
    out
}
