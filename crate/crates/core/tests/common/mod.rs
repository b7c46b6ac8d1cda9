#![allow(dead_code)]

use hcrn::corpus::{tokenize, CharVocab, Corpus, Sentence};
use hcrn::model::{Hcrn, HcrnConfig, Stage};
use hcrn::rng::{stream, Stream};
use hcrn::train::{DiscourseObjective, PhaseConfig, SentenceObjective, Session, StoppingRule};

/// Desk-sized model: CC 1×16, CW 1×32, CS 1×32, 32-unit classifier.
pub fn toy_config(stage: Stage, num_classes: usize) -> HcrnConfig {
    let mut c = HcrnConfig::with_sizes(&[16], &[32], &[32], num_classes).at_stage(stage);
    c.init_scale = 0.3;
    c.mlp_hidden = 32;
    c
}

/// Tiny model for finite-difference checks.
pub fn tiny_config(stage: Stage, num_classes: usize) -> HcrnConfig {
    let mut c = HcrnConfig::with_sizes(&[4], &[3, 3], &[3], num_classes).at_stage(stage);
    c.word = hcrn::model::WordEncoderConfig::Compositional { char_embed_dim: 3, layers: vec![4] };
    c.init_scale = 0.5;
    c.mlp_hidden = 5;
    c
}

pub fn sentence(agent: &str, text: &str, label: usize) -> Sentence {
    let v = CharVocab::standard();
    Sentence { words: tokenize(&v, text), agent: agent.into(), label, raw_text: text.into() }
}

pub fn toy_dialogue() -> Vec<Sentence> {
    vec![sentence("A", "hi there", 0), sentence("B", "ok", 2), sentence("B", "yes i do", 1)]
}

pub fn phase(stage: Stage, seed: u64, epochs: usize, batch: usize) -> PhaseConfig {
    let mut cfg = match stage {
        Stage::Word => PhaseConfig::word(seed),
        Stage::Sentence => PhaseConfig::sentence(seed, false),
        Stage::Discourse => PhaseConfig::discourse(seed, false),
    };
    cfg.max_epochs = epochs;
    cfg.batch_size = batch;
    cfg.stopping = StoppingRule::Never;
    cfg
}

/// Trains a fresh toy model on `corpus` at `stage` and returns it with its
/// per-epoch train losses.
pub fn train_classifier(corpus: &Corpus, config: HcrnConfig, seed: u64, epochs: usize, batch: usize) -> (Hcrn<f64>, Vec<f64>) {
    let stage = config.stage;
    let model = Hcrn::<f64>::new(config, &mut stream(seed, Stream::Init)).unwrap();
    let mut session = Session::new(model, phase(stage, seed, epochs, batch)).unwrap();
    match stage {
        Stage::Sentence => session.run(&SentenceObjective::new(corpus, None, None)).unwrap(),
        Stage::Discourse => session.run(&DiscourseObjective::new(corpus, None, None, None)).unwrap(),
        Stage::Word => panic!("not a classifier stage"),
    }
    let (model, history) = session.finish();
    (model, history.iter().map(|r| r.train_loss).collect())
}
