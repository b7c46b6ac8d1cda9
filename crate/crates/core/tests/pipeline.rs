mod common;

use common::{phase, sentence, tiny_config, toy_config, toy_dialogue};
use hcrn::corpus::synth::{synth_dialogues, SynthKind, SynthSpec};
use hcrn::corpus::{Corpus, RawDialogue, RawTurn, TagSet};
use hcrn::model::{FlatConfig, FlatRnn, Hcrn, Model, SentenceClassifier, Stage};
use hcrn::rng::{stream, Stream};
use hcrn::tape::Tape;
use hcrn::train::{load_model, save_model, stack_on, AnyModel, Checkpoint, SentenceObjective, Session};
use hcrn::Error;

fn bits(m: &impl Model<f64>, prefix: &str) -> Vec<u64> {
    m.params().iter().filter(|p| p.name.starts_with(prefix)).flat_map(|p| p.value.data().iter().map(|v| v.to_bits())).collect()
}

#[test]
fn stacking_copies_trained_groups_only() {
    let word = Hcrn::<f64>::new(tiny_config(Stage::Word, 3), &mut stream(1, Stream::Init)).unwrap();
    let sentence = stack_on(tiny_config(Stage::Sentence, 3), &word, 2).unwrap();
    assert_eq!(bits(&sentence, "cc."), bits(&word, "cc."));
    assert_eq!(bits(&sentence, "char."), bits(&word, "char."));
    assert!(sentence.params().by_name("dec.out.W").is_none());

    let discourse = stack_on(tiny_config(Stage::Discourse, 3), &sentence, 3).unwrap();
    assert_eq!(bits(&discourse, "cw."), bits(&sentence, "cw."));
    let fresh = Hcrn::<f64>::new(tiny_config(Stage::Discourse, 3), &mut stream(3, Stream::Init)).unwrap();
    assert_eq!(bits(&discourse, "mlp."), bits(&fresh, "mlp."));

    assert!(matches!(stack_on(tiny_config(Stage::Discourse, 3), &word, 1), Err(Error::Dimension(_))));
    assert!(matches!(stack_on(tiny_config(Stage::Word, 3), &sentence, 1), Err(Error::Dimension(_))));
}

#[test]
fn saved_models_predict_identically() {
    let dir = tempfile::tempdir().unwrap();
    let s = sentence("A", "right so", 0);

    let hcrn = Hcrn::<f64>::new(tiny_config(Stage::Discourse, 3), &mut stream(1, Stream::Init)).unwrap();
    let path = dir.path().join("hcrn.ckpt");
    save_model(&hcrn, &path).unwrap();
    let back: AnyModel<f64> = load_model(&path).unwrap();
    assert!(matches!(back, AnyModel::Hcrn(_)));
    assert_eq!(back.predict_sentence(&s).unwrap(), hcrn.predict_sentence(&s).unwrap());

    let flat = FlatRnn::<f64>::new(FlatConfig::new(&[5], 3), &mut stream(2, Stream::Init)).unwrap();
    let path = dir.path().join("flat.ckpt");
    save_model(&flat, &path).unwrap();
    let back: AnyModel<f64> = load_model(&path).unwrap();
    assert_eq!(bits(&back, ""), bits(&flat, ""));
    assert!(load_model::<f64, Hcrn<f64>>(&path).is_err());
}

#[test]
fn restore_best_survives_a_checkpoint() {
    let corpus = synth_dialogues(&SynthSpec::new(SynthKind::ContextFree, 2, 5), 1);
    let model = Hcrn::<f64>::new(toy_config(Stage::Sentence, 6), &mut stream(1, Stream::Init)).unwrap();
    let mut cfg = phase(Stage::Sentence, 1, 3, 4);
    cfg.restore_best = true;
    let mut session = Session::new(model, cfg).unwrap();
    session.run_epoch(&SentenceObjective::new(&corpus, None, None)).unwrap();
    let ck = session.checkpoint();
    assert!(ck.manifest.tensors.iter().any(|t| t.name.starts_with("best/")));
    let back = Session::<f64, Hcrn<f64>>::from_checkpoint(&Checkpoint::from_bytes(&ck.to_bytes()).unwrap()).unwrap();
    assert_eq!(back.epoch(), 1);
    assert_eq!(back.finish().0.params().len(), session.model.params().len());
}

#[test]
fn truncation_changes_gradients_not_values() {
    let model = Hcrn::<f64>::new(tiny_config(Stage::Discourse, 3), &mut stream(1, Stream::Init)).unwrap();
    let d = toy_dialogue();
    let loss = |k: Option<usize>| {
        let mut tape = Tape::new();
        let l = model.dialogue_loss(&mut tape, &d, k).unwrap();
        tape.scalar_value(l).unwrap().to_bits()
    };
    assert_eq!(loss(None), loss(Some(1)));
}

#[test]
fn raw_transcripts_are_cleaned_and_merged() {
    let turn = |s: &str, l: &str, t: &str, seg: bool| RawTurn { speaker: s.into(), label: l.into(), text: t.into(), segment: seg };
    let raw = vec![RawDialogue {
        id: "sw1".into(),
        turns: vec![
            turn("A", "c0", "Well, {F uh} I think- /", false),
            turn("B", "c1", "Uh-huh. /", false),
            turn("A", "+", "it's [ the, + the ] one. /", true),
            turn("B", "c1", "((  )) -- /", false),
        ],
    }];
    let corpus = Corpus::preprocess(TagSet::numbered(2), raw).unwrap();
    let texts: Vec<&str> = corpus.sentences().map(|s| s.raw_text.as_str()).collect();
    assert_eq!(texts, ["well uh i think- it's the the one", "uh-huh"]);
}
