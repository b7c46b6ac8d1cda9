//! Read-only evaluation passes, fanned out over a worker pool with results
//! kept in input order.

use rayon::prelude::*;

use crate::corpus::{Corpus, Dialogue, Sentence};
use crate::error::{Error, Result};
use crate::layers::argmax;
use crate::metrics::{classification_error, ClassificationReport};
use crate::model::{Hcrn, SentenceClassifier, Stage};
use crate::real::Real;
use crate::tape::Tape;

/// Worker count from `HCRN_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("HCRN_THREADS").ok().and_then(|s| s.trim().parse().ok()).filter(|&n| n > 0)
}

/// Maps `f` over `items` in parallel; output order matches input order.
pub fn par_map<I, O, F>(items: &[I], f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Sync + Send,
{
    let run = || items.par_iter().map(&f).collect::<Result<Vec<O>>>();
    match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Mean per-sentence loss and predictions, one sentence at a time.
pub fn sentence_pass<T: Real, M: SentenceClassifier<T>>(model: &M, sentences: &[Sentence]) -> Result<(f64, Vec<usize>)> {
    let out = par_map(sentences, |s| {
        let mut tape = Tape::new();
        let logits = model.sentence_logits(&mut tape, s)?;
        let pred = argmax(tape.value(logits).data());
        let loss = tape.softmax_nll(logits, s.label)?;
        Ok((tape.scalar_value(loss)?.as_f64(), pred))
    })?;
    Ok(mean_and_preds(out, sentences.len()))
}

/// Mean per-sentence loss and predictions with context carried through each
/// dialogue.
pub fn dialogue_pass<T: Real>(model: &Hcrn<T>, dialogues: &[Dialogue]) -> Result<(f64, Vec<usize>)> {
    let per = par_map(dialogues, |d| {
        let mut tape = Tape::new();
        let logits = model.dialogue_logits(&mut tape, &d.sentences, None)?;
        let mut out = Vec::with_capacity(logits.len());
        for (&l, s) in logits.iter().zip(&d.sentences) {
            let pred = argmax(tape.value(l).data());
            let loss = tape.softmax_nll(l, s.label)?;
            out.push((tape.scalar_value(loss)?.as_f64(), pred));
        }
        Ok(out)
    })?;
    let flat: Vec<(f64, usize)> = per.into_iter().flatten().collect();
    let n = flat.len();
    Ok(mean_and_preds(flat, n))
}

fn mean_and_preds(out: Vec<(f64, usize)>, n: usize) -> (f64, Vec<usize>) {
    let total: f64 = out.iter().map(|(l, _)| l).sum();
    let mean = if n == 0 { 0.0 } else { total / n as f64 };
    (mean, out.into_iter().map(|(_, p)| p).collect())
}

pub fn labels(corpus: &Corpus) -> Vec<usize> {
    corpus.sentences().map(|s| s.label).collect()
}

/// Mean per-sentence loss and predictions for whichever stage `model` is in.
pub fn corpus_pass<T: Real>(model: &Hcrn<T>, corpus: &Corpus) -> Result<(f64, Vec<usize>)> {
    match model.stage() {
        Stage::Discourse => dialogue_pass(model, &corpus.dialogues),
        Stage::Sentence => {
            let sentences: Vec<Sentence> = corpus.sentences().cloned().collect();
            sentence_pass(model, &sentences)
        }
        Stage::Word => Err(Error::Config("a word-stage model has no classifier".into())),
    }
}

/// Classification report over every sentence of `corpus`.
pub fn evaluate<T: Real>(model: &Hcrn<T>, corpus: &Corpus) -> Result<ClassificationReport> {
    let (_, preds) = corpus_pass(model, corpus)?;
    classification_error(&preds, &labels(corpus), model.config().num_classes)
}

/// Fraction of sentences classified correctly.
pub fn accuracy<T: Real>(model: &Hcrn<T>, corpus: &Corpus) -> Result<f64> {
    Ok(evaluate(model, corpus)?.accuracy())
}
