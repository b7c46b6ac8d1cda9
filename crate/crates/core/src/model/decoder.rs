use rand::Rng;

use crate::corpus::{CharId, CharVocab};
use crate::error::Result;
use crate::layers::{argmax, Activation, Affine, EmbeddingTable, GruStack, Init};
use crate::real::Real;
use crate::tape::{Tape, Var};
use crate::tensor::ParamStore;

/// Character-sequence decoder used for spelling pre-training.
///
/// The stack mirrors the encoder's layer sizes. Every layer starts from the
/// word vector, passed through `dec.init{l}` when that layer's width differs
/// from the word vector. Step `t` reads the embedding of character `t - 1`
/// (start-of-word at `t = 0`) and scores every corpus symbol plus
/// end-of-word.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub embed: EmbeddingTable,
    pub stack: GruStack,
    pub init: Vec<Option<Affine>>,
    pub out: Affine,
    sow: CharId,
    eow: CharId,
}

impl Decoder {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        vocab: &CharVocab,
        embed_dim: usize,
        word_dim: usize,
        layers: &[usize],
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        let embed = EmbeddingTable::new(store, "dec.embed", vocab.len(), embed_dim, init, rng)?;
        let stack = GruStack::new(store, "dec", embed_dim, layers, init, rng)?;
        let mut projections = Vec::with_capacity(layers.len());
        for (l, &h) in layers.iter().enumerate() {
            projections.push(if h == word_dim {
                None
            } else {
                Some(Affine::new(store, &format!("dec.init{l}"), word_dim, h, init, rng)?)
            });
        }
        let out = Affine::new(store, "dec.out", stack.output_dim(), vocab.output_len(), init, rng)?;
        Ok(Decoder { embed, stack, init: projections, out, sow: vocab.sow(), eow: vocab.eow() })
    }

    fn initial_states<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, word: Var) -> Result<Vec<Var>> {
        self.init
            .iter()
            .map(|p| match p {
                None => Ok(word),
                Some(a) => a.forward(tape, store, word, Activation::Identity),
            })
            .collect()
    }

    /// Summed negative log-likelihood of `chars` followed by end-of-word.
    pub fn teacher_forced_loss<T: Real>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        word: Var,
        chars: &[CharId],
    ) -> Result<Var> {
        let mut states = self.initial_states(tape, store, word)?;
        let mut prev = self.sow;
        let mut losses = Vec::with_capacity(chars.len() + 1);
        for &target in chars.iter().chain(std::iter::once(&self.eow)) {
            let x = self.embed.lookup(tape, store, prev)?;
            states = self.stack.step(tape, store, &states, x)?;
            let logits = self.out.forward(tape, store, *states.last().expect("non-empty stack"), Activation::Identity)?;
            losses.push(tape.softmax_nll(logits, target)?);
            prev = target;
        }
        tape.add_all(&losses)
    }

    /// Feeds back the highest-scoring symbol until end-of-word or `max_len`
    /// symbols. End-of-word is not included in the result.
    pub fn greedy<T: Real>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, word: Var, max_len: usize) -> Result<Vec<CharId>> {
        let mut states = self.initial_states(tape, store, word)?;
        let mut prev = self.sow;
        let mut out = Vec::new();
        while out.len() < max_len {
            let x = self.embed.lookup(tape, store, prev)?;
            states = self.stack.step(tape, store, &states, x)?;
            let logits = self.out.forward(tape, store, *states.last().expect("non-empty stack"), Activation::Identity)?;
            let next = argmax(tape.value(logits).data());
            if next == self.eow {
                break;
            }
            out.push(next);
            prev = next;
        }
        Ok(out)
    }
}
