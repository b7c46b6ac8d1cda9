use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Model, ModelSpec, SentenceClassifier};
use crate::corpus::{CharVocab, Sentence, WordInventory};
use crate::error::{Error, Result};
use crate::layers::{EmbeddingTable, GruStack, Init, MlpClassifier};
use crate::real::Real;
use crate::tape::{Tape, Var};
use crate::tensor::ParamStore;

/// Words seen at least `cutoff` times, in inventory order. Everything else
/// shares the unknown-word row of the lookup baseline.
pub fn build_word_list(inventory: &WordInventory, vocab: &CharVocab, cutoff: usize) -> Vec<String> {
    inventory.iter().filter(|(_, &n)| n >= cutoff).map(|(w, _)| vocab.decode(w)).collect()
}

/// Stacked GRU over the characters of a whole sentence, with a blank symbol
/// between words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatConfig {
    pub char_embed_dim: usize,
    pub layers: Vec<usize>,
    pub mlp_hidden: usize,
    pub num_classes: usize,
    pub init_scale: f64,
}

impl FlatConfig {
    pub fn new(layers: &[usize], num_classes: usize) -> Self {
        FlatConfig { char_embed_dim: 15, layers: layers.to_vec(), mlp_hidden: 128, num_classes, init_scale: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct FlatRnn<T> {
    config: FlatConfig,
    vocab: CharVocab,
    params: ParamStore<T>,
    embed: EmbeddingTable,
    rnn: GruStack,
    mlp: MlpClassifier,
}

impl<T: Real> FlatRnn<T> {
    pub fn new<R: Rng + ?Sized>(config: FlatConfig, rng: &mut R) -> Result<Self> {
        if config.layers.is_empty() || config.layers.contains(&0) || config.char_embed_dim == 0 {
            return Err(Error::Config("flat model needs a positive embedding width and non-empty layers".into()));
        }
        let vocab = CharVocab::standard();
        let init = Init::symmetric(config.init_scale);
        let mut params = ParamStore::new();
        let embed = EmbeddingTable::new(&mut params, "char.embed", vocab.len(), config.char_embed_dim, init, rng)?;
        let rnn = GruStack::new(&mut params, "rnn", config.char_embed_dim, &config.layers, init, rng)?;
        let mlp = MlpClassifier::new(&mut params, "mlp", rnn.output_dim(), config.mlp_hidden, config.num_classes, init, rng)?;
        Ok(FlatRnn { config, vocab, params, embed, rnn, mlp })
    }

    pub fn config(&self) -> &FlatConfig {
        &self.config
    }

    /// Character ids of the sentence with a blank between adjacent words.
    pub fn flatten(&self, words: &[Vec<usize>]) -> Vec<usize> {
        let mut seq = Vec::with_capacity(words.iter().map(Vec::len).sum::<usize>() + words.len());
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                seq.push(self.vocab.blank());
            }
            seq.extend_from_slice(w);
        }
        seq
    }

    /// Top state after the last character.
    pub fn encode(&self, tape: &mut Tape<T>, words: &[Vec<usize>]) -> Result<Var> {
        let seq = self.flatten(words);
        if seq.is_empty() {
            return Err(Error::Input("cannot encode an empty sentence".into()));
        }
        let inputs = seq.iter().map(|&c| self.embed.lookup(tape, &self.params, c)).collect::<Result<Vec<_>>>()?;
        let init = self.rnn.zero_states(tape);
        let states = self.rnn.run(tape, &self.params, init, &inputs)?;
        Ok(*states.last().expect("non-empty stack"))
    }
}

impl<T: Real> Model<T> for FlatRnn<T> {
    fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::Flat(self.config.clone())
    }
}

impl<T: Real> SentenceClassifier<T> for FlatRnn<T> {
    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn sentence_logits(&self, tape: &mut Tape<T>, sentence: &Sentence) -> Result<Var> {
        let rep = self.encode(tape, &sentence.words)?;
        self.mlp.logits(tape, &self.params, rep)
    }
}
