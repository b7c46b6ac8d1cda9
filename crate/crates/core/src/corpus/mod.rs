//! Dialogue corpora: on-disk format, tokenization, statistics, splits, and
//! the word inventory used for spelling pre-training.
//!
//! A corpus file holds one dialogue per line:
//!
//! ```text
//! {"id":"sw0001","turns":[{"speaker":"A","label":"Statement-non-opinion","text":"i went"}, ...]}
//! ```
//!
//! A turn may carry `"segment":true` to continue the same speaker's previous
//! sentence after an interruption.

mod batch;
mod preprocess;
pub mod synth;
mod tagset;
mod vocab;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use batch::{make_batches, DIALOGUE_BATCH, SENTENCE_BATCH, WORD_BATCH};
pub use preprocess::{merge_segments, preprocess_dialogue, preprocess_text};
pub use tagset::{TagSet, SWBD_DAMSL};
pub use vocab::{CharId, CharVocab, BLANK, EOW, NOISE, SOW, UNK};

fn is_false(b: &bool) -> bool {
    !*b
}

/// One line of a corpus file before tokenization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTurn {
    pub speaker: String,
    pub label: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub segment: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDialogue {
    pub id: String,
    pub turns: Vec<RawTurn>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub words: Vec<Vec<CharId>>,
    pub agent: String,
    pub label: usize,
    pub raw_text: String,
}

impl Sentence {
    pub fn num_chars(&self) -> usize {
        self.words.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

/// Splits cleaned text on whitespace and maps every word to character ids.
///
/// ```
/// use hcrn::corpus::{tokenize, CharVocab};
/// let v = CharVocab::standard();
/// assert_eq!(tokenize(&v, "i am").len(), 2);
/// assert_eq!(tokenize(&v, "$"), vec![vec![v.unk()]]);
/// ```
pub fn tokenize(vocab: &CharVocab, text: &str) -> Vec<Vec<CharId>> {
    text.split_whitespace().map(|w| vocab.encode_word(w)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub vocab: CharVocab,
    pub tagset: TagSet,
    pub dialogues: Vec<Dialogue>,
}

impl Corpus {
    pub fn new(tagset: TagSet) -> Self {
        Corpus { vocab: CharVocab::standard(), tagset, dialogues: Vec::new() }
    }

    /// Merges segments, tokenizes, and resolves labels. Sentences without
    /// words and dialogues without sentences are dropped.
    pub fn from_raw(tagset: TagSet, raw: Vec<RawDialogue>) -> Result<Self> {
        let vocab = CharVocab::standard();
        let mut unknown = BTreeMap::<String, usize>::new();
        let mut dialogues = Vec::with_capacity(raw.len());
        for d in raw {
            let d = merge_segments(d);
            let mut sentences = Vec::with_capacity(d.turns.len());
            for t in d.turns {
                let words = tokenize(&vocab, &t.text);
                if words.is_empty() {
                    continue;
                }
                match tagset.id(&t.label) {
                    Some(label) => sentences.push(Sentence { words, agent: t.speaker, label, raw_text: t.text }),
                    None => *unknown.entry(t.label).or_default() += 1,
                }
            }
            if sentences.is_empty() {
                warn!("dialogue {} has no sentences; dropped", d.id);
                continue;
            }
            dialogues.push(Dialogue { id: d.id, sentences });
        }
        if !unknown.is_empty() {
            let list: Vec<String> = unknown.iter().map(|(l, n)| format!("{l:?} ({n}x)")).collect();
            return Err(Error::Data(format!("labels not in tagset: {}", list.join(", "))));
        }
        Ok(Corpus { vocab, tagset, dialogues })
    }

    /// [`Corpus::from_raw`] on transcripts that still carry markup.
    pub fn preprocess(tagset: TagSet, raw: Vec<RawDialogue>) -> Result<Self> {
        Self::from_raw(tagset, raw.into_iter().map(preprocess_dialogue).collect())
    }

    pub fn to_raw(&self) -> Vec<RawDialogue> {
        self.dialogues
            .iter()
            .map(|d| RawDialogue {
                id: d.id.clone(),
                turns: d
                    .sentences
                    .iter()
                    .map(|s| RawTurn {
                        speaker: s.agent.clone(),
                        label: self.tagset.name(s.label).to_string(),
                        text: s.raw_text.clone(),
                        segment: false,
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn parse_jsonl(tagset: TagSet, reader: impl BufRead) -> Result<Self> {
        Self::from_raw(tagset, read_raw_jsonl(reader)?)
    }

    pub fn load(tagset: TagSet, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse_jsonl(tagset, std::io::BufReader::new(file))
    }

    pub fn to_jsonl(&self) -> String {
        write_raw_jsonl(&self.to_raw())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn num_sentences(&self) -> usize {
        self.dialogues.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn num_words(&self) -> usize {
        self.sentences().map(|s| s.words.len()).sum()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.dialogues.iter().flat_map(|d| d.sentences.iter())
    }

    /// Keeps only the listed dialogues, in corpus order.
    fn subset(&self, ids: &HashSet<&str>) -> Corpus {
        Corpus {
            vocab: self.vocab.clone(),
            tagset: self.tagset.clone(),
            dialogues: self.dialogues.iter().filter(|d| ids.contains(d.id.as_str())).cloned().collect(),
        }
    }
}

/// Reads one JSON dialogue per non-blank line.
pub fn read_raw_jsonl(reader: impl BufRead) -> Result<Vec<RawDialogue>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let d: RawDialogue =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("line {}: {e}", n + 1)))?;
        out.push(d);
    }
    Ok(out)
}

pub fn write_raw_jsonl(dialogues: &[RawDialogue]) -> String {
    let mut out = String::new();
    for d in dialogues {
        out.push_str(&serde_json::to_string(d).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

/// Population mean and standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return MeanStd::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ({:.2})", self.mean, self.std)
    }
}

/// Sequence lengths at each level of the hierarchy.
///
/// `chars_per_word` is over distinct words; `chars_per_word_token` weights
/// each word by its frequency. `chars_per_sentence` counts one separator
/// between adjacent words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub chars_per_word: MeanStd,
    pub words_per_sentence: MeanStd,
    pub sentences_per_dialogue: MeanStd,
    pub chars_per_sentence: MeanStd,
    pub chars_per_word_token: MeanStd,
    pub dialogues: usize,
    pub sentences: usize,
    pub words: usize,
    pub unique_words: usize,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let inventory = word_inventory(corpus);
    let sentences: Vec<&Sentence> = corpus.sentences().collect();
    CorpusStats {
        chars_per_word: MeanStd::of(inventory.keys().map(|w| w.len() as f64)),
        words_per_sentence: MeanStd::of(sentences.iter().map(|s| s.words.len() as f64)),
        sentences_per_dialogue: MeanStd::of(corpus.dialogues.iter().map(|d| d.sentences.len() as f64)),
        chars_per_sentence: MeanStd::of(sentences.iter().map(|s| (s.num_chars() + s.words.len() - 1) as f64)),
        chars_per_word_token: MeanStd::of(sentences.iter().flat_map(|s| s.words.iter().map(|w| w.len() as f64))),
        dialogues: corpus.dialogues.len(),
        sentences: sentences.len(),
        words: inventory.values().sum(),
        unique_words: inventory.len(),
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>14} {:>14} {:>16} {:>14}", "Hierarchy", "#C/W", "#W/S", "#S/D", "#C/S")?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, g: fn(&MeanStd) -> f64| {
            writeln!(
                f,
                "{:<10} {:>14.2} {:>14.2} {:>16.2} {:>14.2}",
                name,
                g(&self.chars_per_word),
                g(&self.words_per_sentence),
                g(&self.sentences_per_dialogue),
                g(&self.chars_per_sentence)
            )
        };
        row(f, "Mean", |m| m.mean)?;
        row(f, "Std", |m| m.std)?;
        write!(
            f,
            "dialogues {}  sentences {}  words {}  unique words {}  #C/W per token {}",
            self.dialogues, self.sentences, self.words, self.unique_words, self.chars_per_word_token
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Corpus,
    pub valid: Corpus,
    pub test: Corpus,
}

/// Partitions dialogues by id.
///
/// An empty `train` list means "every dialogue not listed for valid or
/// test". Otherwise unlisted dialogues are dropped with a warning.
pub fn split<S: AsRef<str>>(corpus: &Corpus, train: &[S], valid: &[S], test: &[S]) -> Result<Split> {
    let (mut tr, va, te) = (id_set(train), id_set(valid), id_set(test));
    for (a, b, what) in [(&tr, &va, "train/valid"), (&tr, &te, "train/test"), (&va, &te, "valid/test")] {
        if let Some(id) = a.intersection(b).min() {
            return Err(Error::Config(format!("dialogue {id:?} listed in both {what} splits")));
        }
    }
    let known: HashSet<&str> = corpus.dialogues.iter().map(|d| d.id.as_str()).collect();
    for id in tr.iter().chain(&va).chain(&te) {
        if !known.contains(id) {
            warn!("split lists dialogue {id:?} which is not in the corpus");
        }
    }
    if tr.is_empty() {
        tr = known.iter().filter(|id| !va.contains(*id) && !te.contains(*id)).copied().collect();
    } else {
        let dropped = known.iter().filter(|id| !tr.contains(*id) && !va.contains(*id) && !te.contains(*id)).count();
        if dropped > 0 {
            warn!("{dropped} dialogues are in no split and were dropped");
        }
    }
    Ok(Split { train: corpus.subset(&tr), valid: corpus.subset(&va), test: corpus.subset(&te) })
}

fn id_set<S: AsRef<str>>(ids: &[S]) -> HashSet<&str> {
    ids.iter().map(AsRef::as_ref).collect()
}

/// Reads a split file: one dialogue id per non-blank line.
pub fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

/// Distinct words with their token counts, ordered by character ids.
pub type WordInventory = BTreeMap<Vec<CharId>, usize>;

/// ```
/// use hcrn::corpus::{word_inventory, Corpus, RawDialogue, RawTurn, TagSet};
/// let turn = RawTurn { speaker: "A".into(), label: "c0".into(), text: "a b a".into(), segment: false };
/// let corpus = Corpus::from_raw(TagSet::numbered(1), vec![RawDialogue { id: "d".into(), turns: vec![turn] }]).unwrap();
/// let inv = word_inventory(&corpus);
/// assert_eq!(inv[&corpus.vocab.encode_word("a")], 2);
/// assert_eq!(inv[&corpus.vocab.encode_word("b")], 1);
/// ```
pub fn word_inventory(corpus: &Corpus) -> WordInventory {
    let mut inv = WordInventory::new();
    for w in corpus.sentences().flat_map(|s| s.words.iter()) {
        *inv.entry(w.clone()).or_default() += 1;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(speaker: &str, label: &str, text: &str) -> RawTurn {
        RawTurn { speaker: speaker.into(), label: label.into(), text: text.into(), segment: false }
    }

    fn toy() -> Corpus {
        let raw = vec![
            RawDialogue { id: "d1".into(), turns: vec![turn("A", "c0", "ab cd"), turn("B", "c1", "ab")] },
            RawDialogue { id: "d2".into(), turns: vec![turn("A", "c1", "xyz")] },
            RawDialogue { id: "d3".into(), turns: vec![turn("B", "c0", "q r s")] },
        ];
        Corpus::from_raw(TagSet::numbered(2), raw).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        let v = CharVocab::standard();
        let w = tokenize(&v, "uh-huh");
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].len(), 6);
        assert_eq!(tokenize(&v, "i am").len(), 2);
        assert_eq!(tokenize(&v, "$"), vec![vec![v.unk()]]);
    }

    #[test]
    fn single_sentence_stats() {
        let raw = vec![RawDialogue { id: "d".into(), turns: vec![turn("A", "c0", "ab cd")] }];
        let c = Corpus::from_raw(TagSet::numbered(1), raw).unwrap();
        let s = corpus_stats(&c);
        assert_eq!(s.chars_per_word.mean, 2.0);
        assert_eq!(s.words_per_sentence.mean, 2.0);
        assert_eq!(s.sentences_per_dialogue.mean, 1.0);
        assert_eq!(s.chars_per_sentence.mean, 5.0);
        assert_eq!(s.chars_per_word.std, 0.0);
    }

    #[test]
    fn stats_types_vs_tokens() {
        let s = corpus_stats(&toy());
        // types: ab cd xyz q r s
        assert!((s.chars_per_word.mean - 10.0 / 6.0).abs() < 1e-12);
        // tokens: ab cd ab xyz q r s
        assert!((s.chars_per_word_token.mean - 12.0 / 7.0).abs() < 1e-12);
        assert_eq!(s.words, 7);
        assert_eq!(s.unique_words, 6);
        let text = s.to_string();
        assert!(text.contains("#C/W") && text.contains("Mean"));
    }

    #[test]
    fn unknown_label_is_data_error() {
        let raw = vec![RawDialogue { id: "d".into(), turns: vec![turn("A", "nope", "hi")] }];
        let err = Corpus::from_raw(TagSet::numbered(1), raw).unwrap_err();
        assert!(matches!(err, Error::Data(ref m) if m.contains("nope")), "{err}");
    }

    #[test]
    fn empty_sentences_and_dialogues_dropped() {
        let raw = vec![
            RawDialogue { id: "a".into(), turns: vec![turn("A", "c0", "  "), turn("B", "c0", "ok")] },
            RawDialogue { id: "b".into(), turns: vec![turn("A", "c0", "")] },
        ];
        let c = Corpus::from_raw(TagSet::numbered(1), raw).unwrap();
        assert_eq!(c.dialogues.len(), 1);
        assert_eq!(c.num_sentences(), 1);
    }

    #[test]
    fn jsonl_round_trip() {
        let c = toy();
        let text = c.to_jsonl();
        let back = Corpus::parse_jsonl(c.tagset.clone(), text.as_bytes()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_jsonl(), text);
        assert!(!text.contains("segment"));
    }

    #[test]
    fn segment_flag_parsed() {
        let line = r#"{"id":"d","turns":[{"speaker":"A","label":"c0","text":"i went"},{"speaker":"A","label":"c0","text":"home","segment":true}]}"#;
        let c = Corpus::parse_jsonl(TagSet::numbered(1), line.as_bytes()).unwrap();
        assert_eq!(c.num_sentences(), 1);
        assert_eq!(c.dialogues[0].sentences[0].raw_text, "i went home");
    }

    #[test]
    fn split_partitions() {
        let c = toy();
        let s = split(&c, &["d1"], &[], &["d3"]).unwrap();
        assert_eq!(s.train.dialogues.len(), 1);
        assert!(s.valid.dialogues.is_empty());
        assert_eq!(s.test.dialogues[0].id, "d3");

        let s = split::<&str>(&c, &[], &["d2"], &["d3"]).unwrap();
        assert_eq!(s.train.dialogues[0].id, "d1");
        assert_eq!(s.train.num_sentences() + s.valid.num_sentences() + s.test.num_sentences(), c.num_sentences());

        assert!(matches!(split(&c, &["d1"], &["d1"], &[]), Err(Error::Config(_))));
    }

    #[test]
    fn inventory_counts_sum_to_tokens() {
        let c = toy();
        let inv = word_inventory(&c);
        assert_eq!(inv.values().sum::<usize>(), c.num_words());
        assert_eq!(inv[&c.vocab.encode_word("ab")], 2);
    }
}
