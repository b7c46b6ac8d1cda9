//! Synthetic dialogue corpora with known label structure.
//!
//! Every generator draws a sequence of sentence *contents* per dialogue, a
//! speaker-change bit `b` per sentence (always 0 for the first), and derives
//! each label from a fixed table. Contents map to a handful of fixed surface
//! forms, so a model that sees one sentence at a time can do no better than
//! the table allows.
//!
//! * [`SynthKind::ContextFree`]: the label is the class of a cue word that
//!   appears somewhere in the sentence.
//! * [`SynthKind::ContextBound`]: contents 0 and 1 give labels 0 and 1.
//!   Content 2 gives label `2 + (b xor p)` and content 3 gives `4 + (b xor p)`,
//!   where `p` is 1 when the previous label is even. Dialogues open with
//!   content 0 or 1, and later contents are weighted so that exactly half of
//!   all sentences are ambiguous: per-sentence accuracy cannot exceed 75%.
//! * [`SynthKind::SpeakerBound`]: label `2c + b` for content `c` in {0, 1}.
//! * [`SynthKind::LongSentence`]: sentences of at least 40 characters whose
//!   label is the class of the first word.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, RawDialogue, RawTurn, TagSet};
use crate::rng::{stream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    ContextFree,
    ContextBound,
    SpeakerBound,
    LongSentence,
}

impl std::str::FromStr for SynthKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "context-free" => Ok(SynthKind::ContextFree),
            "context-bound" => Ok(SynthKind::ContextBound),
            "speaker-bound" => Ok(SynthKind::SpeakerBound),
            "long-sentence" => Ok(SynthKind::LongSentence),
            other => Err(format!("unknown synthetic corpus kind {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub dialogues: usize,
    /// At least 2 for the context-bound kind.
    pub sentences_per_dialogue: usize,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, dialogues: usize, sentences_per_dialogue: usize) -> Self {
        SynthSpec { kind, dialogues, sentences_per_dialogue }
    }

    pub fn num_classes(&self) -> usize {
        match self.kind {
            SynthKind::ContextFree | SynthKind::ContextBound | SynthKind::LongSentence => 6,
            SynthKind::SpeakerBound => 4,
        }
    }

    pub fn tagset(&self) -> TagSet {
        TagSet::numbered(self.num_classes())
    }

    fn num_contents(&self) -> usize {
        match self.kind {
            SynthKind::ContextFree | SynthKind::LongSentence => 6,
            SynthKind::ContextBound => 4,
            SynthKind::SpeakerBound => 2,
        }
    }

    /// Content distribution at sentence position `pos` (0-based).
    pub fn content_probs(&self, pos: usize) -> Vec<f64> {
        let n = self.num_contents();
        match self.kind {
            SynthKind::ContextBound => {
                if pos == 0 {
                    return vec![0.5, 0.5, 0.0, 0.0];
                }
                let l = self.sentences_per_dialogue as f64;
                let ambiguous = l / (2.0 * (l - 1.0));
                let a = ambiguous / 2.0;
                let u = (1.0 - ambiguous) / 2.0;
                vec![u, u, a, a]
            }
            _ => vec![1.0 / n as f64; n],
        }
    }

    /// Label from content, speaker-change bit, and previous label.
    pub fn label(&self, content: usize, change: bool, prev_label: Option<usize>) -> usize {
        match self.kind {
            SynthKind::ContextFree | SynthKind::LongSentence => content,
            SynthKind::SpeakerBound => 2 * content + change as usize,
            SynthKind::ContextBound => {
                let parity = prev_label.is_some_and(|l| l % 2 == 0);
                match content {
                    0 | 1 => content,
                    2 => 2 + (change ^ parity) as usize,
                    _ => 4 + (change ^ parity) as usize,
                }
            }
        }
    }

    /// Best accuracy achievable from one sentence's content alone, computed
    /// exactly by propagating the label distribution through the dialogue.
    pub fn sentence_ceiling(&self) -> f64 {
        let (l, k, n) = (self.sentences_per_dialogue, self.num_classes(), self.num_contents());
        // joint[c][y] = P(content c, label y) at a uniformly random position
        let mut joint = vec![vec![0.0; k]; n];
        // prev[y] = P(previous label y); None before the first sentence
        let mut prev: Option<Vec<f64>> = None;
        for pos in 0..l {
            let mut next = vec![0.0; k];
            let changes: &[(bool, f64)] = if pos == 0 { &[(false, 1.0)] } else { &[(false, 0.5), (true, 0.5)] };
            for (c, &pc) in self.content_probs(pos).iter().enumerate() {
                for &(b, pb) in changes {
                    let mut add = |y: usize, p: f64| {
                        joint[c][y] += p / l as f64;
                        next[y] += p;
                    };
                    match &prev {
                        None => add(self.label(c, b, None), pc * pb),
                        Some(pp) => {
                            for (y0, &py) in pp.iter().enumerate() {
                                add(self.label(c, b, Some(y0)), pc * pb * py);
                            }
                        }
                    }
                }
            }
            prev = Some(next);
        }
        joint.iter().map(|row| row.iter().copied().fold(0.0, f64::max)).sum()
    }

    /// Best accuracy for a model that sees every sentence and its position
    /// but not who is speaking.
    pub fn speaker_blind_ceiling(&self) -> f64 {
        match self.kind {
            SynthKind::SpeakerBound => {
                let l = self.sentences_per_dialogue as f64;
                (1.0 + 0.5 * (l - 1.0)) / l
            }
            _ => 1.0,
        }
    }
}

const CUES: [&str; 6] = ["yeah", "what", "okay", "no", "well", "right"];
const FILLERS: [&str; 8] = ["the", "a", "it", "is", "we", "go", "to", "that"];

const BOUND_FORMS: [[&str; 3]; 4] = [
    ["i think so", "that is fine", "we can go"],
    ["did you go", "is it there", "can we"],
    ["uh-huh", "yeah", "right"],
    ["okay", "i see", "oh"],
];

const SPEAKER_FORMS: [[&str; 3]; 2] = [["uh-huh", "yeah", "right"], ["i think so", "we can go", "that is fine"]];

const LONG_HEADS: [&str; 6] = ["alpha", "bravo", "delta", "gamma", "kilo", "sierra"];
const LONG_BODY: [&str; 10] = ["the", "old", "river", "runs", "past", "our", "green", "field", "and", "hill"];

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn surface<R: Rng + ?Sized>(kind: SynthKind, content: usize, rng: &mut R) -> String {
    match kind {
        SynthKind::ContextFree => {
            let n = rng.gen_range(1..=3);
            let mut words: Vec<&str> = (0..n).map(|_| *FILLERS.choose(rng).unwrap()).collect();
            words.insert(rng.gen_range(0..=n), CUES[content]);
            words.join(" ")
        }
        SynthKind::ContextBound => BOUND_FORMS[content].choose(rng).unwrap().to_string(),
        SynthKind::SpeakerBound => SPEAKER_FORMS[content].choose(rng).unwrap().to_string(),
        SynthKind::LongSentence => {
            let mut text = LONG_HEADS[content].to_string();
            while text.len() < 40 {
                text.push(' ');
                text.push_str(LONG_BODY.choose(rng).unwrap());
            }
            text
        }
    }
}

/// Raw dialogues for `spec`; identical for identical seeds.
pub fn synth_raw(spec: &SynthSpec, seed: u64) -> Vec<RawDialogue> {
    let mut rng = stream(seed, Stream::Synth);
    let tags = spec.tagset();
    (0..spec.dialogues)
        .map(|d| {
            let mut speaker = if rng.gen() { "A" } else { "B" };
            let mut prev = None;
            let turns = (0..spec.sentences_per_dialogue)
                .map(|pos| {
                    let change = pos > 0 && rng.gen::<bool>();
                    if change {
                        speaker = if speaker == "A" { "B" } else { "A" };
                    }
                    let content = draw(&spec.content_probs(pos), &mut rng);
                    let label = spec.label(content, change, prev);
                    prev = Some(label);
                    RawTurn {
                        speaker: speaker.to_string(),
                        label: tags.name(label).to_string(),
                        text: surface(spec.kind, content, &mut rng),
                        segment: false,
                    }
                })
                .collect();
            RawDialogue { id: format!("synth{d:04}"), turns }
        })
        .collect()
}

pub fn synth_dialogues(spec: &SynthSpec, seed: u64) -> Corpus {
    Corpus::from_raw(spec.tagset(), synth_raw(spec, seed)).expect("generated labels are in the tagset")
}

/// `n` distinct words of 2 to `max_len` letters drawn from `alphabet`.
pub fn synth_words(n: usize, max_len: usize, alphabet: &str, seed: u64) -> Vec<String> {
    let letters: Vec<char> = alphabet.chars().collect();
    let mut rng = stream(seed, Stream::Synth);
    let mut seen = std::collections::BTreeSet::new();
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let len = rng.gen_range(2..=max_len.max(2));
        let w: String = (0..len).map(|_| *letters.choose(&mut rng).unwrap()).collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let spec = SynthSpec::new(SynthKind::ContextBound, 5, 6);
        assert_eq!(synth_raw(&spec, 3), synth_raw(&spec, 3));
        assert_ne!(synth_raw(&spec, 3), synth_raw(&spec, 4));
    }

    #[test]
    fn context_bound_content_mix() {
        for l in [2, 5, 10, 17] {
            let spec = SynthSpec::new(SynthKind::ContextBound, 1, l);
            let mut ambiguous = 0.0;
            for pos in 0..l {
                let p = spec.content_probs(pos);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                ambiguous += p[2] + p[3];
            }
            assert!((ambiguous / l as f64 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ceilings() {
        assert!((SynthSpec::new(SynthKind::ContextBound, 1, 10).sentence_ceiling() - 0.75).abs() < 1e-12);
        assert!((SynthSpec::new(SynthKind::ContextFree, 1, 4).sentence_ceiling() - 1.0).abs() < 1e-12);
        let sb = SynthSpec::new(SynthKind::SpeakerBound, 1, 10);
        assert!((sb.speaker_blind_ceiling() - 0.55).abs() < 1e-12);
    }

    #[test]
    fn long_sentences_are_long() {
        let c = synth_dialogues(&SynthSpec::new(SynthKind::LongSentence, 3, 4), 1);
        for s in c.sentences() {
            assert!(s.raw_text.len() >= 40, "{}", s.raw_text);
        }
    }

    #[test]
    fn words_distinct_and_bounded() {
        let w = synth_words(50, 8, "abcdef", 2);
        assert_eq!(w.len(), 50);
        assert!(w.iter().all(|x| (2..=8).contains(&x.len()) && x.chars().all(|c| "abcdef".contains(c))));
    }
}
