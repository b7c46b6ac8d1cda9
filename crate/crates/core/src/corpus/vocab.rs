use serde::{Deserialize, Serialize};

pub type CharId = usize;

pub const NOISE: &str = "<noise>";
pub const UNK: &str = "<unk>";
pub const EOW: &str = "<eow>";
pub const SOW: &str = "<sow>";
pub const BLANK: &str = "<blank>";

/// Character dictionary.
///
/// Ids `0..corpus_len()` are symbols that can occur in text: the 26 letters,
/// `-` (partial word), `'` (possessive), `.` (abbreviation), `<noise>`, and
/// `<unk>`. After them come the control symbols end-of-word, start-of-word,
/// and the word-boundary blank used by the flat baseline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharVocab {
    symbols: Vec<String>,
    corpus_len: usize,
}

impl Default for CharVocab {
    fn default() -> Self {
        Self::standard()
    }
}

impl CharVocab {
    /// The 31-symbol dictionary plus the three control symbols.
    pub fn standard() -> Self {
        let mut symbols: Vec<String> = ('a'..='z').map(String::from).collect();
        symbols.extend(["-", "'", ".", NOISE, UNK].map(String::from));
        let corpus_len = symbols.len();
        symbols.extend([EOW, SOW, BLANK].map(String::from));
        CharVocab { symbols, corpus_len }
    }

    /// Total symbol count including control symbols.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Number of symbols that can appear in corpus text.
    pub fn corpus_len(&self) -> usize {
        self.corpus_len
    }

    pub fn noise(&self) -> CharId {
        self.corpus_len - 2
    }

    pub fn unk(&self) -> CharId {
        self.corpus_len - 1
    }

    pub fn eow(&self) -> CharId {
        self.corpus_len
    }

    pub fn sow(&self) -> CharId {
        self.corpus_len + 1
    }

    pub fn blank(&self) -> CharId {
        self.corpus_len + 2
    }

    /// Size of the decoder's output layer: every corpus symbol plus end-of-word.
    pub fn output_len(&self) -> usize {
        self.corpus_len + 1
    }

    pub fn symbol(&self, id: CharId) -> &str {
        &self.symbols[id]
    }

    /// Id of a single text character; anything outside the dictionary is `<unk>`.
    pub fn char_id(&self, c: char) -> CharId {
        match c {
            'a'..='z' => c as usize - 'a' as usize,
            '-' => 26,
            '\'' => 27,
            '.' => 28,
            _ => self.unk(),
        }
    }

    /// Character ids of one whitespace-free word. `<unk>` and `<noise>` count
    /// as one symbol each; any other `<tag>` is a non-verbal sound.
    pub fn encode_word(&self, word: &str) -> Vec<CharId> {
        let mut ids = Vec::with_capacity(word.len());
        let mut rest = word;
        while let Some(c) = rest.chars().next() {
            if c == '<' {
                if let Some(len) = tag_len(rest) {
                    let tag = &rest[..len];
                    ids.push(if tag == UNK { self.unk() } else { self.noise() });
                    rest = &rest[len..];
                    continue;
                }
            }
            ids.push(self.char_id(c));
            rest = &rest[c.len_utf8()..];
        }
        ids
    }

    pub fn decode(&self, ids: &[CharId]) -> String {
        ids.iter().map(|&i| self.symbol(i)).collect()
    }
}

/// Byte length of a leading `<letters_or_underscores>` tag, if any.
pub(crate) fn tag_len(s: &str) -> Option<usize> {
    let inner = s.strip_prefix('<')?;
    let end = inner.find('>')?;
    let name = &inner[..end];
    (!name.is_empty() && name.chars().all(|c| c.is_ascii_alphabetic() || c == '_')).then_some(end + 2)
}
