//! Transcript clean-up: case folding, disfluency-markup removal, punctuation
//! stripping, restriction to the character dictionary, and merging of
//! interrupted segments.

use log::warn;

use super::vocab::{tag_len, NOISE, UNK};
use super::{RawDialogue, RawTurn};

/// Cleans one transcript line. Idempotent.
///
/// ```
/// use hcrn::corpus::preprocess_text;
/// assert_eq!(preprocess_text("What d- what is that?"), "what d- what is that");
/// assert_eq!(preprocess_text("Okay, REALLY!"), "okay really");
/// ```
pub fn preprocess_text(raw: &str) -> String {
    let lowered = raw.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'");
    let unmarked = strip_markup(&lowered);

    let mut out = String::with_capacity(unmarked.len());
    let mut rest = unmarked.as_str();
    while let Some(c) = rest.chars().next() {
        if c == '<' {
            if let Some(len) = tag_len(rest) {
                out.push_str(if &rest[..len] == UNK { UNK } else { NOISE });
                rest = &rest[len..];
                continue;
            }
        }
        match c {
            'a'..='z' | '-' | '\'' | '.' => out.push(c),
            '?' | '!' | ',' => {}
            c if c.is_whitespace() => out.push(' '),
            _ => out.push_str(UNK),
        }
        rest = &rest[c.len_utf8()..];
    }

    let mut tokens: Vec<String> = out.split_whitespace().map(String::from).collect();
    loop {
        let before = tokens.len();
        let last_before = tokens.last().cloned();
        tokens.retain(|t| !t.chars().all(|c| c == '.' || c == '-'));
        if let Some(last) = tokens.last_mut() {
            if !is_abbreviation(last) {
                let trimmed = last.trim_end_matches('.').len();
                last.truncate(trimmed);
            }
        }
        if tokens.len() == before && tokens.last() == last_before.as_ref() {
            break;
        }
    }
    tokens.join(" ")
}

/// Removes curly-brace disfluency tags (`{F uh }` keeps `uh`), repair
/// brackets, and slash-unit markers.
fn strip_markup(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' => {
                // `{x ` opens a tag; drop the tag letter
                if chars.peek().is_some_and(|n| n.is_alphabetic()) {
                    chars.next();
                }
                out.push(' ');
            }
            '}' | '[' | ']' | '+' | '/' | '#' | '(' | ')' => out.push(' '),
            _ => out.push(c),
        }
    }
    out
}

/// Letter-period sequences such as `u.s.` keep their final period.
fn is_abbreviation(token: &str) -> bool {
    let b = token.as_bytes();
    b.len() >= 2 && b.len() % 2 == 0 && b.chunks(2).all(|p| p[0].is_ascii_lowercase() && p[1] == b'.')
}

/// Appends every segment-continuation turn to the same speaker's most recent
/// sentence; interrupting turns therefore follow the combined sentence. The
/// combined sentence keeps the label of its first segment.
pub fn merge_segments(dialogue: RawDialogue) -> RawDialogue {
    let mut turns: Vec<RawTurn> = Vec::with_capacity(dialogue.turns.len());
    for mut turn in dialogue.turns {
        if turn.segment {
            if let Some(prev) = turns.iter_mut().rev().find(|t| t.speaker == turn.speaker) {
                let joined = format!("{} {}", prev.text.trim_end(), turn.text.trim_start());
                prev.text = joined.trim().to_string();
                continue;
            }
            warn!(
                "dialogue {}: segment continuation by {:?} has no earlier sentence; kept as a new sentence",
                dialogue.id, turn.speaker
            );
        }
        turn.segment = false;
        turns.push(turn);
    }
    RawDialogue { id: dialogue.id, turns }
}

/// Merges segments, then cleans every turn's text.
pub fn preprocess_dialogue(dialogue: RawDialogue) -> RawDialogue {
    let mut d = merge_segments(dialogue);
    for t in &mut d.turns {
        t.text = preprocess_text(&t.text);
    }
    d
}
