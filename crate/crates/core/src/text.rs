//! Flesch reading-ease scoring and the linguistic-probe question filter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u', 'y'];

fn is_vowel(c: char) -> bool {
    VOWELS.contains(&c)
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || is_apostrophe(c)
}

/// Heuristic syllable count.
///
/// Counts maximal runs of `a e i o u y`, then drops one for a silent final
/// `e` (word ending in `e`, `es` or `ed` where that `e` follows a
/// consonant), unless the word ends in consonant + `le`. Never below 1.
pub fn count_syllables(word: &str) -> Result<usize> {
    if !word.chars().all(is_word_char) || !word.chars().any(char::is_alphabetic) {
        return Err(Error::InvalidWord(word.to_string()));
    }
    let chars: Vec<char> = word
        .chars()
        .filter(|c| !is_apostrophe(*c))
        .flat_map(char::to_lowercase)
        .collect();

    let mut groups = 0usize;
    let mut in_group = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }

    let n = chars.len();
    let ends_with = |suffix: &str| {
        let s: Vec<char> = suffix.chars().collect();
        n >= s.len() && chars[n - s.len()..] == s[..]
    };
    let consonant_le = ends_with("le") && n >= 3 && !is_vowel(chars[n - 3]);
    let silent_e_pos = if ends_with("e") {
        Some(n - 1)
    } else if ends_with("es") || ends_with("ed") {
        Some(n - 2)
    } else {
        None
    };
    if let Some(pos) = silent_e_pos {
        if !consonant_le && pos >= 1 && !is_vowel(chars[pos - 1]) {
            groups = groups.saturating_sub(1);
        }
    }
    Ok(groups.max(1))
}

/// Words are maximal runs of letters and apostrophes containing a letter.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !is_word_char(c))
        .filter(|w| w.chars().any(char::is_alphabetic))
}

/// Flesch reading-ease score with its counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityBreakdown {
    pub score: f64,
    pub n_words: usize,
    pub n_sentences: usize,
    pub n_syllables: usize,
}

/// `206.835 - 1.015 (words/sentences) - 84.6 (syllables/words)`, unrounded.
///
/// Sentences are the segments between runs of `.`, `!` and `?` that contain
/// at least one word; a trailing unterminated segment counts.
pub fn fres_score(text: &str) -> Result<ReadabilityBreakdown> {
    let mut n_words = 0usize;
    let mut n_sentences = 0usize;
    let mut n_syllables = 0usize;
    for segment in text.split(['.', '!', '?']) {
        let mut any = false;
        for w in words(segment) {
            n_words += 1;
            n_syllables += count_syllables(w)?;
            any = true;
        }
        if any {
            n_sentences += 1;
        }
    }
    if n_words == 0 {
        return Err(Error::NoWords);
    }
    let words_per_sentence = n_words as f64 / n_sentences as f64;
    let syllables_per_word = n_syllables as f64 / n_words as f64;
    Ok(ReadabilityBreakdown {
        score: 206.835 - 1.015 * words_per_sentence - 84.6 * syllables_per_word,
        n_words,
        n_sentences,
        n_syllables,
    })
}

const UNIT_WORDS: &[&str] = &[
    "word",
    "words",
    "sentence",
    "sentences",
    "paragraph",
    "paragraphs",
    "phrase",
];
const REFERENCE_VERBS: &[&str] = &["refer", "refers", "referred", "mean", "means", "meant"];
const ORDINALS: &[&str] = &[
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];
/// Maximum token distance between a structural unit and a number.
const NUMBER_WINDOW: usize = 2;

fn is_number_token(token: &str) -> bool {
    if token.chars().all(|c| c.is_ascii_digit()) {
        return true;
    }
    if ORDINALS.contains(&token) {
        return true;
    }
    let digits = token.chars().take_while(|c| c.is_ascii_digit()).count();
    digits > 0 && matches!(&token[digits..], "st" | "nd" | "rd" | "th")
}

/// True when a question probes the wording of the text rather than its
/// content, e.g. "What does the underlined word in paragraph 2 mean?".
///
/// Matches a structural unit (word, sentence, paragraph, phrase) together
/// with a reference verb (refer, mean), or a structural unit within two
/// tokens of a number or ordinal.
pub fn is_linguistic_question(question: &str) -> bool {
    let lowered = question.to_lowercase();
    let tokens: Vec<&str> = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    let units: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| UNIT_WORDS.contains(t))
        .map(|(i, _)| i)
        .collect();
    if units.is_empty() {
        return false;
    }
    if tokens.iter().any(|t| REFERENCE_VERBS.contains(t)) {
        return true;
    }
    units.iter().any(|&u| {
        let lo = u.saturating_sub(NUMBER_WINDOW);
        let hi = (u + NUMBER_WINDOW).min(tokens.len() - 1);
        (lo..=hi).any(|i| i != u && is_number_token(tokens[i]))
    })
}

/// Questions split by [`is_linguistic_question`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<String>,
    pub removed: Vec<String>,
    pub removed_fraction: f64,
}

pub fn filter_questions<I, S>(questions: I) -> FilterOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let (removed, kept): (Vec<String>, Vec<String>) = questions
        .into_iter()
        .map(Into::into)
        .partition(|q| is_linguistic_question(q));
    let total = kept.len() + removed.len();
    let removed_fraction = if total == 0 {
        0.0
    } else {
        removed.len() as f64 / total as f64
    };
    FilterOutcome {
        kept,
        removed,
        removed_fraction,
    }
}
