//! Text operations: greedy subword segmentation, detokenization, the metric
//! tokenizer and a rule-based suffix stemmer.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::vocab::{SubwordId, UnkPolicy, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("character {0:?} cannot be segmented with this vocabulary")]
    UnsegmentableInput(char),
    #[error("subword id {0} is out of range")]
    InvalidId(SubwordId),
}

/// A detokenized word together with the subword ids it segments into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Word without the boundary marker.
    pub surface: String,
    pub subwords: Vec<SubwordId>,
    pub is_word_initial: bool,
}

/// Greedy longest-match left-to-right segmentation.
///
/// Words (whitespace-separated) are prefixed with the boundary marker and
/// matched against vocabulary pieces, always taking the longest piece that
/// matches at the current position. Special tokens never participate in
/// matching; a literal "<sep>" in the text segments like any other characters.
///
/// Under [`UnkPolicy::CharFallback`] each uncoverable character becomes one
/// UNK id (exact reconstruction is lost for such inputs); under
/// [`UnkPolicy::Error`] the first uncoverable character aborts.
pub fn segment(text: &str, vocab: &Vocabulary) -> Result<Vec<SubwordId>, TextError> {
    let marker = vocab.marker();
    let mut out = Vec::new();
    let mut word = String::new();
    for w in text.split_whitespace() {
        word.clear();
        word.push(marker);
        word.push_str(w);
        let mut i = 0;
        while i < word.len() {
            let rest = &word[i..];
            let mut matched = None;
            // Longest match first: walk char boundaries from the longest
            // candidate (bounded by the longest piece in the vocabulary)
            // down to a single character.
            let limit = rest.len().min(vocab.max_piece_bytes());
            let mut ends: Vec<usize> = rest
                .char_indices()
                .map(|(j, c)| j + c.len_utf8())
                .take_while(|&j| j <= limit)
                .collect();
            while let Some(end) = ends.pop() {
                if let Some(id) = vocab.id(&rest[..end]) {
                    if !vocab.is_special(id) {
                        matched = Some((id, end));
                        break;
                    }
                }
            }
            match matched {
                Some((id, end)) => {
                    out.push(id);
                    i += end;
                }
                None => {
                    let c = rest.chars().next().expect("non-empty remainder");
                    match vocab.unk_policy() {
                        UnkPolicy::Error => return Err(TextError::UnsegmentableInput(c)),
                        UnkPolicy::CharFallback => {
                            out.push(vocab.specials().unk);
                            i += c.len_utf8();
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`segment`] on fully segmentable text: boundary markers become
/// single spaces and one leading space is stripped. Special ids render as
/// their literal strings.
pub fn detokenize(subword_ids: &[SubwordId], vocab: &Vocabulary) -> Result<String, TextError> {
    let marker = vocab.marker();
    let mut out = String::new();
    for &id in subword_ids {
        let piece = vocab.piece(id).ok_or(TextError::InvalidId(id))?;
        match piece.strip_prefix(marker) {
            Some(rest) => {
                out.push(' ');
                out.push_str(rest);
            }
            None => out.push_str(piece),
        }
    }
    if let Some(stripped) = out.strip_prefix(' ') {
        Ok(stripped.to_string())
    } else {
        Ok(out)
    }
}

/// Groups a subword sequence into word [`Token`]s. A marker-initial piece
/// starts a new token; special ids terminate the current token and are
/// dropped.
pub fn group_subwords(ids: &[SubwordId], vocab: &Vocabulary) -> Result<Vec<Token>, TextError> {
    let marker = vocab.marker();
    let mut tokens: Vec<Token> = Vec::new();
    let mut current: Option<Token> = None;
    for &id in ids {
        let piece = vocab.piece(id).ok_or(TextError::InvalidId(id))?;
        if vocab.is_special(id) {
            if let Some(t) = current.take() {
                tokens.push(t);
            }
            continue;
        }
        match piece.strip_prefix(marker) {
            Some(rest) => {
                if let Some(t) = current.take() {
                    tokens.push(t);
                }
                current = Some(Token {
                    surface: rest.to_string(),
                    subwords: alloc::vec![id],
                    is_word_initial: true,
                });
            }
            None => match current.as_mut() {
                Some(t) => {
                    t.surface.push_str(piece);
                    t.subwords.push(id);
                }
                None => {
                    current = Some(Token {
                        surface: piece.to_string(),
                        subwords: alloc::vec![id],
                        is_word_initial: false,
                    });
                }
            },
        }
    }
    if let Some(t) = current.take() {
        tokens.push(t);
    }
    Ok(tokens)
}

// Non-ASCII characters treated as punctuation by the metric tokenizer, in
// addition to ASCII punctuation: quotation marks, dashes, ellipsis, inverted
// marks, primes and section-like signs.
const EXTRA_PUNCT: &[char] = &[
    '\u{201e}', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}', '\u{201a}', '\u{201b}', '\u{2026}',
    '\u{2013}', '\u{2014}', '\u{2010}', '\u{2011}', '\u{2012}', '\u{2015}', '\u{00ab}', '\u{00bb}',
    '\u{2039}', '\u{203a}', '\u{00a1}', '\u{00bf}', '\u{00b7}', '\u{00a7}', '\u{00b6}', '\u{2020}',
    '\u{2021}', '\u{2032}', '\u{2033}',
];

pub fn is_punctuation_char(c: char) -> bool {
    c.is_ascii_punctuation() || EXTRA_PUNCT.contains(&c)
}

/// True for non-empty tokens made entirely of punctuation characters.
pub fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punctuation_char)
}

/// Whitespace split, then every punctuation character becomes its own token.
/// Never produces empty tokens.
pub fn word_tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut cur = String::new();
        for c in chunk.chars() {
            if is_punctuation_char(c) {
                if !cur.is_empty() {
                    out.push(core::mem::take(&mut cur));
                }
                out.push(c.to_string());
            } else {
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// Suffix-stripping rules, applied longest suffix first, at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemmerConfig {
    rules: Vec<(String, usize)>,
    casefold: bool,
}

impl StemmerConfig {
    /// `rules` are (suffix, minimum remaining stem length in chars) pairs;
    /// they are sorted by suffix length descending (stable, so file order
    /// breaks ties).
    pub fn new(mut rules: Vec<(String, usize)>, casefold: bool) -> Self {
        rules.sort_by_key(|r| core::cmp::Reverse(char_len(&r.0)));
        Self { rules, casefold }
    }

    /// No rules; stemming is the identity (modulo casefolding).
    pub fn identity(casefold: bool) -> Self {
        Self {
            rules: Vec::new(),
            casefold,
        }
    }

    pub fn rules(&self) -> &[(String, usize)] {
        &self.rules
    }

    pub fn casefold(&self) -> bool {
        self.casefold
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Applies the longest matching suffix rule at most once. A rule fires only
/// if at least max(min_stem_len, 1) characters remain, so the result is
/// never empty for non-empty input.
pub fn stem(word: &str, cfg: &StemmerConfig) -> String {
    let w = if cfg.casefold {
        word.to_lowercase()
    } else {
        word.to_string()
    };
    for (suffix, min_stem) in &cfg.rules {
        if let Some(rest) = w.strip_suffix(suffix.as_str()) {
            if char_len(rest) >= (*min_stem).max(1) {
                return rest.to_string();
            }
        }
    }
    w
}
