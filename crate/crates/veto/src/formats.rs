//! On-disk formats: vocabulary files, scorer definitions, stopword lists,
//! stemmer rule tables, and JSONL sentence records.
//!
//! # Vocabulary files
//!
//! One subword piece per line; the line index (counting entry lines only) is
//! the piece id. Directive lines configure the rest:
//!
//! ```text
//! #marker ▁
//! #special BOS 0
//! #special EOS 1
//! #special UNK 2
//! #special SEP 3
//! #special CSEP 4
//! <s>
//! </s>
//! ...
//! ```
//!
//! All five specials must be declared. Other lines starting with `#` are
//! comments; blank lines are ignored.
//!
//! # Scorer files
//!
//! JSON, either a bare table mapping `"source pieces||prefix pieces"` to a
//! `{piece: probability}` distribution, or a typed object:
//!
//! * `{"type": "tabular", "entries": {...}}` — same table, explicit.
//! * `{"type": "ngram", "order": N, "alpha": A, "corpus": [lines...]}` — an
//!   add-alpha n-gram model trained on the given lines.
//! * `{"type": "learned", "penalty": P, "inner": <scorer>}` — wraps another
//!   scorer and expects its constraints in-band, appended to the source
//!   after the separator token.
//!
//! # Sentence records
//!
//! JSON Lines, one record per line: `{"id": ..., "source": "...",
//! "references": [...], "constraints": [...]}`. `id` is an integer or a
//! string; `references` and `constraints` are optional. An explicit
//! `constraints` list overrides automatic extraction for that record.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use veto_core::score::{EmulatedLearnedScorer, NgramScorer, Scorer, TabularScorer};
use veto_core::text::{segment, StemmerConfig};
use veto_core::vocab::{Specials, SubwordId, UnkPolicy, Vocabulary};

/// Errors from reading or interpreting any of the supported file formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("vocabulary {} is missing a \"#special {name} <id>\" line", path.display())]
    MissingSpecial { path: PathBuf, name: &'static str },
    #[error("invalid vocabulary {}: {msg}", path.display())]
    Vocab { path: PathBuf, msg: String },
    #[error("invalid scorer {}: {msg}", path.display())]
    Scorer { path: PathBuf, msg: String },
}

fn read(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Loads a vocabulary file. Sources that use pieces outside the vocabulary
/// fail segmentation loudly instead of degrading to UNK, so data problems
/// surface as errors rather than as silently broken decodes.
pub fn load_vocabulary(path: &Path) -> Result<Vocabulary, FormatError> {
    let text = read(path)?;
    let mut entries: Vec<String> = Vec::new();
    let mut marker = '\u{2581}';
    let mut specials: BTreeMap<&'static str, SubwordId> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches(['\r']);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#special ") {
            let mut parts = rest.split_whitespace();
            let (name, id) = match (parts.next(), parts.next(), parts.next()) {
                (Some(name), Some(id), None) => (name, id),
                _ => {
                    return Err(FormatError::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        msg: "expected \"#special NAME ID\"".into(),
                    })
                }
            };
            let canonical = match name {
                "BOS" => "BOS",
                "EOS" => "EOS",
                "UNK" => "UNK",
                "SEP" => "SEP",
                "CSEP" => "CSEP",
                other => {
                    return Err(FormatError::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        msg: format!(
                            "unknown special {other:?} (expected BOS, EOS, UNK, SEP or CSEP)"
                        ),
                    })
                }
            };
            let id: SubwordId = id.parse().map_err(|_| FormatError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("special id {id:?} is not a non-negative integer"),
            })?;
            if specials.insert(canonical, id).is_some() {
                return Err(FormatError::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("special {canonical} declared twice"),
                });
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("#marker ") {
            let rest = rest.trim();
            let mut chars = rest.chars();
            marker = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => {
                    return Err(FormatError::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        msg: format!("marker must be a single character, got {rest:?}"),
                    })
                }
            };
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        entries.push(line.to_string());
    }

    let need = |name: &'static str| -> Result<SubwordId, FormatError> {
        specials
            .get(name)
            .copied()
            .ok_or(FormatError::MissingSpecial {
                path: path.to_path_buf(),
                name,
            })
    };
    let specials = Specials {
        bos: need("BOS")?,
        eos: need("EOS")?,
        unk: need("UNK")?,
        sep: need("SEP")?,
        csep: need("CSEP")?,
    };

    Vocabulary::with_options(entries, specials, marker, UnkPolicy::Error).map_err(|e| {
        FormatError::Vocab {
            path: path.to_path_buf(),
            msg: e.to_string(),
        }
    })
}

// ---------------------------------------------------------------------------
// Scorers
// ---------------------------------------------------------------------------

/// A scorer plus how it expects its constraints delivered.
pub struct LoadedScorer {
    pub scorer: Box<dyn Scorer>,
    /// True when the scorer wants constraints appended to its source after
    /// the separator token (constraint-trained models) rather than applied
    /// by a decoder-side mechanism.
    pub inband_constraints: bool,
}

impl std::fmt::Debug for LoadedScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LoadedScorer")
            .field("vocab_size", &self.scorer.vocab_size())
            .field("inband_constraints", &self.inband_constraints)
            .finish()
    }
}

type BareTable = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScorerFile {
    Typed(TypedScorer),
    Bare(BareTable),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum TypedScorer {
    Tabular {
        entries: BareTable,
    },
    Ngram {
        order: usize,
        alpha: f64,
        corpus: Vec<String>,
    },
    Learned {
        penalty: f64,
        inner: Box<ScorerFile>,
    },
}

/// Loads a scorer definition against the given vocabulary.
pub fn load_scorer(path: &Path, vocab: &Vocabulary) -> Result<LoadedScorer, FormatError> {
    let text = read(path)?;
    let file: ScorerFile = serde_json::from_str(&text).map_err(|e| FormatError::Scorer {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let inband_constraints = matches!(file, ScorerFile::Typed(TypedScorer::Learned { .. }));
    let scorer = build_scorer(file, vocab).map_err(|msg| FormatError::Scorer {
        path: path.to_path_buf(),
        msg,
    })?;
    Ok(LoadedScorer {
        scorer,
        inband_constraints,
    })
}

fn build_scorer(file: ScorerFile, vocab: &Vocabulary) -> Result<Box<dyn Scorer>, String> {
    match file {
        ScorerFile::Bare(entries) | ScorerFile::Typed(TypedScorer::Tabular { entries }) => {
            Ok(Box::new(build_tabular(entries, vocab)?))
        }
        ScorerFile::Typed(TypedScorer::Ngram {
            order,
            alpha,
            corpus,
        }) => {
            let mut sequences = Vec::with_capacity(corpus.len());
            for (i, line) in corpus.iter().enumerate() {
                let ids =
                    segment(line, vocab).map_err(|e| format!("corpus line {}: {e}", i + 1))?;
                sequences.push(ids);
            }
            let scorer = NgramScorer::train(
                &sequences,
                order,
                alpha,
                vocab.len(),
                vocab.specials().bos,
                vocab.specials().eos,
            )
            .map_err(|e| e.to_string())?;
            Ok(Box::new(scorer))
        }
        ScorerFile::Typed(TypedScorer::Learned { penalty, inner }) => {
            let inner = build_scorer(*inner, vocab)?;
            let scorer = EmulatedLearnedScorer::new(
                inner,
                penalty,
                vocab.specials().sep,
                vocab.specials().csep,
            )
            .map_err(|e| e.to_string())?;
            Ok(Box::new(scorer))
        }
    }
}

fn build_tabular(entries: BareTable, vocab: &Vocabulary) -> Result<TabularScorer, String> {
    let mut table = TabularScorer::new(vocab.len()).map_err(|e| e.to_string())?;
    for (key, dist) in &entries {
        let (source, suffix) = key
            .split_once("||")
            .ok_or_else(|| format!("key {key:?} is missing the \"||\" source/prefix divider"))?;
        let mut probs = Vec::with_capacity(dist.len());
        for (piece, &p) in dist {
            probs.push((lookup_piece(piece, vocab)?, p));
        }
        table
            .insert(
                lookup_pieces(source, vocab)?,
                lookup_pieces(suffix, vocab)?,
                &probs,
            )
            .map_err(|e| format!("entry {key:?}: {e}"))?;
    }
    Ok(table)
}

fn lookup_piece(piece: &str, vocab: &Vocabulary) -> Result<SubwordId, String> {
    vocab
        .id(piece)
        .ok_or_else(|| format!("unknown subword piece {piece:?}"))
}

fn lookup_pieces(spec: &str, vocab: &Vocabulary) -> Result<Vec<SubwordId>, String> {
    spec.split_whitespace()
        .map(|p| lookup_piece(p, vocab))
        .collect()
}

// ---------------------------------------------------------------------------
// Stopwords and stemmer rules
// ---------------------------------------------------------------------------

/// Loads a stopword list: one word per line, `#` comments, matched
/// case-insensitively.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>, FormatError> {
    Ok(parse_stopwords(&read(path)?))
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// The built-in English function-word list.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(include_str!("../resources/stopwords.txt"))
}

/// Loads suffix-stripping rules: tab-separated `suffix<TAB>min_stem_len`
/// lines, `#` comments. Longest suffix wins; ties keep file order.
pub fn load_stemmer_rules(path: &Path) -> Result<StemmerConfig, FormatError> {
    parse_stemmer_rules(&read(path)?).map_err(|(line, msg)| FormatError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    })
}

fn parse_stemmer_rules(text: &str) -> Result<StemmerConfig, (usize, String)> {
    let mut rules = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (suffix, min) = line.split_once('\t').ok_or((
            lineno + 1,
            "expected \"suffix<TAB>min_stem_len\"".to_string(),
        ))?;
        let min: usize = min.trim().parse().map_err(|_| {
            (
                lineno + 1,
                format!(
                    "minimum stem length {:?} is not a non-negative integer",
                    min.trim()
                ),
            )
        })?;
        if suffix.is_empty() {
            return Err((lineno + 1, "empty suffix".to_string()));
        }
        rules.push((suffix.to_string(), min));
    }
    Ok(StemmerConfig::new(rules, true))
}

/// The built-in suffix-stripping rules (a small English/Czech-style set).
pub fn default_stemmer_rules() -> StemmerConfig {
    parse_stemmer_rules(include_str!("../resources/stemmer_rules.tsv"))
        .expect("the embedded rule table is well-formed")
}

// ---------------------------------------------------------------------------
// Sentence records
// ---------------------------------------------------------------------------

/// A record id: integer ids sort numerically and before all string ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecordId {
    Num(i64),
    Str(String),
}

impl Ord for RecordId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use RecordId::*;
        match (self, other) {
            (Num(a), Num(b)) => a.cmp(b),
            (Str(a), Str(b)) => a.cmp(b),
            (Num(_), Str(_)) => std::cmp::Ordering::Less,
            (Str(_), Num(_)) => std::cmp::Ordering::Greater,
        }
    }
}

impl PartialOrd for RecordId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for RecordId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecordId::Num(n) => write!(f, "{n}"),
            RecordId::Str(s) => f.write_str(s),
        }
    }
}

/// One input sentence, with optional references and an optional explicit
/// constraint list that overrides automatic extraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: RecordId,
    pub source: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<String>>,
}

/// Reads a JSONL record file in file order. Errors carry `path:line`.
pub fn read_records(path: &Path) -> Result<Vec<SentenceRecord>, FormatError> {
    let text = read(path)?;
    let mut records = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let record: SentenceRecord =
            serde_json::from_str(line).map_err(|e| FormatError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        if record.source.trim().is_empty() {
            return Err(FormatError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: "record source must be non-empty".into(),
            });
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(FormatError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "input contains no records".into(),
        });
    }
    Ok(records)
}
