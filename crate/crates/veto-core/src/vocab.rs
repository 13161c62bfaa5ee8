//! Subword vocabularies: string <-> id mapping, special tokens and the
//! word-boundary marker convention.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Index into the vocabulary. Also the index into every scorer's
/// log-probability vector.
pub type SubwordId = usize;

/// Marker prefix carried by word-initial subwords ("lower one eighth block").
pub const DEFAULT_MARKER: char = '\u{2581}';

/// Conventional strings for the five special tokens.
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";
pub const SEP_TOKEN: &str = "<sep>";
pub const CSEP_TOKEN: &str = "<c>";

/// Ids of the five special tokens. All must be distinct and in range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Specials {
    pub bos: SubwordId,
    pub eos: SubwordId,
    pub unk: SubwordId,
    pub sep: SubwordId,
    pub csep: SubwordId,
}

impl Specials {
    pub fn all(&self) -> [SubwordId; 5] {
        [self.bos, self.eos, self.unk, self.sep, self.csep]
    }

    fn are_distinct(&self) -> bool {
        let mut ids = self.all();
        ids.sort_unstable();
        ids.windows(2).all(|w| w[0] != w[1])
    }
}

/// What segmentation does with characters not covered by any piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnkPolicy {
    /// Fail with `UnsegmentableInput`.
    Error,
    /// Emit the UNK id for the offending character and continue. Exact text
    /// reconstruction is lost for such inputs.
    #[default]
    CharFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("duplicate subword entry {0:?}")]
    DuplicateEntry(String),
    #[error("empty subword entry at id {0}")]
    EmptyEntry(SubwordId),
    #[error("special id {0} out of range for vocabulary of size {1}")]
    SpecialOutOfRange(SubwordId, usize),
    #[error("special ids are not distinct")]
    SpecialsNotDistinct,
}

/// Immutable subword inventory. `id_of` is a bijection onto `0..len`.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<String>,
    id_of: BTreeMap<String, SubwordId>,
    specials: Specials,
    marker: char,
    unk_policy: UnkPolicy,
    max_piece_bytes: usize,
}

impl Vocabulary {
    pub fn new(entries: Vec<String>, specials: Specials) -> Result<Self, VocabError> {
        Self::with_options(entries, specials, DEFAULT_MARKER, UnkPolicy::default())
    }

    pub fn with_options(
        entries: Vec<String>,
        specials: Specials,
        marker: char,
        unk_policy: UnkPolicy,
    ) -> Result<Self, VocabError> {
        let mut id_of = BTreeMap::new();
        let mut max_piece_bytes = 0;
        for (id, piece) in entries.iter().enumerate() {
            if piece.is_empty() {
                return Err(VocabError::EmptyEntry(id));
            }
            if id_of.insert(piece.clone(), id).is_some() {
                return Err(VocabError::DuplicateEntry(piece.clone()));
            }
            max_piece_bytes = max_piece_bytes.max(piece.len());
        }
        for id in specials.all() {
            if id >= entries.len() {
                return Err(VocabError::SpecialOutOfRange(id, entries.len()));
            }
        }
        if !specials.are_distinct() {
            return Err(VocabError::SpecialsNotDistinct);
        }
        Ok(Self {
            entries,
            id_of,
            specials,
            marker,
            unk_policy,
            max_piece_bytes,
        })
    }

    /// Convenience constructor: the five conventional specials first, then
    /// the given pieces.
    pub fn with_pieces<I, S>(pieces: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut entries: Vec<String> = [BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, SEP_TOKEN, CSEP_TOKEN]
            .iter()
            .map(|s| s.to_string())
            .collect();
        entries.extend(pieces.into_iter().map(Into::into));
        Self::new(
            entries,
            Specials {
                bos: 0,
                eos: 1,
                unk: 2,
                sep: 3,
                csep: 4,
            },
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<SubwordId> {
        self.id_of.get(piece).copied()
    }

    pub fn piece(&self, id: SubwordId) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn specials(&self) -> Specials {
        self.specials
    }

    pub fn is_special(&self, id: SubwordId) -> bool {
        self.specials.all().contains(&id)
    }

    pub fn marker(&self) -> char {
        self.marker
    }

    /// Whether a piece starts a new word (carries the word-boundary marker).
    /// Specials and out-of-range ids are not word-initial.
    pub fn is_word_initial(&self, id: SubwordId) -> bool {
        !self.is_special(id) && self.piece(id).is_some_and(|p| p.starts_with(self.marker))
    }

    pub fn unk_policy(&self) -> UnkPolicy {
        self.unk_policy
    }

    pub(crate) fn max_piece_bytes(&self) -> usize {
        self.max_piece_bytes
    }
}
