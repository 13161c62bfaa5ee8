//! Negative lexical constraints for beam-search sequence decoding.
//!
//! The crate provides the pieces needed to forbid words or phrases in the
//! output of a beam-search decoder and to measure how well that worked:
//!
//! - [`vocab`]: subword vocabularies with special tokens and a word-boundary
//!   marker.
//! - [`text`]: greedy longest-match segmentation, detokenization, the metric
//!   tokenizer and a rule-based suffix stemmer.
//! - [`constraint`]: forbidden expressions as subword sequences, their
//!   extraction from translations, and score-ordered selection.
//! - [`trie`]: a prefix tree over constraint subword sequences with
//!   per-hypothesis match cursors.
//! - [`score`]: the `Scorer` interface the decoder consumes, deterministic
//!   toy scorers for testing, and the `<sep>`/`<c>` input formatting used by
//!   constraint-aware models.
//! - [`decode`]: beam search with four constraint mechanisms (subword and
//!   multi-subword filtering, subword and whole-token score penalties).
//! - [`metrics`]: corpus BLEU, similarity BLEU and constraint coverage at
//!   surface, stem and detokenized-string levels.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only switches on `std` in dependencies that want it. All float
//! math goes through `libm` so results are bit-identical across platforms,
//! and all map types are ordered, so identical inputs always produce
//! identical outputs.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod constraint;
pub mod decode;
pub mod metrics;
pub mod score;
pub mod text;
pub mod trie;
pub mod vocab;

mod mathx;

pub use constraint::{Constraint, ConstraintSet, Ratio, SelectionPolicy};
pub use decode::{decode, DecodeConfig, DecodeOutput, Hypothesis, Method};
pub use metrics::{corpus_bleu, coverage, similarity_bleu, BleuConfig, CoverageLevel, EvalReport};
pub use score::{NgramScorer, Scorer, TabularScorer};
pub use text::{detokenize, segment, stem, word_tokenize, StemmerConfig};
pub use trie::{build_trie, ConstraintTrie, TrieCursor};
pub use vocab::{SubwordId, Vocabulary};
