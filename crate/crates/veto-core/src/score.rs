//! The scorer interface the decoder consumes, deterministic toy scorers for
//! oracle-verified tests, and the `<sep>`/`<c>` input formatting used by
//! constraint-aware models.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::constraint::{extract_refinement_constraints, stem_constraints, ConstraintSet};
use crate::decode::{decode, DecodeConfig, Method};
use crate::mathx;
use crate::text::{segment, StemmerConfig};
use crate::vocab::{SubwordId, Vocabulary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("vocabulary size must be positive")]
    EmptyVocabulary,
    #[error("subword id {0} is out of range")]
    InvalidId(SubwordId),
    #[error("distribution sums to {0}, expected 1 within 1e-6")]
    NotNormalized(f64),
    #[error("probability {0} is not a finite non-negative number")]
    InvalidProbability(f64),
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("smoothing alpha must be a positive finite number")]
    InvalidAlpha,
    #[error("penalty must be a non-negative finite number")]
    InvalidPenalty,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("constraint {0:?} contains a reserved marker token")]
    ConstraintContainsMarker(String),
    #[error("source sentence contains a reserved marker token")]
    SourceContainsMarker,
}

/// Maps (source, target prefix) to a log-probability vector over the whole
/// vocabulary. Implementations must be deterministic, return a vector of
/// exactly `vocab_size()` entries (finite or negative infinity), and keep
/// logsumexp of the vector at 0 within 1e-6.
pub trait Scorer: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn score_step(&self, source: &[SubwordId], prefix: &[SubwordId]) -> Vec<f64>;

    /// True when an empty source makes scoring meaningless (the decoder then
    /// rejects empty sources up front).
    fn requires_source(&self) -> bool {
        false
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn score_step(&self, source: &[SubwordId], prefix: &[SubwordId]) -> Vec<f64> {
        (**self).score_step(source, prefix)
    }
    fn requires_source(&self) -> bool {
        (**self).requires_source()
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn score_step(&self, source: &[SubwordId], prefix: &[SubwordId]) -> Vec<f64> {
        (**self).score_step(source, prefix)
    }
    fn requires_source(&self) -> bool {
        (**self).requires_source()
    }
}

type TableKey = (Vec<SubwordId>, Vec<SubwordId>);

/// Explicit distributions keyed by (source, bounded prefix suffix), with a
/// uniform backoff. Lookup tries the longest stored suffix first.
#[derive(Debug, Clone, Default)]
pub struct TabularScorer {
    vocab_size: usize,
    max_context: usize,
    table: BTreeMap<TableKey, Vec<f64>>,
}

impl TabularScorer {
    pub fn new(vocab_size: usize) -> Result<Self, ScoreError> {
        if vocab_size == 0 {
            return Err(ScoreError::EmptyVocabulary);
        }
        Ok(Self {
            vocab_size,
            max_context: 0,
            table: BTreeMap::new(),
        })
    }

    /// Stores the distribution for (source, prefix suffix). Probabilities of
    /// unlisted ids are zero (log prob negative infinity). The listed
    /// probabilities must sum to 1 within 1e-6; they are renormalized
    /// exactly before taking logs.
    pub fn insert(
        &mut self,
        source: Vec<SubwordId>,
        prefix_suffix: Vec<SubwordId>,
        probs: &[(SubwordId, f64)],
    ) -> Result<(), ScoreError> {
        for &id in source.iter().chain(prefix_suffix.iter()) {
            if id >= self.vocab_size {
                return Err(ScoreError::InvalidId(id));
            }
        }
        let mut sum = 0.0;
        for &(id, p) in probs {
            if id >= self.vocab_size {
                return Err(ScoreError::InvalidId(id));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(ScoreError::InvalidProbability(p));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(ScoreError::NotNormalized(sum));
        }
        let mut row = alloc::vec![f64::NEG_INFINITY; self.vocab_size];
        for &(id, p) in probs {
            if p > 0.0 {
                row[id] = mathx::ln(p / sum);
            }
        }
        self.max_context = self.max_context.max(prefix_suffix.len());
        self.table.insert((source, prefix_suffix), row);
        Ok(())
    }
}

impl Scorer for TabularScorer {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn score_step(&self, source: &[SubwordId], prefix: &[SubwordId]) -> Vec<f64> {
        let max_k = self.max_context.min(prefix.len());
        for k in (0..=max_k).rev() {
            let key = (source.to_vec(), prefix[prefix.len() - k..].to_vec());
            if let Some(row) = self.table.get(&key) {
                return row.clone();
            }
        }
        alloc::vec![-mathx::ln(self.vocab_size as f64); self.vocab_size]
    }

    fn requires_source(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    next: BTreeMap<SubwordId, u64>,
    total: u64,
}

/// Add-alpha smoothed n-gram model over id sequences. The source side is
/// ignored; contexts shorter than order-1 are padded with BOS and every
/// training sentence is terminated with EOS.
#[derive(Debug, Clone)]
pub struct NgramScorer {
    order: usize,
    alpha: f64,
    vocab_size: usize,
    bos: SubwordId,
    counts: BTreeMap<Vec<SubwordId>, ContextCounts>,
}

impl NgramScorer {
    pub fn train(
        corpus: &[Vec<SubwordId>],
        order: usize,
        alpha: f64,
        vocab_size: usize,
        bos: SubwordId,
        eos: SubwordId,
    ) -> Result<Self, ScoreError> {
        if vocab_size == 0 {
            return Err(ScoreError::EmptyVocabulary);
        }
        if order < 1 {
            return Err(ScoreError::InvalidOrder);
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ScoreError::InvalidAlpha);
        }
        if bos >= vocab_size || eos >= vocab_size {
            return Err(ScoreError::InvalidId(bos.max(eos)));
        }
        let mut counts: BTreeMap<Vec<SubwordId>, ContextCounts> = BTreeMap::new();
        for sent in corpus {
            for &id in sent {
                if id >= vocab_size {
                    return Err(ScoreError::InvalidId(id));
                }
            }
            let mut padded = alloc::vec![bos; order - 1];
            padded.extend_from_slice(sent);
            let mut events: Vec<SubwordId> = sent.clone();
            events.push(eos);
            for (i, &event) in events.iter().enumerate() {
                let ctx = padded[i..i + order - 1].to_vec();
                let c = counts.entry(ctx).or_default();
                *c.next.entry(event).or_insert(0) += 1;
                c.total += 1;
            }
        }
        Ok(Self {
            order,
            alpha,
            vocab_size,
            bos,
            counts,
        })
    }
}

impl Scorer for NgramScorer {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn score_step(&self, _source: &[SubwordId], prefix: &[SubwordId]) -> Vec<f64> {
        let n = self.order - 1;
        let mut ctx = Vec::with_capacity(n);
        if prefix.len() < n {
            ctx.resize(n - prefix.len(), self.bos);
            ctx.extend_from_slice(prefix);
        } else {
            ctx.extend_from_slice(&prefix[prefix.len() - n..]);
        }
        let empty = ContextCounts::default();
        let c = self.counts.get(&ctx).unwrap_or(&empty);
        let denom = c.total as f64 + self.alpha * self.vocab_size as f64;
        (0..self.vocab_size)
            .map(|id| {
                let count = c.next.get(&id).copied().unwrap_or(0) as f64;
                mathx::ln((count + self.alpha) / denom)
            })
            .collect()
    }
}

/// Plumbing stand-in for a model trained with constraint-aware inputs. This
/// is NOT a trained model: it parses the constraint ids appended after SEP,
/// strips them off before delegating to the wrapped scorer, subtracts a fixed
/// penalty from every constrained subword and renormalizes.
#[derive(Debug, Clone)]
pub struct EmulatedLearnedScorer<S> {
    inner: S,
    penalty: f64,
    sep: SubwordId,
    csep: SubwordId,
}

impl<S: Scorer> EmulatedLearnedScorer<S> {
    pub fn new(
        inner: S,
        penalty: f64,
        sep: SubwordId,
        csep: SubwordId,
    ) -> Result<Self, ScoreError> {
        if !(penalty.is_finite() && penalty >= 0.0) {
            return Err(ScoreError::InvalidPenalty);
        }
        Ok(Self {
            inner,
            penalty,
            sep,
            csep,
        })
    }
}

impl<S: Scorer> Scorer for EmulatedLearnedScorer<S> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn score_step(&self, source: &[SubwordId], prefix: &[SubwordId]) -> Vec<f64> {
        let split = source.iter().position(|&id| id == self.sep);
        let Some(at) = split else {
            return self.inner.score_step(source, prefix);
        };
        let (true_source, tail) = source.split_at(at);
        let constrained: BTreeSet<SubwordId> = tail[1..]
            .iter()
            .copied()
            .filter(|&id| id != self.csep)
            .collect();
        let mut row = self.inner.score_step(true_source, prefix);
        if constrained.is_empty() {
            return row;
        }
        for &id in &constrained {
            if id < row.len() {
                row[id] -= self.penalty;
            }
        }
        let lse = mathx::logsumexp(&row);
        for x in &mut row {
            *x -= lse;
        }
        row
    }

    fn requires_source(&self) -> bool {
        self.inner.requires_source()
    }
}

/// Appends constraints to the source sentence: `source <sep> c1 <c> c2 ...`.
/// Sources and constraint surfaces must not contain the reserved marker
/// tokens themselves.
pub fn format_learned_input(source: &str, cs: &ConstraintSet) -> Result<String, FormatError> {
    let is_marker = |t: &str| t == crate::vocab::SEP_TOKEN || t == crate::vocab::CSEP_TOKEN;
    if source.split_whitespace().any(is_marker) {
        return Err(FormatError::SourceContainsMarker);
    }
    if cs.is_empty() {
        return Ok(source.to_string());
    }
    let mut out = String::from(source);
    out.push(' ');
    out.push_str(crate::vocab::SEP_TOKEN);
    for (i, c) in cs.iter().enumerate() {
        if c.surface.split_whitespace().any(is_marker) {
            return Err(FormatError::ConstraintContainsMarker(c.surface.clone()));
        }
        if i > 0 {
            out.push(' ');
            out.push_str(crate::vocab::CSEP_TOKEN);
        }
        out.push(' ');
        out.push_str(&c.surface);
    }
    Ok(out)
}

/// Inverse of [`format_learned_input`]: splits at the first `<sep>` token and
/// then on `<c>` tokens. Lines without `<sep>` have no constraints.
pub fn parse_learned_input(line: &str) -> (String, Vec<String>) {
    let sep_pat = alloc::format!(" {} ", crate::vocab::SEP_TOKEN);
    let (source, rest) = if let Some(at) = line.find(&sep_pat) {
        (&line[..at], Some(&line[at + sep_pat.len()..]))
    } else if let Some(rest) = line.strip_prefix(&alloc::format!("{} ", crate::vocab::SEP_TOKEN)) {
        ("", Some(rest))
    } else {
        (line, None)
    };
    let Some(rest) = rest else {
        return (source.to_string(), Vec::new());
    };
    let csep_pat = alloc::format!(" {} ", crate::vocab::CSEP_TOKEN);
    let constraints = rest
        .split(csep_pat.as_str())
        .map(|s| s.to_string())
        .collect();
    (source.to_string(), constraints)
}

/// Id-level analogue of [`format_learned_input`] for driving a decoder:
/// `source_ids ++ [SEP] ++ c1_ids ++ [CSEP] ++ c2_ids ++ ...`.
pub fn encode_learned_input(
    source_ids: &[SubwordId],
    cs: &ConstraintSet,
    vocab: &Vocabulary,
) -> Vec<SubwordId> {
    let mut out = source_ids.to_vec();
    if cs.is_empty() {
        return out;
    }
    out.push(vocab.specials().sep);
    for (i, c) in cs.iter().enumerate() {
        if i > 0 {
            out.push(vocab.specials().csep);
        }
        out.extend_from_slice(&c.subword_ids);
    }
    out
}

/// For each (source, reference) pair: unconstrained decode, extract the
/// decoded tokens missing from the reference, optionally stem them, cap them
/// at `max_constraints`, and emit the formatted training line. Failing pairs
/// emit their plain source line (with a warning) so the output always has one
/// line per input pair.
#[allow(clippy::too_many_arguments)]
pub fn generate_synthetic_training_data(
    corpus: &[(String, String)],
    base_scorer: &dyn Scorer,
    decode_cfg: &DecodeConfig,
    stopwords: &BTreeSet<String>,
    stem_cfg: Option<&StemmerConfig>,
    vocab: &Vocabulary,
    max_constraints: Option<usize>,
) -> Vec<String> {
    let mut cfg = decode_cfg.clone();
    cfg.method = Method::None;
    let mut out = Vec::with_capacity(corpus.len());
    for (source, reference) in corpus {
        let line = synthetic_line(
            source,
            reference,
            base_scorer,
            &cfg,
            stopwords,
            stem_cfg,
            vocab,
            max_constraints,
        )
        .unwrap_or_else(|why| {
            log::warn!("emitting plain source line for {:?}: {}", source, why);
            source.clone()
        });
        out.push(line);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn synthetic_line(
    source: &str,
    reference: &str,
    base_scorer: &dyn Scorer,
    cfg: &DecodeConfig,
    stopwords: &BTreeSet<String>,
    stem_cfg: Option<&StemmerConfig>,
    vocab: &Vocabulary,
    max_constraints: Option<usize>,
) -> Result<String, String> {
    let src_ids = segment(source, vocab).map_err(|e| e.to_string())?;
    let output = decode(
        &src_ids,
        base_scorer,
        cfg,
        &ConstraintSet::empty(),
        vocab.specials().eos,
    )
    .map_err(|e| e.to_string())?;
    let best = output
        .hypotheses
        .first()
        .ok_or("decoder returned nothing")?;
    let content: Vec<SubwordId> = best
        .tokens
        .iter()
        .copied()
        .filter(|&id| !vocab.is_special(id))
        .collect();
    let hyp_text = crate::text::detokenize(&content, vocab).map_err(|e| e.to_string())?;
    let mut cs = extract_refinement_constraints(
        &hyp_text,
        core::slice::from_ref(&reference.to_string()),
        stopwords,
        vocab,
    );
    if let Some(stem_cfg) = stem_cfg {
        cs = stem_constraints(&cs, stem_cfg, vocab);
    }
    if let Some(cap) = max_constraints {
        cs = cs.truncated(cap);
    }
    format_learned_input(source, &cs).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathx::{exp, logsumexp};
    use alloc::vec;

    #[test]
    fn tabular_returns_stored_entries_verbatim() {
        let mut s = TabularScorer::new(4).unwrap();
        s.insert(vec![0], vec![], &[(1, 0.5), (2, 0.5)]).unwrap();
        let row = s.score_step(&[0], &[]);
        assert_eq!(row.len(), 4);
        assert!((exp(row[1]) - 0.5).abs() < 1e-12);
        assert!((exp(row[2]) - 0.5).abs() < 1e-12);
        assert_eq!(row[0], f64::NEG_INFINITY);
        assert_eq!(row[3], f64::NEG_INFINITY);
    }

    #[test]
    fn tabular_unseen_context_backs_off_to_uniform() {
        let s = TabularScorer::new(5).unwrap();
        let row = s.score_step(&[0], &[1, 2]);
        for x in row {
            assert!((x - (-mathx::ln(5.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn tabular_prefers_the_longest_stored_suffix() {
        let mut s = TabularScorer::new(4).unwrap();
        s.insert(vec![0], vec![], &[(1, 1.0)]).unwrap();
        s.insert(vec![0], vec![2], &[(3, 1.0)]).unwrap();
        let row = s.score_step(&[0], &[1, 2]);
        assert!((exp(row[3]) - 1.0).abs() < 1e-12);
        let row = s.score_step(&[0], &[2, 1]);
        assert!((exp(row[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tabular_rejects_unnormalized_rows() {
        let mut s = TabularScorer::new(4).unwrap();
        let err = s.insert(vec![0], vec![], &[(1, 0.7)]).unwrap_err();
        assert_eq!(err, ScoreError::NotNormalized(0.7));
    }

    // Hand-computed add-alpha values for order 2, alpha 0.5, |V| = 8 and the
    // id corpus [[a,b],[a,c],[a,b]] with a=5, b=6, c=7, BOS=0, EOS=1:
    //   P(a|BOS)   = (3+0.5)/(3+0.5*8) = 3.5/7
    //   P(b|a)     = (2+0.5)/(3+4)     = 2.5/7
    //   P(c|a)     = (1+0.5)/(3+4)     = 1.5/7
    //   P(EOS|b)   = (2+0.5)/(2+4)     = 2.5/6
    //   P(EOS|c)   = (1+0.5)/(1+4)     = 1.5/5
    //   unseen ctx = uniform 1/8
    #[test]
    fn ngram_matches_hand_computed_add_alpha_counts() {
        let corpus = vec![vec![5, 6], vec![5, 7], vec![5, 6]];
        let s = NgramScorer::train(&corpus, 2, 0.5, 8, 0, 1).unwrap();
        let row = s.score_step(&[], &[]);
        assert!((exp(row[5]) - 3.5 / 7.0).abs() < 1e-12);
        assert!((exp(row[6]) - 0.5 / 7.0).abs() < 1e-12);
        let row = s.score_step(&[], &[5]);
        assert!((exp(row[6]) - 2.5 / 7.0).abs() < 1e-12);
        assert!((exp(row[7]) - 1.5 / 7.0).abs() < 1e-12);
        let row = s.score_step(&[], &[5, 6]);
        assert!((exp(row[1]) - 2.5 / 6.0).abs() < 1e-12);
        let row = s.score_step(&[], &[7]);
        assert!((exp(row[1]) - 1.5 / 5.0).abs() < 1e-12);
        assert!((exp(row[5]) - 0.5 / 5.0).abs() < 1e-12);
        // Id 2 never occurs as a context: uniform backoff.
        let row = s.score_step(&[], &[2]);
        for x in row {
            assert!((exp(x) - 1.0 / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scorers_keep_the_distribution_property() {
        let corpus = vec![vec![5, 6, 7], vec![5, 7]];
        let ngram = NgramScorer::train(&corpus, 3, 0.1, 8, 0, 1).unwrap();
        for prefix in [&[][..], &[5][..], &[5, 6][..], &[7, 7, 7][..]] {
            let row = ngram.score_step(&[], prefix);
            assert!(logsumexp(&row).abs() < 1e-6);
        }
        let mut tab = TabularScorer::new(6).unwrap();
        tab.insert(vec![0], vec![], &[(1, 0.25), (2, 0.75)])
            .unwrap();
        assert!(logsumexp(&tab.score_step(&[0], &[])).abs() < 1e-6);
        assert!(logsumexp(&tab.score_step(&[9], &[])).abs() < 1e-6);
    }

    #[test]
    fn learned_scorer_penalizes_listed_ids_and_renormalizes() {
        let v = Vocabulary::with_pieces(["\u{2581}a", "\u{2581}b"]).unwrap();
        let sp = v.specials();
        let mut tab = TabularScorer::new(v.len()).unwrap();
        let a = v.id("\u{2581}a").unwrap();
        let b = v.id("\u{2581}b").unwrap();
        tab.insert(vec![a], vec![], &[(a, 0.5), (b, 0.5)]).unwrap();
        let learned = EmulatedLearnedScorer::new(&tab, 1.0, sp.sep, sp.csep).unwrap();

        // Without SEP the wrapper is transparent.
        let plain = learned.score_step(&[a], &[]);
        assert_eq!(plain, tab.score_step(&[a], &[]));

        // With "a" constrained its probability drops and the row still sums
        // to one.
        let row = learned.score_step(&[a, sp.sep, a], &[]);
        assert!(logsumexp(&row).abs() < 1e-9);
        assert!(row[a] < row[b]);
        assert!((exp(row[a]) - exp(-1.0) / (1.0 + exp(-1.0))).abs() < 1e-9);
    }

    #[test]
    fn learned_scorer_reads_multiple_constraints_after_sep() {
        let v = Vocabulary::with_pieces(["\u{2581}a", "\u{2581}b", "\u{2581}c"]).unwrap();
        let sp = v.specials();
        let (a, b, c) = (
            v.id("\u{2581}a").unwrap(),
            v.id("\u{2581}b").unwrap(),
            v.id("\u{2581}c").unwrap(),
        );
        let mut tab = TabularScorer::new(v.len()).unwrap();
        tab.insert(vec![a], vec![], &[(a, 0.25), (b, 0.25), (c, 0.5)])
            .unwrap();
        let learned = EmulatedLearnedScorer::new(&tab, 5.0, sp.sep, sp.csep).unwrap();
        let row = learned.score_step(&[a, sp.sep, a, sp.csep, c], &[]);
        // Both constrained ids sink below the unconstrained one.
        assert!(row[a] < row[b]);
        assert!(row[c] < row[b]);
    }

    #[test]
    fn formats_the_two_constraint_example_exactly() {
        let v = Vocabulary::with_pieces(["\u{2581}dog", "\u{2581}cat"]).unwrap();
        let cs = ConstraintSet::from_surfaces(["dog", "cat"], &v).unwrap();
        let got = format_learned_input(
            "This is a sentence where we want to use synonyms for dog and cat.",
            &cs,
        )
        .unwrap();
        assert_eq!(
            got,
            "This is a sentence where we want to use synonyms for dog and cat. <sep> dog <c> cat"
        );
    }

    #[test]
    fn empty_constraints_leave_the_source_untouched() {
        let got = format_learned_input("plain line", &ConstraintSet::empty()).unwrap();
        assert_eq!(got, "plain line");
    }

    #[test]
    fn marker_counting_invariants() {
        let v = Vocabulary::with_pieces(["\u{2581}a", "\u{2581}b", "\u{2581}c"]).unwrap();
        let cs = ConstraintSet::from_surfaces(["a", "b", "c"], &v).unwrap();
        let got = format_learned_input("src", &cs).unwrap();
        assert_eq!(got.matches("<sep>").count(), 1);
        assert_eq!(got.matches("<c>").count(), 2);
    }

    #[test]
    fn sources_with_markers_are_rejected() {
        let err = format_learned_input("bad <sep> source", &ConstraintSet::empty()).unwrap_err();
        assert_eq!(err, FormatError::SourceContainsMarker);
    }

    #[test]
    fn parse_inverts_format() {
        let v = Vocabulary::with_pieces(["\u{2581}dog", "\u{2581}cat"]).unwrap();
        let cs = ConstraintSet::from_surfaces(["dog", "cat"], &v).unwrap();
        let line = format_learned_input("we like animals.", &cs).unwrap();
        let (src, constraints) = parse_learned_input(&line);
        assert_eq!(src, "we like animals.");
        assert_eq!(constraints, vec!["dog".to_string(), "cat".to_string()]);

        let (src, constraints) = parse_learned_input("no markers here");
        assert_eq!(src, "no markers here");
        assert!(constraints.is_empty());
    }

    #[test]
    fn encode_appends_ids_with_separators() {
        let v = Vocabulary::with_pieces(["\u{2581}be", "am", "\u{2581}dog"]).unwrap();
        let sp = v.specials();
        let cs = ConstraintSet::from_surfaces(["beam", "dog"], &v).unwrap();
        let src = vec![v.id("\u{2581}dog").unwrap()];
        let got = encode_learned_input(&src, &cs, &v);
        assert_eq!(
            got,
            vec![
                v.id("\u{2581}dog").unwrap(),
                sp.sep,
                v.id("\u{2581}be").unwrap(),
                v.id("am").unwrap(),
                sp.csep,
                v.id("\u{2581}dog").unwrap(),
            ]
        );
        assert_eq!(encode_learned_input(&src, &ConstraintSet::empty(), &v), src);
    }
}
