//! Forbidden expressions: representation, extraction from translations and
//! score-ordered selection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::text::{detokenize, is_punctuation_token, segment, stem, word_tokenize, StemmerConfig};
use crate::vocab::{SubwordId, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("constraint {0:?} segments to an empty subword sequence")]
    EmptyConstraint(String),
    #[error("constraint {0:?} cannot be segmented with this vocabulary")]
    Unsegmentable(String),
    #[error("constraint subword id {0} is out of range")]
    InvalidId(SubwordId),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectError {
    #[error("no token score for constraint {0:?}")]
    MissingScore(String),
    #[error("selection ratio {0} is outside [0, 1]")]
    InvalidRatio(f64),
}

/// One forbidden expression: a non-empty subword sequence and its surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub subword_ids: Vec<SubwordId>,
    pub surface: String,
    pub stem_key: Option<String>,
}

/// An ordered, de-duplicated collection of constraints plus the union of
/// their subword ids (the "flat" view used by the single-subword methods).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
    flat: BTreeSet<SubwordId>,
}

impl ConstraintSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Segments each surface. Duplicate subword sequences are dropped
    /// (first occurrence wins); surfaces are stored in detokenized
    /// (whitespace-normalized) form so `detokenize(subword_ids) == surface`.
    pub fn from_surfaces<I, S>(surfaces: I, vocab: &Vocabulary) -> Result<Self, ConstraintError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut constraints = Vec::new();
        for s in surfaces {
            let s = s.as_ref();
            let ids =
                segment(s, vocab).map_err(|_| ConstraintError::Unsegmentable(s.to_string()))?;
            if ids.is_empty() {
                return Err(ConstraintError::EmptyConstraint(s.to_string()));
            }
            let surface =
                detokenize(&ids, vocab).expect("ids produced by segment are always valid");
            constraints.push(Constraint {
                subword_ids: ids,
                surface,
                stem_key: None,
            });
        }
        Ok(Self::from_constraints(constraints))
    }

    /// Builds constraints directly from id sequences; surfaces are their
    /// detokenizations. Used where constraints are defined at the subword
    /// level rather than as text.
    pub fn from_id_sequences(
        seqs: &[Vec<SubwordId>],
        vocab: &Vocabulary,
    ) -> Result<Self, ConstraintError> {
        let mut constraints = Vec::new();
        for ids in seqs {
            if ids.is_empty() {
                return Err(ConstraintError::EmptyConstraint(String::new()));
            }
            let surface = detokenize(ids, vocab).map_err(|_| {
                ConstraintError::InvalidId(
                    *ids.iter().find(|&&i| vocab.piece(i).is_none()).unwrap(),
                )
            })?;
            constraints.push(Constraint {
                subword_ids: ids.clone(),
                surface,
                stem_key: None,
            });
        }
        Ok(Self::from_constraints(constraints))
    }

    pub(crate) fn from_constraints(list: Vec<Constraint>) -> Self {
        let mut seen: BTreeSet<Vec<SubwordId>> = BTreeSet::new();
        let mut constraints = Vec::new();
        let mut flat = BTreeSet::new();
        for c in list {
            debug_assert!(!c.subword_ids.is_empty());
            if seen.insert(c.subword_ids.clone()) {
                flat.extend(c.subword_ids.iter().copied());
                constraints.push(c);
            }
        }
        Self { constraints, flat }
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn flat_subword_ids(&self) -> &BTreeSet<SubwordId> {
        &self.flat
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Constraint> {
        self.constraints.iter()
    }

    /// Union of two sets, left operand's order first. Duplicates dropped.
    pub fn merged(&self, other: &Self) -> Self {
        let mut list = self.constraints.clone();
        list.extend(other.constraints.iter().cloned());
        Self::from_constraints(list)
    }

    /// First `n` constraints in order.
    pub fn truncated(&self, n: usize) -> Self {
        Self::from_constraints(self.constraints.iter().take(n).cloned().collect())
    }
}

/// How many of the available constraints to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    /// Use ceil(r * n) of n candidates, r in [0, 1].
    Fraction(f64),
    /// Use exactly min(1, n).
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionPolicy {
    pub ratio: Ratio,
}

impl SelectionPolicy {
    pub fn fraction(r: f64) -> Result<Self, SelectError> {
        if !(0.0..=1.0).contains(&r) {
            return Err(SelectError::InvalidRatio(r));
        }
        Ok(Self {
            ratio: Ratio::Fraction(r),
        })
    }

    pub fn single() -> Self {
        Self {
            ratio: Ratio::Single,
        }
    }

    /// ceil(r*n) with a small epsilon guard so float fuzz like
    /// 0.3 * 10 = 2.9999999999999996 still yields exactly ceil(3).
    pub fn count(&self, n: usize) -> usize {
        match self.ratio {
            Ratio::Fraction(r) => {
                let raw = crate::mathx::ceil(r * n as f64 - 1e-9);
                raw.max(0.0) as usize
            }
            Ratio::Single => n.min(1),
        }
    }
}

/// Tokens of `hypothesis` that are punctuation-free, not stopwords and absent
/// (casefolded) from every reference's token set, in first-appearance order.
/// `stopwords` must be casefolded.
pub fn extract_refinement_constraints(
    hypothesis: &str,
    references: &[String],
    stopwords: &BTreeSet<String>,
    vocab: &Vocabulary,
) -> ConstraintSet {
    let mut ref_tokens: BTreeSet<String> = BTreeSet::new();
    for r in references {
        ref_tokens.extend(word_tokenize(r).iter().map(|t| t.to_lowercase()));
    }
    extract_content_tokens(hypothesis, stopwords, Some(&ref_tokens), vocab)
}

/// All content tokens (non-punctuation, non-stopword) of the baseline
/// translation, in first-appearance order.
pub fn extract_paraphrase_constraints(
    baseline_translation: &str,
    stopwords: &BTreeSet<String>,
    vocab: &Vocabulary,
) -> ConstraintSet {
    extract_content_tokens(baseline_translation, stopwords, None, vocab)
}

fn extract_content_tokens(
    text: &str,
    stopwords: &BTreeSet<String>,
    exclude: Option<&BTreeSet<String>>,
    vocab: &Vocabulary,
) -> ConstraintSet {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut kept: Vec<String> = Vec::new();
    for tok in word_tokenize(text) {
        if is_punctuation_token(&tok) {
            continue;
        }
        let folded = tok.to_lowercase();
        if stopwords.contains(&folded) {
            continue;
        }
        if let Some(ex) = exclude {
            if ex.contains(&folded) {
                continue;
            }
        }
        if seen.insert(folded) {
            kept.push(tok);
        }
    }
    // Tokens a strict-UNK vocabulary cannot segment are skipped, not fatal:
    // extraction must stay total.
    kept.retain(|t| match segment(t, vocab) {
        Ok(ids) => !ids.is_empty(),
        Err(_) => {
            log::warn!("skipping unsegmentable constraint candidate {:?}", t);
            false
        }
    });
    ConstraintSet::from_surfaces(kept.iter(), vocab)
        .expect("every kept token was just segmented successfully")
}

/// Sorts candidates ascending by score (ties by surface, lexicographic) and
/// keeps the first `policy.count(n)`. Scores are keyed by casefolded surface.
pub fn select_constraints(
    candidates: &ConstraintSet,
    token_scores: &BTreeMap<String, f64>,
    policy: &SelectionPolicy,
) -> Result<ConstraintSet, SelectError> {
    if let Ratio::Fraction(r) = policy.ratio {
        if !(0.0..=1.0).contains(&r) {
            return Err(SelectError::InvalidRatio(r));
        }
    }
    let mut scored: Vec<(f64, &Constraint)> = Vec::with_capacity(candidates.len());
    for c in candidates.iter() {
        let score = token_scores
            .get(&c.surface.to_lowercase())
            .copied()
            .ok_or_else(|| SelectError::MissingScore(c.surface.clone()))?;
        scored.push((score, c));
    }
    scored.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.surface.cmp(&b.1.surface))
    });
    let k = policy.count(candidates.len());
    Ok(ConstraintSet::from_constraints(
        scored.into_iter().take(k).map(|(_, c)| c.clone()).collect(),
    ))
}

/// Replaces each constraint's surface by its stem, re-segments, and fills
/// `stem_key`. Multi-word surfaces are stemmed word by word.
pub fn stem_constraints(
    cs: &ConstraintSet,
    cfg: &StemmerConfig,
    vocab: &Vocabulary,
) -> ConstraintSet {
    let mut out = Vec::with_capacity(cs.len());
    for c in cs.iter() {
        let stemmed = stem_words(&c.surface, cfg);
        match segment(&stemmed, vocab) {
            Ok(ids) if !ids.is_empty() => {
                let surface = detokenize(&ids, vocab).expect("segment output is valid");
                let stem_key = Some(stem_words(&surface, cfg));
                out.push(Constraint {
                    subword_ids: ids,
                    surface,
                    stem_key,
                });
            }
            _ => {
                // Unsegmentable stem (possible under UnkPolicy::Error): keep
                // the original constraint, only fill the stem key.
                log::warn!(
                    "stemmed form {:?} is unsegmentable; keeping original",
                    stemmed
                );
                let mut c = c.clone();
                c.stem_key = Some(stemmed);
                out.push(c);
            }
        }
    }
    ConstraintSet::from_constraints(out)
}

pub(crate) fn stem_words(surface: &str, cfg: &StemmerConfig) -> String {
    let mut parts: Vec<String> = Vec::new();
    for w in surface.split_whitespace() {
        parts.push(stem(w, cfg));
    }
    parts.join(" ")
}

/// Per-word summed subword log probabilities of a decoded sequence, keyed by
/// casefolded surface. When a word occurs more than once the minimum (most
/// negative) sum is kept, so the riskiest occurrence drives selection.
pub fn token_scores_from_subwords(
    ids: &[SubwordId],
    logprobs: &[f64],
    vocab: &Vocabulary,
) -> BTreeMap<String, f64> {
    debug_assert_eq!(ids.len(), logprobs.len());
    let marker = vocab.marker();
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    let mut surface = String::new();
    let mut sum = 0.0;
    let mut flush = |surface: &mut String, sum: &mut f64| {
        if !surface.is_empty() {
            let key = surface.to_lowercase();
            let entry = scores.entry(key).or_insert(f64::INFINITY);
            *entry = entry.min(*sum);
        }
        surface.clear();
        *sum = 0.0;
    };
    for (i, &id) in ids.iter().enumerate() {
        let Some(piece) = vocab.piece(id) else {
            continue;
        };
        if vocab.is_special(id) {
            flush(&mut surface, &mut sum);
            continue;
        }
        match piece.strip_prefix(marker) {
            Some(rest) => {
                flush(&mut surface, &mut sum);
                surface.push_str(rest);
                sum += logprobs[i];
            }
            None => {
                surface.push_str(piece);
                sum += logprobs[i];
            }
        }
    }
    flush(&mut surface, &mut sum);
    scores
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mk(pieces: &[&str]) -> Vocabulary {
        Vocabulary::with_pieces(pieces.iter().copied()).unwrap()
    }

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn flat_ids_are_the_union() {
        let v = mk(&["\u{2581}deco", "ding", "\u{2581}be", "am", "\u{2581}search"]);
        let cs = ConstraintSet::from_surfaces(["decoding", "beam search"], &v).unwrap();
        let want: BTreeSet<SubwordId> =
            ["\u{2581}deco", "ding", "\u{2581}be", "am", "\u{2581}search"]
                .iter()
                .map(|p| v.id(p).unwrap())
                .collect();
        assert_eq!(*cs.flat_subword_ids(), want);
    }

    #[test]
    fn duplicates_are_dropped() {
        let v = mk(&["\u{2581}dog"]);
        let cs = ConstraintSet::from_surfaces(["dog", "dog"], &v).unwrap();
        assert_eq!(cs.len(), 1);
    }

    #[test]
    fn surface_matches_detokenized_ids() {
        let v = mk(&["\u{2581}be", "am", "\u{2581}search"]);
        let cs = ConstraintSet::from_surfaces(["beam  search"], &v).unwrap();
        let c = &cs.constraints()[0];
        assert_eq!(c.surface, "beam search");
        assert_eq!(detokenize(&c.subword_ids, &v).unwrap(), c.surface);
    }

    #[test]
    fn empty_surface_is_rejected() {
        let v = mk(&["\u{2581}a"]);
        let err = ConstraintSet::from_surfaces([""], &v).unwrap_err();
        assert_eq!(err, ConstraintError::EmptyConstraint("".into()));
    }

    #[test]
    fn refinement_keeps_tokens_absent_from_all_references() {
        let v = mk(&["\u{2581}rozzuřit", "\u{2581}média", "\u{2581}mohla"]);
        let cs = extract_refinement_constraints(
            "mohla rozzuřit média",
            &["mohla naštvat média".to_string()],
            &BTreeSet::new(),
            &v,
        );
        let surfaces: Vec<&str> = cs.iter().map(|c| c.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["rozzuřit"]);
    }

    #[test]
    fn refinement_of_identical_sentences_is_empty() {
        let v = mk(&["\u{2581}a", "\u{2581}b"]);
        let cs = extract_refinement_constraints("a b", &["a b".to_string()], &BTreeSet::new(), &v);
        assert!(cs.is_empty());
    }

    #[test]
    fn paraphrase_extraction_filters_stopwords_and_punctuation() {
        let v = mk(&[
            "\u{2581}avoided",
            "\u{2581}ball",
            "\u{2581}he",
            "\u{2581}the",
        ]);
        let cs = extract_paraphrase_constraints("He avoided the ball .", &set(&["he", "the"]), &v);
        let surfaces: Vec<&str> = cs.iter().map(|c| c.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["avoided", "ball"]);
    }

    #[test]
    fn all_stopword_sentence_yields_nothing() {
        let v = mk(&["\u{2581}he", "\u{2581}the"]);
        let cs = extract_paraphrase_constraints("the he the", &set(&["he", "the"]), &v);
        assert!(cs.is_empty());
    }

    #[test]
    fn six_candidates_at_half_ratio_selects_three() {
        let v = mk(&[
            "\u{2581}a",
            "\u{2581}b",
            "\u{2581}c",
            "\u{2581}d",
            "\u{2581}e",
            "\u{2581}f",
        ]);
        let cs = ConstraintSet::from_surfaces(["a", "b", "c", "d", "e", "f"], &v).unwrap();
        let scores: BTreeMap<String, f64> = [
            ("a", -0.1),
            ("b", -0.5),
            ("c", -2.0),
            ("d", -0.3),
            ("e", -1.5),
            ("f", -0.2),
        ]
        .iter()
        .map(|(k, s)| (k.to_string(), *s))
        .collect();
        let got =
            select_constraints(&cs, &scores, &SelectionPolicy::fraction(0.5).unwrap()).unwrap();
        let surfaces: Vec<&str> = got.iter().map(|c| c.surface.as_str()).collect();
        // The three lowest-scoring candidates, ascending.
        assert_eq!(surfaces, vec!["c", "e", "b"]);
    }

    #[test]
    fn ratio_zero_selects_nothing() {
        let v = mk(&["\u{2581}a"]);
        let cs = ConstraintSet::from_surfaces(["a"], &v).unwrap();
        let scores: BTreeMap<String, f64> = [("a".to_string(), -1.0)].into_iter().collect();
        let got =
            select_constraints(&cs, &scores, &SelectionPolicy::fraction(0.0).unwrap()).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn single_selects_the_lowest_scoring_candidate() {
        let v = mk(&["\u{2581}a", "\u{2581}b", "\u{2581}c"]);
        let cs = ConstraintSet::from_surfaces(["a", "b", "c"], &v).unwrap();
        let scores: BTreeMap<String, f64> = [("a", -0.1), ("b", -3.0), ("c", -1.0)]
            .iter()
            .map(|(k, s)| (k.to_string(), *s))
            .collect();
        let got = select_constraints(&cs, &scores, &SelectionPolicy::single()).unwrap();
        let surfaces: Vec<&str> = got.iter().map(|c| c.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["b"]);
    }

    #[test]
    fn missing_score_is_an_error() {
        let v = mk(&["\u{2581}a"]);
        let cs = ConstraintSet::from_surfaces(["a"], &v).unwrap();
        let err =
            select_constraints(&cs, &BTreeMap::new(), &SelectionPolicy::single()).unwrap_err();
        assert_eq!(err, SelectError::MissingScore("a".into()));
    }

    #[test]
    fn equal_scores_break_ties_lexicographically() {
        let v = mk(&["\u{2581}x", "\u{2581}m", "\u{2581}k"]);
        let cs = ConstraintSet::from_surfaces(["x", "m", "k"], &v).unwrap();
        let scores: BTreeMap<String, f64> = [("x", -1.0), ("m", -1.0), ("k", -1.0)]
            .iter()
            .map(|(k, s)| (k.to_string(), *s))
            .collect();
        let got =
            select_constraints(&cs, &scores, &SelectionPolicy::fraction(0.5).unwrap()).unwrap();
        let surfaces: Vec<&str> = got.iter().map(|c| c.surface.as_str()).collect();
        // ceil(0.5 * 3) = 2 selected, ordered by casefolded surface.
        assert_eq!(surfaces, vec!["k", "m"]);
    }

    #[test]
    fn stemming_replaces_surfaces_and_resegments() {
        let v = mk(&["\u{2581}útvar", "ového"]);
        let cfg = StemmerConfig::new(vec![("ového".into(), 2)], true);
        let cs = ConstraintSet::from_surfaces(["útvarového"], &v).unwrap();
        let stemmed = stem_constraints(&cs, &cfg, &v);
        let c = &stemmed.constraints()[0];
        assert_eq!(c.surface, "útvar");
        assert_eq!(c.subword_ids, vec![v.id("\u{2581}útvar").unwrap()]);
        assert_eq!(c.stem_key.as_deref(), Some("útvar"));
    }

    #[test]
    fn stemming_leaves_unmatched_words_unchanged() {
        let v = mk(&["\u{2581}ball"]);
        let cfg = StemmerConfig::new(vec![("ového".into(), 2)], true);
        let cs = ConstraintSet::from_surfaces(["ball"], &v).unwrap();
        let stemmed = stem_constraints(&cs, &cfg, &v);
        assert_eq!(stemmed.constraints()[0].surface, "ball");
        assert_eq!(stemmed.constraints()[0].stem_key.as_deref(), Some("ball"));
    }

    #[test]
    fn token_scores_sum_subwords_and_keep_the_minimum() {
        let v = mk(&["\u{2581}be", "am", "\u{2581}search"]);
        let ids = vec![
            v.id("\u{2581}be").unwrap(),
            v.id("am").unwrap(),
            v.id("\u{2581}search").unwrap(),
            v.id("\u{2581}be").unwrap(),
            v.id("am").unwrap(),
        ];
        let lps = vec![-0.5, -0.25, -1.0, -2.0, -0.5];
        let scores = token_scores_from_subwords(&ids, &lps, &v);
        assert_eq!(scores.len(), 2);
        assert!((scores["beam"] - (-2.5)).abs() < 1e-12);
        assert!((scores["search"] - (-1.0)).abs() < 1e-12);
    }
}
