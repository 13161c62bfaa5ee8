//! Beam search with negative-constraint mechanisms: subword and
//! multi-subword beam filtering, and subword and whole-token score penalties.

use alloc::vec::Vec;

use crate::constraint::ConstraintSet;
use crate::score::Scorer;
use crate::trie::{build_trie, Completion, ConstraintTrie, TrieCursor};
use crate::vocab::SubwordId;

/// Which constraint mechanism the decoder applies per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    /// Unconstrained beam search.
    None,
    /// Drop an expansion whose token is any constraint subword and whose log
    /// probability falls below the threshold.
    FilterSubword,
    /// Drop an expansion only when it completes a whole constraint whose
    /// matched-span log probability falls below the threshold.
    FilterMultisubword,
    /// Subtract the penalty from every constraint subword at every step.
    PenaltySubword,
    /// Subtract the penalty only from ids that would complete a constraint
    /// given the hypothesis's current trie position.
    PenaltyWholetoken,
}

impl Method {
    pub fn uses_threshold(&self) -> bool {
        matches!(self, Method::FilterSubword | Method::FilterMultisubword)
    }

    pub fn uses_penalty(&self) -> bool {
        matches!(self, Method::PenaltySubword | Method::PenaltyWholetoken)
    }
}

/// Decoder controls. Penalty methods ignore `threshold`; filter methods
/// ignore `penalty`.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub max_len: usize,
    pub method: Method,
    /// Non-negative, in log-probability units.
    pub penalty: f64,
    /// At most 0 (negative infinity disables filtering), log-prob units.
    pub threshold: f64,
    /// Divide by token count for the final ranking only.
    pub length_norm: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_size: 4,
            max_len: 32,
            method: Method::None,
            penalty: 0.0,
            threshold: f64::NEG_INFINITY,
            length_norm: false,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_size == 0 {
            return Err(DecodeError::InvalidConfig("beam_size must be at least 1"));
        }
        if self.max_len == 0 {
            return Err(DecodeError::InvalidConfig("max_len must be at least 1"));
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(DecodeError::InvalidConfig(
                "penalty must be a non-negative finite number",
            ));
        }
        // NaN must be rejected too, hence the explicit check.
        if self.threshold.is_nan() || self.threshold > 0.0 {
            return Err(DecodeError::InvalidConfig(
                "threshold must be at most 0 (or negative infinity)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("source is empty but the scorer requires one")]
    EmptySource,
    #[error("invalid decode config: {0}")]
    InvalidConfig(&'static str),
    #[error("scorer returned {got} log probabilities, expected {want}")]
    ScorerVocabMismatch { got: usize, want: usize },
}

/// A partial or finished output sequence.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub tokens: Vec<SubwordId>,
    /// Adjusted (post-penalty) per-step log probabilities, aligned with
    /// `tokens`; `cum_score` is their sum.
    pub step_logprobs: Vec<f64>,
    pub cum_score: f64,
    pub cursor: TrieCursor,
    pub finished: bool,
    /// Set only on an over-constrained fallback hypothesis.
    pub constraint_violated: bool,
}

impl Hypothesis {
    fn initial() -> Self {
        Self {
            tokens: Vec::new(),
            step_logprobs: Vec::new(),
            cum_score: 0.0,
            cursor: TrieCursor::new(),
            finished: false,
            constraint_violated: false,
        }
    }

    /// Ranking score: cumulative, optionally length-normalized.
    pub fn score(&self, length_norm: bool) -> f64 {
        if length_norm && !self.tokens.is_empty() {
            self.cum_score / self.tokens.len() as f64
        } else {
            self.cum_score
        }
    }
}

/// N-best finished hypotheses, best first.
#[derive(Debug, Clone)]
pub struct DecodeOutput {
    pub hypotheses: Vec<Hypothesis>,
    /// True when filtering emptied the beam and the fallback rule produced
    /// the result.
    pub fallback_used: bool,
}

/// One candidate continuation of a hypothesis, as consumed by the filter
/// operations.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub token: SubwordId,
    /// Unadjusted model log probability of `token`.
    pub logprob: f64,
    /// Post-penalty log probability (equals `logprob` for filter methods).
    pub adjusted: f64,
    /// Constraint completions triggered by `token`, if tracked.
    pub completions: Vec<Completion>,
}

/// Removes expansions whose token is a constraint subword with log
/// probability below the threshold.
pub fn apply_filter_subword(
    expansions: Vec<Expansion>,
    cs: &ConstraintSet,
    threshold: f64,
) -> Vec<Expansion> {
    expansions
        .into_iter()
        .filter(|e| !(cs.flat_subword_ids().contains(&e.token) && e.logprob < threshold))
        .collect()
}

/// Removes expansions that complete at least one constraint whose matched
/// span's summed log probability is below the threshold.
pub fn apply_filter_multisubword(expansions: Vec<Expansion>, threshold: f64) -> Vec<Expansion> {
    expansions
        .into_iter()
        .filter(|e| !e.completions.iter().any(|c| c.score < threshold))
        .collect()
}

/// Subtracts the penalty from every constraint subword id.
pub fn apply_penalty_subword(logits: &[f64], cs: &ConstraintSet, penalty: f64) -> Vec<f64> {
    let mut out = logits.to_vec();
    for &id in cs.flat_subword_ids() {
        if id < out.len() {
            out[id] -= penalty;
        }
    }
    out
}

/// Subtracts the penalty from exactly the ids that would complete a
/// constraint given the cursor position. An id completing several
/// constraints at once is penalized once, like a flat-set id.
pub fn apply_penalty_wholetoken(
    logits: &[f64],
    trie: &ConstraintTrie,
    cursor: &TrieCursor,
    penalty: f64,
) -> Vec<f64> {
    let mut out = logits.to_vec();
    let ids: alloc::collections::BTreeSet<SubwordId> = trie
        .penalized_ids(cursor)
        .into_iter()
        .map(|(id, _)| id)
        .collect();
    for id in ids {
        if id < out.len() {
            out[id] -= penalty;
        }
    }
    out
}

fn removes(method: Method, cs: &ConstraintSet, threshold: f64, e: &Expansion) -> bool {
    match method {
        Method::FilterSubword => cs.flat_subword_ids().contains(&e.token) && e.logprob < threshold,
        Method::FilterMultisubword => e.completions.iter().any(|c| c.score < threshold),
        _ => false,
    }
}

/// Ordering used everywhere: score descending, then token sequence ascending.
fn rank(a: &Hypothesis, b: &Hypothesis, length_norm: bool) -> core::cmp::Ordering {
    b.score(length_norm)
        .total_cmp(&a.score(length_norm))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Beam search over the scorer's distributions with the configured
/// constraint mechanism applied per step.
///
/// Properties guaranteed here and exercised by the test suites:
/// - penalty 0 and threshold negative-infinity reproduce unconstrained
///   decoding token for token;
/// - identical inputs yield identical n-best lists (ties broken by token
///   sequence);
/// - tokens with log probability negative infinity are never expanded;
/// - when filtering empties the beam, the best removed expansion of the
///   previous beam is returned flagged `constraint_violated` (fallback).
pub fn decode(
    source: &[SubwordId],
    scorer: &dyn Scorer,
    cfg: &DecodeConfig,
    cs: &ConstraintSet,
    eos: SubwordId,
) -> Result<DecodeOutput, DecodeError> {
    cfg.validate()?;
    if source.is_empty() && scorer.requires_source() {
        return Err(DecodeError::EmptySource);
    }
    let trie = build_trie(cs).expect("constraint sets never hold empty sequences");
    let vocab_size = scorer.vocab_size();
    let track_completions = cfg.method == Method::FilterMultisubword;

    let mut beam = alloc::vec![Hypothesis::initial()];
    for _step in 0..cfg.max_len {
        if beam.iter().all(|h| h.finished) {
            break;
        }
        let mut candidates: Vec<Hypothesis> = Vec::new();
        let mut removed: Vec<Hypothesis> = Vec::new();
        for hyp in &beam {
            if hyp.finished {
                candidates.push(hyp.clone());
                continue;
            }
            let logits = scorer.score_step(source, &hyp.tokens);
            if logits.len() != vocab_size {
                return Err(DecodeError::ScorerVocabMismatch {
                    got: logits.len(),
                    want: vocab_size,
                });
            }
            let adjusted = match cfg.method {
                Method::PenaltySubword => apply_penalty_subword(&logits, cs, cfg.penalty),
                Method::PenaltyWholetoken => {
                    apply_penalty_wholetoken(&logits, &trie, &hyp.cursor, cfg.penalty)
                }
                _ => logits.clone(),
            };
            for token in 0..vocab_size {
                if logits[token] == f64::NEG_INFINITY {
                    continue;
                }
                let completions = if track_completions {
                    trie.advance_cursor(&hyp.cursor, token, logits[token]).1
                } else {
                    Vec::new()
                };
                let expansion = Expansion {
                    token,
                    logprob: logits[token],
                    adjusted: adjusted[token],
                    completions,
                };
                let extended = extend(hyp, &expansion, &trie, cfg, eos);
                if removes(cfg.method, cs, cfg.threshold, &expansion) {
                    removed.push(extended);
                } else {
                    candidates.push(extended);
                }
            }
        }
        if candidates.is_empty() {
            // Over-constrained: every expansion of every hypothesis was
            // filtered. Return the best removed expansion, flagged. With a
            // proper scorer `removed` cannot be empty here (some token always
            // has finite log probability), but stay total regardless.
            let mut fallback = match removed.into_iter().min_by(|a, b| rank(a, b, false)) {
                Some(h) => h,
                None => beam.swap_remove(0),
            };
            fallback.finished = true;
            fallback.constraint_violated = true;
            return Ok(DecodeOutput {
                hypotheses: alloc::vec![fallback],
                fallback_used: true,
            });
        }
        candidates.sort_by(|a, b| rank(a, b, false));
        candidates.truncate(cfg.beam_size);
        beam = candidates;
    }
    beam.sort_by(|a, b| rank(a, b, cfg.length_norm));
    Ok(DecodeOutput {
        hypotheses: beam,
        fallback_used: false,
    })
}

fn extend(
    hyp: &Hypothesis,
    e: &Expansion,
    trie: &ConstraintTrie,
    cfg: &DecodeConfig,
    eos: SubwordId,
) -> Hypothesis {
    let mut tokens = hyp.tokens.clone();
    tokens.push(e.token);
    let mut step_logprobs = hyp.step_logprobs.clone();
    step_logprobs.push(e.adjusted);
    // The cursor always accumulates unadjusted model log probabilities; only
    // hypothesis ranking sees the penalty.
    let (cursor, _) = trie.advance_cursor(&hyp.cursor, e.token, e.logprob);
    let finished = e.token == eos || tokens.len() >= cfg.max_len;
    Hypothesis {
        cum_score: hyp.cum_score + e.adjusted,
        tokens,
        step_logprobs,
        cursor,
        finished,
        constraint_violated: hyp.constraint_violated,
    }
}
