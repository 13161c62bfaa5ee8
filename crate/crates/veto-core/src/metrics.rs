//! Evaluation: corpus BLEU (single- and multi-reference), similarity BLEU,
//! and constraint coverage at surface, stem, and detokenized-string levels.
//!
//! BLEU is a from-scratch implementation of the usual corpus statistic
//! (clipped n-gram precision with union-max reference counts, closest-length
//! brevity penalty, exponential smoothing of zero counts). It is meant to be
//! faithful to that definition, not bit-compatible with any particular
//! external tool; the tokenizer is [`crate::text::word_tokenize`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraint::{stem_words, ConstraintSet};
use crate::mathx;
use crate::text::{stem, word_tokenize, StemmerConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("got {hyps} hypotheses but {refs} reference lists")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("sentence {0} has an empty reference list")]
    EmptyRefs(usize),
    #[error("cannot sample from an empty reference list")]
    NoReferences,
    #[error("invalid metric config: {0}")]
    InvalidConfig(&'static str),
}

/// Smoothing applied to n-gram orders with zero matches. Only the
/// exponential scheme is implemented: at each such order the running factor
/// doubles and the precision becomes 1/(factor * total).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Smoothing {
    #[default]
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BleuConfig {
    pub max_ngram: usize,
    pub smoothing: Smoothing,
    /// When false, both sides are casefolded before tokenization.
    pub case_sensitive: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self {
            max_ngram: 4,
            smoothing: Smoothing::Exponential,
            case_sensitive: true,
        }
    }
}

fn metric_tokens(s: &str, cfg: &BleuConfig) -> Vec<String> {
    if cfg.case_sensitive {
        word_tokenize(s)
    } else {
        word_tokenize(&s.to_lowercase())
    }
}

fn ngram_counts(toks: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts: BTreeMap<&[String], usize> = BTreeMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sufficient statistics of corpus BLEU; summing two stats evaluates the
/// concatenation of the two corpora.
#[derive(Debug, Clone, Default)]
struct BleuStats {
    sys_len: usize,
    ref_len: usize,
    correct: Vec<usize>,
    total: Vec<usize>,
}

impl BleuStats {
    fn new(max_ngram: usize) -> Self {
        Self {
            sys_len: 0,
            ref_len: 0,
            correct: alloc::vec![0; max_ngram],
            total: alloc::vec![0; max_ngram],
        }
    }

    fn accumulate(&mut self, hyp: &[String], refs: &[Vec<String>]) {
        self.sys_len += hyp.len();
        // Closest reference length; ties go to the shorter reference.
        self.ref_len += refs
            .iter()
            .map(|r| (r.len().abs_diff(hyp.len()), r.len()))
            .min()
            .map(|(_, l)| l)
            .unwrap_or(0);
        for n in 1..=self.total.len() {
            self.total[n - 1] += (hyp.len() + 1).saturating_sub(n);
            let hyp_counts = ngram_counts(hyp, n);
            let mut ref_max: BTreeMap<&[String], usize> = BTreeMap::new();
            for r in refs {
                for (g, c) in ngram_counts(r, n) {
                    let e = ref_max.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            self.correct[n - 1] += hyp_counts
                .iter()
                .map(|(g, c)| (*c).min(ref_max.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }

    fn score(&self) -> f64 {
        if self.sys_len == 0 {
            return 0.0;
        }
        let mut smooth = 1.0;
        let mut log_precision_sum = 0.0;
        for (correct, total) in self.correct.iter().zip(self.total.iter()) {
            let p = if *total == 0 {
                1.0
            } else if *correct == 0 {
                smooth *= 2.0;
                1.0 / (smooth * *total as f64)
            } else {
                *correct as f64 / *total as f64
            };
            log_precision_sum += mathx::ln(p);
        }
        let bp = if self.sys_len >= self.ref_len {
            1.0
        } else {
            mathx::exp(1.0 - self.ref_len as f64 / self.sys_len as f64)
        };
        100.0 * bp * mathx::exp(log_precision_sum / self.total.len() as f64)
    }
}

/// Corpus BLEU of `hyps` against per-sentence reference sets.
///
/// An identity corpus scores exactly 100.0. Note the converse direction only
/// holds with single references: under multiple references a hypothesis can
/// stitch together n-grams of different references (union-max clipping) and
/// still reach 100.
pub fn corpus_bleu<H, R>(hyps: &[H], refs: &[Vec<R>], cfg: &BleuConfig) -> Result<f64, MetricsError>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if cfg.max_ngram == 0 {
        return Err(MetricsError::InvalidConfig("max_ngram must be at least 1"));
    }
    if hyps.len() != refs.len() {
        return Err(MetricsError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    let mut stats = BleuStats::new(cfg.max_ngram);
    for (i, (h, rs)) in hyps.iter().zip(refs.iter()).enumerate() {
        if rs.is_empty() {
            return Err(MetricsError::EmptyRefs(i));
        }
        let hyp = metric_tokens(h.as_ref(), cfg);
        let refs: Vec<Vec<String>> = rs.iter().map(|r| metric_tokens(r.as_ref(), cfg)).collect();
        stats.accumulate(&hyp, &refs);
    }
    Ok(stats.score())
}

/// BLEU of one translation against the unconstrained baseline translation as
/// its sole reference: how close the constrained output stayed to the
/// original.
pub fn similarity_bleu(translation: &str, baseline: &str, cfg: &BleuConfig) -> f64 {
    corpus_bleu(&[translation], &[alloc::vec![baseline]], cfg)
        .expect("one hypothesis, one reference")
}

/// Deterministic sample of min(k, |refs|) references without replacement.
/// Relative order of the chosen references is preserved, and `k >= |refs|`
/// returns the full list unchanged.
pub fn sample_references<S: AsRef<str>>(
    refs: &[S],
    k: usize,
    seed: u64,
) -> Result<Vec<String>, MetricsError> {
    if refs.is_empty() {
        return Err(MetricsError::NoReferences);
    }
    if k == 0 {
        return Err(MetricsError::InvalidConfig(
            "sample size must be at least 1",
        ));
    }
    if k >= refs.len() {
        return Ok(refs.iter().map(|r| r.as_ref().to_string()).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut rng, refs.len(), k).into_vec();
    indices.sort_unstable();
    Ok(indices
        .into_iter()
        .map(|i| refs[i].as_ref().to_string())
        .collect())
}

/// Where a constraint must be found to count as covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CoverageLevel {
    /// Casefolded surface appears as a (contiguous) token sequence.
    Surface,
    /// Stemmed surface appears among stemmed translation tokens, so an
    /// inflected variant of a forbidden word still counts.
    Stem,
    /// Casefolded surface appears as a substring of the translation at
    /// non-alphanumeric boundaries; catches forms the metric tokenizer does
    /// not split (circumvention by re-segmentation or joining).
    Detok,
}

/// Per-sentence coverage tally; `total == 0` marks an unconstrained
/// sentence, which corpus averages skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceCoverage {
    pub matched: usize,
    pub total: usize,
}

impl SentenceCoverage {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }

    pub fn no_constraints(&self) -> bool {
        self.total == 0
    }
}

fn contains_subsequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty()
        && haystack
            .windows(needle.len().min(haystack.len().max(1)))
            .any(|w| w == needle)
        && haystack.len() >= needle.len()
}

fn contains_at_word_boundary(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let start = from + pos;
        let end = start + needle.len();
        let left_ok = haystack[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let right_ok = haystack[end..]
            .chars()
            .next()
            .is_none_or(|c| !c.is_alphanumeric());
        if left_ok && right_ok {
            return true;
        }
        from = start + needle.chars().next().map_or(1, char::len_utf8);
    }
    false
}

/// Whether one constraint counts as produced in `translation` at the given
/// level. Casing never matters.
pub fn constraint_covered(
    translation: &str,
    constraint: &crate::constraint::Constraint,
    level: CoverageLevel,
    stem_cfg: &StemmerConfig,
) -> bool {
    let surface = constraint.surface.to_lowercase();
    match level {
        CoverageLevel::Surface => {
            let haystack: Vec<String> = word_tokenize(&translation.to_lowercase());
            let needle = word_tokenize(&surface);
            contains_subsequence(&haystack, &needle)
        }
        CoverageLevel::Stem => {
            let haystack: Vec<String> = word_tokenize(&translation.to_lowercase())
                .into_iter()
                .map(|t| stem(&t, stem_cfg))
                .collect();
            // A pre-computed stem key is already stemmed; do not strip twice.
            let needle_src = match &constraint.stem_key {
                Some(k) => k.to_lowercase(),
                None => stem_words(&surface, stem_cfg),
            };
            let needle: Vec<String> = needle_src.split_whitespace().map(String::from).collect();
            contains_subsequence(&haystack, &needle)
        }
        CoverageLevel::Detok => contains_at_word_boundary(&translation.to_lowercase(), &surface),
    }
}

/// Type-level tally: each constraint counts once regardless of how often it
/// appears.
pub fn sentence_coverage(
    translation: &str,
    cs: &ConstraintSet,
    level: CoverageLevel,
    stem_cfg: &StemmerConfig,
) -> SentenceCoverage {
    let matched = cs
        .iter()
        .filter(|c| constraint_covered(translation, c, level, stem_cfg))
        .count();
    SentenceCoverage {
        matched,
        total: cs.len(),
    }
}

/// Fraction of constraints produced in the translation; 0.0 by convention
/// for an empty constraint set (see `SentenceCoverage::no_constraints`).
pub fn coverage(
    translation: &str,
    cs: &ConstraintSet,
    level: CoverageLevel,
    stem_cfg: &StemmerConfig,
) -> f64 {
    sentence_coverage(translation, cs, level, stem_cfg).ratio()
}

/// Mean per-sentence coverage over sentences that have constraints; `None`
/// when no sentence does.
pub fn corpus_coverage<S: AsRef<str>>(
    translations: &[S],
    css: &[ConstraintSet],
    level: CoverageLevel,
    stem_cfg: &StemmerConfig,
) -> Result<Option<f64>, MetricsError> {
    if translations.len() != css.len() {
        return Err(MetricsError::LengthMismatch {
            hyps: translations.len(),
            refs: css.len(),
        });
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (t, cs) in translations.iter().zip(css.iter()) {
        let sc = sentence_coverage(t.as_ref(), cs, level, stem_cfg);
        if !sc.no_constraints() {
            sum += sc.ratio();
            n += 1;
        }
    }
    Ok(if n == 0 { None } else { Some(sum / n as f64) })
}

/// Per-sentence evaluation record. The matched vectors align with
/// `constraints`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SentenceDiagnostics {
    pub constraints: Vec<String>,
    pub matched_surface: Vec<bool>,
    pub matched_stem: Vec<bool>,
    pub matched_detok: Vec<bool>,
    pub no_constraints: bool,
    /// Single-sentence BLEU against this sentence's references.
    pub bleu: Option<f64>,
    /// Single-sentence BLEU against the unconstrained baseline.
    pub sim_bleu: Option<f64>,
}

/// Corpus-level evaluation. Fields are `None` when their inputs were not
/// supplied (no references, no baselines, or no constrained sentences).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub bleu: Option<f64>,
    pub sim_bleu: Option<f64>,
    pub coverage_surface: Option<f64>,
    pub coverage_stem: Option<f64>,
    pub coverage_detok: Option<f64>,
    /// Reserved for scores computed by an external tool and merged in by the
    /// caller; never produced here.
    pub comet: Option<f64>,
    pub per_sentence: Vec<SentenceDiagnostics>,
}

/// Full corpus evaluation: BLEU against references, similarity against
/// baselines, and all three coverage levels, with per-sentence diagnostics.
pub fn evaluate_corpus<H: AsRef<str>>(
    hyps: &[H],
    refs: Option<&[Vec<String>]>,
    baselines: Option<&[String]>,
    css: &[ConstraintSet],
    stem_cfg: &StemmerConfig,
    bleu_cfg: &BleuConfig,
) -> Result<EvalReport, MetricsError> {
    if css.len() != hyps.len() {
        return Err(MetricsError::LengthMismatch {
            hyps: hyps.len(),
            refs: css.len(),
        });
    }
    if let Some(r) = refs {
        if r.len() != hyps.len() {
            return Err(MetricsError::LengthMismatch {
                hyps: hyps.len(),
                refs: r.len(),
            });
        }
    }
    if let Some(b) = baselines {
        if b.len() != hyps.len() {
            return Err(MetricsError::LengthMismatch {
                hyps: hyps.len(),
                refs: b.len(),
            });
        }
    }

    let bleu = match refs {
        Some(r) => Some(corpus_bleu(hyps, r, bleu_cfg)?),
        None => None,
    };
    let sim_bleu = match baselines {
        Some(b) => {
            let as_refs: Vec<Vec<String>> = b.iter().map(|x| alloc::vec![x.clone()]).collect();
            Some(corpus_bleu(hyps, &as_refs, bleu_cfg)?)
        }
        None => None,
    };

    let mut per_sentence = Vec::with_capacity(hyps.len());
    for (i, h) in hyps.iter().enumerate() {
        let h = h.as_ref();
        let cs = &css[i];
        let covered = |level| -> Vec<bool> {
            cs.iter()
                .map(|c| constraint_covered(h, c, level, stem_cfg))
                .collect()
        };
        per_sentence.push(SentenceDiagnostics {
            constraints: cs.iter().map(|c| c.surface.clone()).collect(),
            matched_surface: covered(CoverageLevel::Surface),
            matched_stem: covered(CoverageLevel::Stem),
            matched_detok: covered(CoverageLevel::Detok),
            no_constraints: cs.is_empty(),
            bleu: match refs {
                Some(r) => Some(corpus_bleu(&[h], &r[i..=i], bleu_cfg)?),
                None => None,
            },
            sim_bleu: baselines.map(|b| similarity_bleu(h, &b[i], bleu_cfg)),
        });
    }

    let ratio_of = |matched: fn(&SentenceDiagnostics) -> &Vec<bool>| -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for d in &per_sentence {
            if !d.no_constraints {
                let m = matched(d);
                sum += m.iter().filter(|&&x| x).count() as f64 / m.len() as f64;
                n += 1;
            }
        }
        if n == 0 {
            None
        } else {
            Some(sum / n as f64)
        }
    };

    Ok(EvalReport {
        bleu,
        sim_bleu,
        coverage_surface: ratio_of(|d| &d.matched_surface),
        coverage_stem: ratio_of(|d| &d.matched_stem),
        coverage_detok: ratio_of(|d| &d.matched_detok),
        comet: None,
        per_sentence,
    })
}
